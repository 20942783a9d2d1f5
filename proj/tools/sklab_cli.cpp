#include <iostream>

#include "sklab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sklab::run_cli(args, std::cout, std::cerr);
}
