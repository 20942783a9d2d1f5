#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sklab/cli.hpp"
#include "sklab/config.hpp"
#include "sklab/errors.hpp"

using namespace sklab;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "sklab");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sklab_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void eval(const ModelSpec& spec, double x, int label, double& b, double& lambda, double& sigma) {
  const std::vector<double> xv{x};
  std::vector<double> out(1);
  spec.coefficients.drift(0.0, xv, EnvView{label, {}}, out);
  b = out[0];
  lambda = spec.coefficients.friction(0.0, xv, 0.1);
  spec.coefficients.diffusion(0.0, xv, 0.1, out);
  sigma = out[0];
}

}  // namespace

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("rate-ladder") != std::string::npos);
}

TEST_CASE("h-functional prints the principal eigenvalue") {
  const auto r = run({"h-functional", "--Q", "-1,1;2,-2", "--g", "1,0"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == "0.7320508\n");
}

TEST_CASE("usage errors exit 2") {
  auto r = run({"frobnicate"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("frobnicate") != std::string::npos);
  r = run({});
  CHECK(r.code == kExitUsage);
  r = run({"simulate", "--preset", "constant-schilder", "--steps", "abc"});
  CHECK(r.code == kExitUsage);
  r = run({"simulate", "--preset", "constant-schilder", "--scheme", "leapfrog"});
  CHECK(r.code == kExitUsage);
  r = run({"simulate", "stray"});
  CHECK(r.code == kExitUsage);
}

TEST_CASE("bundled presets") {
  for (const auto& name : {"constant-schilder", "two-state-averaging", "jump-equiv", "fast-ou"}) {
    CHECK_NOTHROW(load_preset(name));
  }
  const auto schilder = load_preset("constant-schilder");
  CHECK(schilder.coefficients.d == 1);
  CHECK(schilder.coefficients.m == 1);
  double b, lambda, sigma;
  eval(schilder, 0.7, 0, b, lambda, sigma);
  CHECK(b == 0.0);
  CHECK(lambda == 1.0);
  CHECK(sigma == 1.0);

  const auto two = load_preset("two-state-averaging");
  const auto& Q = std::get<MarkovSwitching>(two.environment).Q;
  CHECK(Q(0, 0) == -1.0);
  CHECK(Q(0, 1) == 1.0);
  CHECK(Q(1, 0) == 2.0);
  CHECK(Q(1, 1) == -2.0);
  eval(two, 0.0, 0, b, lambda, sigma);
  CHECK(b == 3.0);
  eval(two, 0.0, 1, b, lambda, sigma);
  CHECK(b == -3.0);
  CHECK_THROWS_AS(load_preset("nope"), Error);
}

TEST_CASE("config errors name the culprit") {
  const std::string typo = "name: t\ndim: 1\ndrift:\n  family: constant\nfriction:\n  lamda: 1\nsigma: 1\n";
  try {
    parse_config(typo, "typo.yaml");
    FAIL("expected UnknownKey");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownKey);
    CHECK(std::string(e.what()).find("lamda") != std::string::npos);
    CHECK(std::string(e.what()).find("typo.yaml:6") != std::string::npos);
  }
  try {
    parse_config("name: t\ndrift: [1, 2\n", "bad.yaml");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("bad.yaml:") != std::string::npos);
  }
  try {
    parse_config("dim: 1\n", "anon.yaml");
    FAIL("expected MissingField");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingField);
  }
}

TEST_CASE("invalid models exit 1 without a stack dump") {
  const auto dir = scratch("invalid");
  fs::create_directories(dir);
  const auto cfg = dir / "bad.yaml";
  std::ofstream(cfg) << "name: bad\ndim: 1\ndrift:\n  family: constant\nfriction:\n  lambda0: -1\nsigma: 1\n";
  const auto r = run({"simulate", "--config", cfg.string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitFailure);
  CHECK(r.err.find("NonpositiveFriction") != std::string::npos);
  REQUIRE(fs::exists(dir / "out" / "manifest.json"));
  const auto m = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(m["error"].is_string());
  const auto check = run({"env-check", "--config", cfg.string()});
  CHECK(check.code == kExitFailure);
  CHECK(check.out.find("INVALID") != std::string::npos);
}

TEST_CASE("simulate writes a manifest and reproducible CSVs") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> base{"simulate", "--preset", "two-state-averaging", "--eps", "0.2", "--steps", "50", "--seed", "9"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string()});
  REQUIRE(run(args).code == kExitOk);
  args = base;
  args.insert(args.end(), {"--out", b.string()});
  REQUIRE(run(args).code == kExitOk);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "trajectory.csv").rfind("t,X_1,p_1,env,w_1\n", 0) == 0);
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["master_seed"] == 9);
  CHECK(m["error"].is_null());
  CHECK(m["config_digest"].get<std::string>().size() == 64);
  CHECK(m["outputs"][0] == "trajectory.csv");
  std::int64_t manifests = 0;
  for (const auto& e : fs::directory_iterator(a)) manifests += e.path().filename() == "manifest.json";
  CHECK(manifests == 1);
}

TEST_CASE("studies through the front end") {
  const auto dir = scratch("studies");
  const auto out = dir.string();
  CHECK(run({"rate-ladder", "--preset", "constant-schilder", "--eps", "0.25,0.1", "--replicas", "200", "--steps", "100", "--out", out}).code == kExitOk);
  CHECK(fs::exists(dir / "rate_ladder.csv"));
  CHECK(run({"rate-ladder", "--preset", "constant-schilder", "--eps", "0.1,0.25", "--out", out}).code == kExitFailure);
  CHECK(run({"sk-compare", "--preset", "constant-schilder", "--eps", "0.4,0.2", "--replicas", "10", "--steps", "100", "--out", out}).code == kExitOk);
  auto r = run({"min-action", "--preset", "constant-schilder", "--from", "0", "--to", "1", "--segments", "8", "--out", out});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("action 0.5") != std::string::npos);
  r = run({"action", "--preset", "two-state-averaging", "--path", "averaged", "--segments", "10", "--out", out});
  CHECK(r.code == kExitOk);
  r = run({"env-check", "--preset", "two-state-averaging"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("averaged drift at (0, x0): 1") != std::string::npos);
}

TEST_CASE("preset files in the repository match the bundled text") {
  const fs::path dir = fs::path(SKLAB_SOURCE_DIR) / "presets";
  for (const auto& name : preset_names()) {
    const auto file = dir / (name + ".yaml");
    REQUIRE_MESSAGE(fs::exists(file), file.string());
    CHECK(slurp(file) == preset_text(name));
  }
}
