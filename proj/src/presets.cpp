#include <map>

#include "sklab/config.hpp"

namespace sklab {

namespace {

const std::map<std::string, std::string>& registry() {
  static const std::map<std::string, std::string> presets{
      {"constant-schilder", R"(name: constant-schilder
dim: 1
drift:
  family: constant
friction:
  lambda0: 1
sigma: 1
)"},
      {"two-state-averaging", R"(name: two-state-averaging
dim: 1
drift:
  family: constant
  offsets: [[3], [-3]]
friction:
  lambda0: 1
sigma: 1
environment:
  type: markov
  Q: [[-1, 1], [2, -2]]
)"},
      {"jump-equiv", R"(name: jump-equiv
dim: 1
drift:
  family: constant
  offsets: [[3], [-3]]
friction:
  lambda0: 1
sigma: 1
environment:
  type: jump
  intensity: [1, 2]
  transition: [[0, 1], [1, 0]]
  zeta: 3
)"},
      {"jump-equiv-markov", R"(name: jump-equiv-markov
dim: 1
drift:
  family: constant
  offsets: [[3], [-3]]
friction:
  lambda0: 1
sigma: 1
environment:
  type: markov
  Q: [[-1, 1], [2, -2]]
)"},
      {"fast-ou", R"(name: fast-ou
dim: 1
drift:
  family: linear
  matrix: [[-1]]
  env_coupling: [[1]]
friction:
  lambda0: 1
sigma: 1
environment:
  type: diffusion
  dim: 1
  theta: 1
  g: 1.4142135623730951
  Sigma: [[0.5]]
)"},
      {"varying-friction", R"(name: varying-friction
dim: 1
x1: [1]
drift:
  family: linear
  matrix: [[-1]]
  offsets: [[0.5]]
friction:
  lambda0: 1
  lambda_t: 0.5
  lambda_x: 0.2
sigma: 1
)"},
      {"double-well", R"(name: double-well
dim: 1
x0: [-1]
drift:
  family: double-well
  strength: 1
friction:
  lambda0: 1
sigma: 1
probe:
  x_lo: -2
  x_hi: 2
)"},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

const std::string& preset_text(const std::string& name) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) throw Error(ErrorCode::UnknownPreset, "no preset named '" + name + "'");
  return it->second;
}

ModelSpec load_preset(const std::string& name) { return parse_config(preset_text(name), "preset:" + name); }

}  // namespace sklab
