#include "sklab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace sklab {

namespace {

std::string where(const std::string& source, const YAML::Mark& mark) {
  std::ostringstream os;
  os << source;
  if (!mark.is_null()) os << ":" << mark.line + 1 << ":" << mark.column + 1;
  return os.str();
}

/// Lookup helper that remembers which keys were read so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path, const std::string& source)
      : node_(std::move(node)), path_(std::move(path)), source_(source) {
    if (node_ && !node_.IsMap()) {
      throw Error(ErrorCode::ParseError, where(source_, node_.Mark()) + ": '" + path_ + "' must be a mapping");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_ && node_[key] && !node_[key].IsNull();
  }

  YAML::Node raw(const std::string& key) {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }

  YAML::Node required(const std::string& key) {
    if (!has(key)) throw Error(ErrorCode::MissingField, where(source_, node_.Mark()) + ": missing '" + qualified(key) + "'");
    return node_[key];
  }

  Section child(const std::string& key) { return Section(raw(key), qualified(key), source_); }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? convert<T>(node_[key], key) : fallback;
  }

  template <class T>
  T need(const std::string& key) {
    return convert<T>(required(key), key);
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw Error(ErrorCode::ParseError, where(source_, n.Mark()) + ": bad value for '" + qualified(key) + "'");
    }
  }

  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw Error(ErrorCode::UnknownKey, where(source_, kv.first.Mark()) + ": unknown key '" + qualified(key) + "'");
      }
    }
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& source() const { return source_; }
  bool present() const { return static_cast<bool>(node_); }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
  std::set<std::string> seen_;
};

using Matrix = std::vector<std::vector<double>>;

/// Accepts a scalar, a flat list (one row) or a list of rows.
Matrix read_matrix(Section& s, const std::string& key) {
  const YAML::Node n = s.raw(key);
  if (n.IsScalar()) return {{s.convert<double>(n, key)}};
  if (n.IsSequence() && n.size() > 0 && n[0].IsScalar()) return {s.convert<std::vector<double>>(n, key)};
  return s.convert<Matrix>(n, key);
}

Eigen::MatrixXd to_eigen(const Matrix& m, const std::string& what) {
  if (m.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m[0].size()) throw Error(ErrorCode::DimensionMismatch, what + " has ragged rows");
    for (std::size_t j = 0; j < m[i].size(); ++j) out(i, j) = m[i][j];
  }
  return out;
}

void require_shape(const Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << what << " must be " << rows << "x" << cols << ", got " << M.rows() << "x" << M.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

enum class Family { Constant, Linear, DoubleWell };

Family parse_family(const std::string& name) {
  if (name == "constant") return Family::Constant;
  if (name == "linear") return Family::Linear;
  if (name == "double-well" || name == "double_well") return Family::DoubleWell;
  throw Error(ErrorCode::ParseError, "unknown drift family '" + name + "'");
}

}  // namespace

ModelSpec parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorCode::ParseError, where(source, e.mark) + ": " + e.msg);
  }
  if (!root || root.IsNull()) throw Error(ErrorCode::MissingField, source + ": empty configuration");
  Section top(root, "", source);

  ModelSpec spec;
  spec.name = top.need<std::string>("name");
  const int d = top.get<int>("dim", 1);
  const int m = top.get<int>("noise_dim", d);
  if (d < 1 || m < 1) throw Error(ErrorCode::DimensionMismatch, "dim and noise_dim must be >= 1");
  spec.x0 = top.get<std::vector<double>>("x0", std::vector<double>(d, 0.0));
  spec.x1 = top.get<std::vector<double>>("x1", std::vector<double>(d, 0.0));
  const auto scaling = top.get<std::string>("x1_scaling", "fixed");
  if (scaling == "fixed") {
    spec.x1_scaling = X1Scaling::Fixed;
  } else if (scaling == "one_over_eps") {
    spec.x1_scaling = X1Scaling::OneOverEps;
  } else {
    throw Error(ErrorCode::ParseError, "x1_scaling must be 'fixed' or 'one_over_eps'");
  }

  // probe box first: the double-well Lipschitz bound depends on it
  {
    Section p = top.child("probe");
    spec.probe.t_lo = p.get<double>("t_lo", spec.probe.t_lo);
    spec.probe.t_hi = p.get<double>("t_hi", spec.probe.t_hi);
    spec.probe.x_lo = p.get<double>("x_lo", spec.probe.x_lo);
    spec.probe.x_hi = p.get<double>("x_hi", spec.probe.x_hi);
    spec.probe.points_per_axis = p.get<int>("points_per_axis", spec.probe.points_per_axis);
    spec.probe.eps_probes = p.get<std::vector<double>>("eps_probes", spec.probe.eps_probes);
    p.finish();
  }

  // environment
  Section env = top.child("environment");
  const auto env_type = env.present() ? env.get<std::string>("type", "none") : std::string("none");
  int n_env_states = 1;
  int l = 0;
  if (env_type == "none") {
    spec.environment = constant_environment();
  } else if (env_type == "markov") {
    MarkovSwitching mk;
    mk.Q = to_eigen(env.convert<Matrix>(env.required("Q"), "Q"), "Q");
    mk.initial_state = env.get<int>("initial_state", 0);
    n_env_states = static_cast<int>(mk.Q.rows());
    spec.environment = mk;
  } else if (env_type == "jump") {
    const auto c = env.need<std::vector<double>>("intensity");
    const auto c_slope = env.get<std::vector<double>>("intensity_x", std::vector<double>(c.size(), 0.0));
    const Eigen::MatrixXd r = to_eigen(env.convert<Matrix>(env.required("transition"), "transition"), "transition");
    if (c_slope.size() != c.size()) throw Error(ErrorCode::DimensionMismatch, "intensity_x must match intensity");
    require_shape(r, static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(c.size()), "transition");
    StateDependentJump jp;
    jp.n_states = static_cast<int>(c.size());
    // c_y(x) = c_y + a_y min(|x|, 1)
    jp.intensity = [c, c_slope](std::span<const double> x, int y) {
      double s = 0.0;
      for (double xi : x) s += xi * xi;
      return c[y] + c_slope[y] * std::min(std::sqrt(s), 1.0);
    };
    jp.transition = [r](std::span<const double>, int y, int y2) { return r(y, y2); };
    double c_max = 0.0;
    for (std::size_t y = 0; y < c.size(); ++y) c_max = std::max(c_max, c[y] + std::max(0.0, c_slope[y]));
    jp.zeta = env.get<double>("zeta", c_max + 1.0);
    jp.initial_state = env.get<int>("initial_state", 0);
    n_env_states = jp.n_states;
    spec.environment = jp;
  } else if (env_type == "diffusion") {
    FastDiffusion fd;
    fd.l = env.get<int>("dim", 1);
    fd.n = env.get<int>("noise_dim", fd.l);
    const double theta = env.get<double>("theta", 1.0);
    const double g = env.get<double>("g", std::sqrt(2.0));
    const int fl = fd.l, fn = fd.n;
    fd.F = [theta, fl](double, std::span<const double>, std::span<const double> y, std::span<double> out) {
      for (int i = 0; i < fl; ++i) out[i] = -theta * y[i];
    };
    fd.G = [g, fl, fn](double, std::span<const double>, std::span<const double>, std::span<double> out) {
      for (int i = 0; i < fl; ++i)
        for (int j = 0; j < fn; ++j) out[i * fn + j] = i == j ? g : 0.0;
    };
    fd.Sigma = env.has("Sigma") ? to_eigen(read_matrix(env, "Sigma"), "Sigma") : Eigen::MatrixXd::Zero(m, fd.n);
    require_shape(fd.Sigma, m, fd.n, "Sigma");
    fd.y0 = env.get<std::vector<double>>("y0", std::vector<double>(fd.l, 0.0));
    l = fd.l;
    n_env_states = 1;
    spec.environment = fd;
  } else {
    throw Error(ErrorCode::ParseError, "unknown environment type '" + env_type + "'");
  }
  if (env.present()) env.finish();

  // drift
  Section dr = top.child("drift");
  const Family family = parse_family(dr.need<std::string>("family"));
  Matrix offsets(n_env_states, std::vector<double>(d, 0.0));
  if (dr.has("offsets")) {
    offsets = read_matrix(dr, "offsets");
    if (offsets.size() == 1 && n_env_states > 1) offsets.assign(n_env_states, offsets[0]);
    if (static_cast<int>(offsets.size()) != n_env_states) {
      throw Error(ErrorCode::DimensionMismatch, "drift.offsets needs one row per environment state");
    }
    for (const auto& row : offsets) {
      if (static_cast<int>(row.size()) != d) throw Error(ErrorCode::DimensionMismatch, "drift.offsets rows must have length dim");
    }
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  double strength = 0.0;
  double lip = 0.0;
  if (family == Family::Linear) {
    A = to_eigen(read_matrix(dr, "matrix"), "drift.matrix");
    require_shape(A, d, d, "drift.matrix");
    lip = A.jacobiSvd().singularValues()(0);
  } else if (family == Family::DoubleWell) {
    strength = dr.get<double>("strength", 1.0);
    const double r2 = d * std::max(spec.probe.x_lo * spec.probe.x_lo, spec.probe.x_hi * spec.probe.x_hi);
    lip = std::abs(strength) * (3.0 * r2 + 1.0);
  }
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(d, std::max(l, 0));
  if (dr.has("env_coupling")) {
    if (l == 0) throw Error(ErrorCode::UnsupportedEnvironment, "drift.env_coupling needs a diffusion environment");
    coupling = to_eigen(read_matrix(dr, "env_coupling"), "drift.env_coupling");
    require_shape(coupling, d, l, "drift.env_coupling");
  }
  lip = dr.get<double>("lipschitz", lip);
  dr.finish();

  // friction: lambda0 + lambda_t t + eps^2 lambda_x |x|^2 / (1 + |x|^2)
  Section fr = top.child("friction");
  const double lambda0 = fr.get<double>("lambda0", 1.0);
  const double lambda_t = fr.get<double>("lambda_t", 0.0);
  const double lambda_x = fr.get<double>("lambda_x", 0.0);
  fr.finish();

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(d, m);
  if (top.has("sigma")) {
    const Matrix s = read_matrix(top, "sigma");
    if (s.size() == 1 && s[0].size() == 1 && (d > 1 || m > 1)) {
      sigma *= s[0][0];
    } else {
      sigma = to_eigen(s, "sigma");
    }
  }
  require_shape(sigma, d, m, "sigma");
  top.finish();

  if (static_cast<int>(spec.x0.size()) != d || static_cast<int>(spec.x1.size()) != d) {
    throw Error(ErrorCode::DimensionMismatch, "x0 and x1 must have length dim");
  }

  CoefficientField& c = spec.coefficients;
  c.d = d;
  c.m = m;
  c.family = family == Family::Constant ? "constant" : family == Family::Linear ? "linear" : "double-well";
  c.drift = [family, A, strength, offsets, coupling, d](double, std::span<const double> x, const EnvView& e,
                                                       std::span<double> out) {
    const auto& off = offsets[static_cast<std::size_t>(e.label)];
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
    for (int i = 0; i < d; ++i) {
      double v = off[i];
      if (family == Family::Linear) {
        for (int j = 0; j < d; ++j) v += A(i, j) * x[j];
      } else if (family == Family::DoubleWell) {
        v -= strength * (r2 - 1.0) * x[i];
      }
      for (Eigen::Index j = 0; j < coupling.cols() && !e.y.empty(); ++j) v += coupling(i, j) * e.y[j];
      out[i] = v;
    }
  };
  c.friction = [lambda0, lambda_t, lambda_x](double t, std::span<const double> x, double eps) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return lambda0 + lambda_t * t + eps * eps * lambda_x * r2 / (1.0 + r2);
  };
  c.diffusion = [sigma, d, m](double, std::span<const double>, double, std::span<double> out) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < m; ++j) out[i * m + j] = sigma(i, j);
  };
  const double eps_max = spec.probe.eps_probes.empty()
                             ? 1.0
                             : *std::max_element(spec.probe.eps_probes.begin(), spec.probe.eps_probes.end());
  c.kappa0 = std::min(lambda0 + lambda_t * spec.probe.t_lo, lambda0 + lambda_t * spec.probe.t_hi) +
             std::min(0.0, lambda_x) * eps_max * eps_max;
  c.lip_b = lip;
  const auto sv = sigma.jacobiSvd().singularValues();
  c.sigma_norm_bound = sv.size() > 0 ? sv(0) : 0.0;
  c.sigma_inv_norm_bound = (d == m && sv(sv.size() - 1) > 0.0) ? 1.0 / sv(sv.size() - 1) : 0.0;
  return spec;
}

ModelSpec load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path);
}

}  // namespace sklab
