#include "sklab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sklab/brownian.hpp"

namespace sklab {

EnvironmentSpec constant_environment() {
  return MarkovSwitching{Eigen::MatrixXd::Zero(1, 1), 0};
}

bool is_discrete(const EnvironmentSpec& env) { return !std::holds_alternative<FastDiffusion>(env); }

int n_states(const EnvironmentSpec& env) {
  if (const auto* mk = std::get_if<MarkovSwitching>(&env)) return static_cast<int>(mk->Q.rows());
  if (const auto* jp = std::get_if<StateDependentJump>(&env)) return jp->n_states;
  return 0;
}

int extra_noise_dim(const EnvironmentSpec& env) {
  if (const auto* fd = std::get_if<FastDiffusion>(&env)) return fd->n;
  return 0;
}

bool ValidationReport::has(ErrorCode code) const noexcept {
  return std::any_of(issues.begin(), issues.end(), [code](const ValidationIssue& i) { return i.code == code; });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) os << "; ";
    os << to_string(issues[i].code) << ": " << issues[i].message;
  }
  return os.str();
}

ValidationError::ValidationError(ValidationReport report)
    : Error(report.issues.empty() ? ErrorCode::ValidationFailed : report.issues.front().code, report.summary()),
      report_(std::move(report)) {}

std::vector<double> ValidatedModel::initial_momentum(double eps) const {
  std::vector<double> p = spec_->x1;
  if (spec_->x1_scaling == X1Scaling::OneOverEps) {
    for (auto& v : p) v /= eps;
  }
  return p;
}

FrictionGradient friction_gradient(const CoefficientField& c, double t, std::span<const double> x, double eps) {
  constexpr double h = 1e-5;
  FrictionGradient g;
  g.dt = (c.friction(t + h, x, eps) - c.friction(t - h, x, eps)) / (2.0 * h);
  g.dx.resize(x.size());
  std::vector<double> xs(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = xs[i];
    xs[i] = xi + h;
    const double fp = c.friction(t, xs, eps);
    xs[i] = xi - h;
    const double fm = c.friction(t, xs, eps);
    xs[i] = xi;
    g.dx[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace {

constexpr double kFullLatticeLimit = 300000.0;

double axis_point(double lo, double hi, int i, int n) {
  return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
}

/// Probe points in x-space. Full product lattice when small enough, else the
/// coordinate lines through the box centre plus the main diagonal.
std::vector<std::vector<double>> x_lattice(const ProbeBox& box, int d) {
  const int n = std::max(1, box.points_per_axis);
  std::vector<std::vector<double>> pts;
  const double centre = 0.5 * (box.x_lo + box.x_hi);
  if (std::pow(static_cast<double>(n), d + 1) <= kFullLatticeLimit) {
    std::vector<int> idx(d, 0);
    while (true) {
      std::vector<double> x(d);
      for (int i = 0; i < d; ++i) x[i] = axis_point(box.x_lo, box.x_hi, idx[i], n);
      pts.push_back(std::move(x));
      int a = 0;
      while (a < d && ++idx[a] == n) idx[a++] = 0;
      if (a == d) break;
    }
    return pts;
  }
  for (int axis = 0; axis < d; ++axis) {
    for (int i = 0; i < n; ++i) {
      std::vector<double> x(d, centre);
      x[axis] = axis_point(box.x_lo, box.x_hi, i, n);
      pts.push_back(std::move(x));
    }
  }
  for (int i = 0; i < n; ++i) pts.emplace_back(d, axis_point(box.x_lo, box.x_hi, i, n));
  return pts;
}

/// Index pairs of lattice neighbours used for the Lipschitz spot-check.
std::vector<std::pair<std::size_t, std::size_t>> neighbour_pairs(const std::vector<std::vector<double>>& pts) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) pairs.emplace_back(i, i + 1);
  return pairs;
}

void add(ValidationReport& r, ErrorCode code, std::string msg) { r.issues.push_back({code, std::move(msg)}); }

void check_dimensions(const ModelSpec& s, ValidationReport& r) {
  const auto& c = s.coefficients;
  if (c.d < 1 || c.m < 1) add(r, ErrorCode::DimensionMismatch, "d and m must be >= 1");
  if (static_cast<int>(s.x0.size()) != c.d) add(r, ErrorCode::DimensionMismatch, "x0 has wrong dimension");
  if (static_cast<int>(s.x1.size()) != c.d) add(r, ErrorCode::DimensionMismatch, "x1 has wrong dimension");
  if (!c.drift || !c.friction || !c.diffusion) add(r, ErrorCode::MissingField, "coefficient callables not set");
}

void check_friction(const ModelSpec& s, const std::vector<std::vector<double>>& xs, ValidationReport& r,
                    ProbeSummary& probe) {
  const auto& c = s.coefficients;
  if (!(c.kappa0 > 0.0)) {
    add(r, ErrorCode::NonpositiveFriction, "kappa0 must be > 0");
  }
  const int nt = std::max(1, s.probe.points_per_axis);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  bool reported = false;
  for (double eps : s.probe.eps_probes) {
    for (int it = 0; it < nt; ++it) {
      const double t = axis_point(s.probe.t_lo, s.probe.t_hi, it, nt);
      for (const auto& x : xs) {
        const double lam = c.friction(t, x, eps);
        lo = std::min(lo, lam);
        hi = std::max(hi, lam);
        if (!reported && !(lam >= c.kappa0 - 1e-12 && lam > 0.0)) {
          std::ostringstream os;
          os << "lambda(" << t << ", x, eps=" << eps << ") = " << lam << " < kappa0 = " << c.kappa0;
          add(r, ErrorCode::NonpositiveFriction, os.str());
          reported = true;
        }
      }
    }
  }
  probe.lambda_min = lo;
  probe.lambda_max = hi;
}

double vec_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void check_drift_lipschitz(const ModelSpec& s, const std::vector<std::vector<double>>& xs, ValidationReport& r) {
  const auto& c = s.coefficients;
  const auto pairs = neighbour_pairs(xs);
  std::vector<EnvView> views;
  std::vector<double> ybuf;
  if (const auto* fd = std::get_if<FastDiffusion>(&s.environment)) {
    ybuf = fd->y0;
    views.push_back(EnvView{0, ybuf});
  } else {
    for (int y = 0; y < n_states(s.environment); ++y) views.push_back(EnvView{y, {}});
  }
  std::vector<double> b1(c.d), b2(c.d);
  const double t = s.probe.t_lo;
  for (const auto& env : views) {
    for (const auto& [i, j] : pairs) {
      c.drift(t, xs[i], env, b1);
      c.drift(t, xs[j], env, b2);
      const double lhs = vec_dist(b1, b2);
      const double rhs = c.lip_b * vec_dist(xs[i], xs[j]);
      if (lhs > rhs * (1.0 + 1e-9) + 1e-12) {
        std::ostringstream os;
        os << "drift changes by " << lhs << " between probe points, exceeding lip_b bound " << rhs;
        add(r, ErrorCode::LipschitzViolation, os.str());
        return;
      }
    }
  }
}

void check_sigma(const ModelSpec& s, const std::vector<std::vector<double>>& xs, ValidationReport& r) {
  const auto& c = s.coefficients;
  if (c.sigma_norm_bound <= 0.0 && c.sigma_inv_norm_bound <= 0.0) return;
  Eigen::MatrixXd sig(c.d, c.m);
  std::vector<double> buf(static_cast<std::size_t>(c.d) * c.m);
  for (double eps : s.probe.eps_probes) {
    for (const auto& x : xs) {
      c.diffusion(s.probe.t_lo, x, eps, buf);
      for (int i = 0; i < c.d; ++i)
        for (int j = 0; j < c.m; ++j) sig(i, j) = buf[i * c.m + j];
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(sig);
      const auto& sv = svd.singularValues();
      if (c.sigma_norm_bound > 0.0 && sv(0) > c.sigma_norm_bound * (1.0 + 1e-12)) {
        add(r, ErrorCode::SigmaBoundViolation, "|sigma| exceeds sigma_norm_bound");
        return;
      }
      if (c.d == c.m && c.sigma_inv_norm_bound > 0.0) {
        const double smin = sv(sv.size() - 1);
        if (!(smin > 0.0) || 1.0 / smin > c.sigma_inv_norm_bound * (1.0 + 1e-12)) {
          add(r, ErrorCode::SigmaBoundViolation, "|sigma^-1| exceeds sigma_inv_norm_bound");
          return;
        }
      }
    }
  }
}

void check_markov(const MarkovSwitching& mk, ValidationReport& r) {
  const auto& Q = mk.Q;
  if (Q.rows() < 1 || Q.rows() != Q.cols()) {
    add(r, ErrorCode::BadGenerator, "Q must be a non-empty square matrix");
    return;
  }
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (i != j && Q(i, j) < 0.0) {
        std::ostringstream os;
        os << "Q(" << i << "," << j << ") = " << Q(i, j) << " is negative";
        add(r, ErrorCode::BadGenerator, os.str());
      }
    }
    const double rs = Q.row(i).sum();
    if (std::abs(rs) > 1e-12) {
      std::ostringstream os;
      os << "row " << i << " of Q sums to " << rs;
      add(r, ErrorCode::BadGenerator, os.str());
    }
  }
  if (mk.initial_state < 0 || mk.initial_state >= Q.rows())
    add(r, ErrorCode::DimensionMismatch, "initial environment state out of range");
}

void check_jump(const StateDependentJump& jp, const std::vector<std::vector<double>>& xs, ValidationReport& r,
                ProbeSummary& probe) {
  if (jp.n_states < 1 || !jp.intensity || !jp.transition) {
    add(r, ErrorCode::MissingField, "jump environment needs n_states >= 1, intensity and transition");
    return;
  }
  if (jp.initial_state < 0 || jp.initial_state >= jp.n_states)
    add(r, ErrorCode::DimensionMismatch, "initial environment state out of range");
  double csup = 0.0;
  bool bad_r = false;
  bool bad_c = false;
  for (const auto& x : xs) {
    for (int y = 0; y < jp.n_states; ++y) {
      const double cy = jp.intensity(x, y);
      if (!(cy >= 0.0)) bad_c = true;
      csup = std::max(csup, cy);
      double sum = 0.0;
      for (int y2 = 0; y2 < jp.n_states; ++y2) {
        const double ryy = jp.transition(x, y, y2);
        if (ryy < 0.0 || ryy > 1.0) bad_r = true;
        sum += ryy;
      }
      if (jp.n_states > 1 && (std::abs(sum - 1.0) > 1e-12 || jp.transition(x, y, y) != 0.0)) bad_r = true;
    }
  }
  probe.intensity_sup = csup;
  if (bad_c) add(r, ErrorCode::IntensityExceedsZeta, "jump intensity must be nonnegative");
  if (bad_r) add(r, ErrorCode::BadTransition, "transition rows must sum to 1 with r(x,y,y) = 0");
  if (jp.zeta < csup + 1.0 - 1e-12) {
    std::ostringstream os;
    os << "zeta = " << jp.zeta << " is below sup c + 1 = " << csup + 1.0;
    add(r, ErrorCode::IntensityExceedsZeta, os.str());
  }
}

void check_fast_diffusion(const ModelSpec& s, const FastDiffusion& fd, ValidationReport& r) {
  if (fd.l < 1 || fd.n < 1 || !fd.F || !fd.G) {
    add(r, ErrorCode::MissingField, "fast diffusion needs l, n >= 1 and callables F, G");
    return;
  }
  if (static_cast<int>(fd.y0.size()) != fd.l) add(r, ErrorCode::DimensionMismatch, "y0 has wrong dimension");
  try {
    check_correlation(s.coefficients.m, fd.n, fd.Sigma);
  } catch (const Error& e) {
    add(r, e.code(), e.what());
  }
}

ValidationReport run_checks(const ModelSpec& spec, ProbeSummary& probe) {
  ValidationReport report;
  check_dimensions(spec, report);
  if (!report.ok()) return report;

  const auto xs = x_lattice(spec.probe, spec.coefficients.d);
  check_friction(spec, xs, report, probe);
  std::visit(
      [&](const auto& env) {
        using T = std::decay_t<decltype(env)>;
        if constexpr (std::is_same_v<T, MarkovSwitching>) {
          check_markov(env, report);
        } else if constexpr (std::is_same_v<T, StateDependentJump>) {
          check_jump(env, xs, report, probe);
        } else {
          check_fast_diffusion(spec, env, report);
        }
      },
      spec.environment);
  if (report.has(ErrorCode::DimensionMismatch) || report.has(ErrorCode::MissingField)) return report;
  check_drift_lipschitz(spec, xs, report);
  check_sigma(spec, xs, report);
  return report;
}

}  // namespace

ValidationReport check_model(const ModelSpec& spec) {
  ProbeSummary probe;
  return run_checks(spec, probe);
}

ValidatedModel validate_model(ModelSpec spec) {
  ProbeSummary probe;
  ValidationReport report = run_checks(spec, probe);
  if (!report.ok()) throw ValidationError(std::move(report));
  return ValidatedModel(std::make_shared<const ModelSpec>(std::move(spec)), probe);
}

}  // namespace sklab
