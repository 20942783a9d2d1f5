#include "sklab/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "sklab/env.hpp"

namespace sklab {

namespace {

bool strongly_connected(const Eigen::MatrixXd& Q) {
  const auto n = Q.rows();
  auto reach = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double q = transpose ? Q(j, i) : Q(i, j);
        if (j != i && q > 0.0 && !seen[j]) {
          seen[j] = 1;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}

Eigen::MatrixXd tilted(const Eigen::MatrixXd& Q, std::span<const double> g) {
  if (static_cast<Eigen::Index>(g.size()) != Q.rows() || Q.rows() != Q.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "g must have one entry per state");
  }
  Eigen::MatrixXd M = Q;
  for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, i) += g[static_cast<std::size_t>(i)];
  return M;
}

double power_iteration(const Eigen::MatrixXd& M, double tol) {
  const auto n = M.rows();
  const double shift = (-M.diagonal()).maxCoeff() + 1.0;
  Eigen::MatrixXd P = M;
  P.diagonal().array() += shift;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double mu = 0.0;
  for (int it = 0; it < 1000000; ++it) {
    Eigen::VectorXd w = P * v;
    const double next = v.dot(w);
    w.normalize();
    const bool done = it > 0 && std::abs(next - mu) <= tol * std::max(1.0, std::abs(next)) &&
                      (w - v).lpNorm<Eigen::Infinity>() <= std::sqrt(tol);
    mu = next;
    v = w;
    if (done) return mu - shift;
  }
  throw Error(ErrorCode::NoConvergence, "power iteration did not settle");
}

struct MaximizeResult {
  double value;
  bool boundary;
};

/// Coordinate-wise golden section for a concave f on [-box, box]^d.
template <class F>
MaximizeResult maximize_concave(F&& f, int d, double box) {
  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kTol = 1e-8;
  std::vector<double> beta(d, 0.0);
  double best = f(beta);
  for (int sweep = 0; sweep < (d == 1 ? 1 : 200); ++sweep) {
    const double before = best;
    for (int i = 0; i < d; ++i) {
      auto along = [&](double s) {
        beta[i] = s;
        return f(beta);
      };
      double a = -box, b = box;
      double c = b - kInvPhi * (b - a), e = a + kInvPhi * (b - a);
      double fc = along(c), fe = along(e);
      while (b - a > kTol) {
        if (fc >= fe) {
          b = e;
          e = c;
          fe = fc;
          c = b - kInvPhi * (b - a);
          fc = along(c);
        } else {
          a = c;
          c = e;
          fc = fe;
          e = a + kInvPhi * (b - a);
          fe = along(e);
        }
      }
      const double mid = 0.5 * (a + b);
      const double fm = along(mid);
      beta[i] = mid;
      best = fm;
    }
    if (std::abs(best - before) <= 1e-15 * std::max(1.0, std::abs(best)) && sweep > 0) break;
  }
  bool boundary = false;
  for (double b : beta) boundary = boundary || std::abs(b) >= box - 1e-6 * box;
  return {best, boundary};
}

}  // namespace

RateModel::RateModel(ValidatedModel model, double beta_box, double eig_tol)
    : model_(std::move(model)), beta_box_(beta_box), eig_tol_(eig_tol) {
  if (!(beta_box > 0.0)) throw Error(ErrorCode::BadInterval, "beta_box must be > 0");
  const auto* mk = std::get_if<MarkovSwitching>(&model_.environment());
  if (mk == nullptr) {
    throw Error(ErrorCode::UnsupportedEnvironment, "rate functions need a Markov-switching or constant environment");
  }
  Q_ = mk->Q;
  if (!strongly_connected(Q_)) throw Error(ErrorCode::Reducible, "generator is reducible");
}

RateModel RateModel::with_beta_box(double box) const {
  RateModel r = *this;
  if (!(box > 0.0)) throw Error(ErrorCode::BadInterval, "beta_box must be > 0");
  r.beta_box_ = box;
  return r;
}

double h_functional(const Eigen::MatrixXd& Q, std::span<const double> g, double tol) {
  const Eigen::MatrixXd M = tilted(Q, g);
  const auto n = M.rows();
  if (n == 1) return M(0, 0);
  if (!strongly_connected(Q)) throw Error(ErrorCode::Reducible, "generator is reducible");
  if (n == 2) {
    // Metzler 2x2: off-diagonal product is nonnegative, so the roots are real.
    const double half_tr = 0.5 * (M(0, 0) + M(1, 1));
    const double half_gap = 0.5 * (M(0, 0) - M(1, 1));
    return half_tr + std::sqrt(half_gap * half_gap + M(0, 1) * M(1, 0));
  }
  if (n <= 64) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigensolver failed");
    return es.eigenvalues().real().maxCoeff();
  }
  return power_iteration(M, tol);
}

std::vector<double> h_functional_oracle(const Eigen::MatrixXd& Q, std::span<const double> g, double eps, double T) {
  Eigen::MatrixXd M = tilted(Q, g) * (T / eps);
  const double shift = M.diagonal().maxCoeff();
  M.diagonal().array() -= shift;
  const Eigen::MatrixXd E = M.exp();
  const Eigen::VectorXd rows = E * Eigen::VectorXd::Ones(E.rows());
  std::vector<double> out(static_cast<std::size_t>(rows.size()));
  for (Eigen::Index i = 0; i < rows.size(); ++i) out[i] = (eps / T) * (std::log(rows[i]) + shift);
  return out;
}

double h_at(const RateModel& rate, double t, std::span<const double> x, std::span<const double> beta) {
  const auto& c = rate.model().coefficients();
  const int d = c.d, m = c.m;
  if (static_cast<int>(beta.size()) != d || static_cast<int>(x.size()) != d) {
    throw Error(ErrorCode::DimensionMismatch, "beta and x must have dimension d");
  }
  const double lam = c.friction(t, x, 0.0);
  std::vector<double> sigma(static_cast<std::size_t>(d) * m), b(d);
  c.diffusion(t, x, 0.0, sigma);
  double quad = 0.0;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += sigma[i * m + j] * beta[i];
    quad += s * s;
  }
  quad /= 2.0 * lam * lam;
  const auto n = rate.generator().rows();
  std::vector<double> g(static_cast<std::size_t>(n));
  for (Eigen::Index y = 0; y < n; ++y) {
    c.drift(t, x, EnvView{static_cast<int>(y), {}}, b);
    double lin = 0.0;
    for (int i = 0; i < d; ++i) lin += beta[i] * b[i];
    g[y] = lin / lam + quad;
  }
  return h_functional(rate.generator(), g, rate.eig_tol());
}

double lagrangian(const RateModel& rate, double t, std::span<const double> x, std::span<const double> gamma) {
  const int d = rate.model().d();
  if (static_cast<int>(gamma.size()) != d) throw Error(ErrorCode::DimensionMismatch, "gamma must have dimension d");
  auto f = [&](const std::vector<double>& beta) {
    double ip = 0.0;
    for (int i = 0; i < d; ++i) ip += gamma[i] * beta[i];
    return ip - h_at(rate, t, x, beta);
  };
  const auto r = maximize_concave(f, d, rate.beta_box());
  if (r.boundary) {
    std::ostringstream os;
    os << "Legendre maximizer reached the box of radius " << rate.beta_box();
    throw Error(ErrorCode::BoundaryHit, os.str());
  }
  return std::max(0.0, r.value);
}

namespace {

double segment_cost(const RateModel& rate, const RateModel& doubled, double t_mid, std::span<const double> x_mid,
                    std::span<const double> velocity) {
  try {
    return lagrangian(rate, t_mid, x_mid, velocity);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BoundaryHit) throw;
  }
  try {
    return lagrangian(doubled, t_mid, x_mid, velocity);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BoundaryHit) throw;
  }
  return std::numeric_limits<double>::infinity();
}

/// h * L at the midpoint of segment k of the node values (row-major, d per node).
double segment_term(const RateModel& rate, const RateModel& doubled, const TimeGrid& grid,
                    const std::vector<double>& nodes, int d, std::int64_t k, std::vector<double>& mid,
                    std::vector<double>& vel) {
  const double h = grid.dt();
  for (int i = 0; i < d; ++i) {
    const double a = nodes[k * d + i], b = nodes[(k + 1) * d + i];
    mid[i] = 0.5 * (a + b);
    vel[i] = (b - a) / h;
  }
  return h * segment_cost(rate, doubled, grid.node(k) + 0.5 * h, mid, vel);
}

}  // namespace

double action(const RateModel& rate, const Path& phi) {
  const RateModel doubled = rate.with_beta_box(2.0 * rate.beta_box());
  const int d = phi.dim;
  std::vector<double> mid(d), vel(d);
  double total = 0.0;
  for (std::int64_t k = 0; k < phi.grid.n_steps(); ++k) {
    total += segment_term(rate, doubled, phi.grid, phi.values, d, k, mid, vel);
    if (std::isinf(total)) return total;
  }
  return total;
}

double gaussian_action(double lambda0, double sigma0, double b0, const Path& phi) {
  if (phi.dim != 1) throw Error(ErrorCode::NonscalarModel, "closed-form action needs d = m = 1");
  const double h = phi.grid.dt();
  double total = 0.0;
  for (std::int64_t k = 0; k < phi.grid.n_steps(); ++k) {
    const double v = (phi(k + 1, 0) - phi(k, 0)) / h - b0 / lambda0;
    total += h * lambda0 * lambda0 * v * v / (2.0 * sigma0 * sigma0);
  }
  return total;
}

MinActionResult minimize_action(const RateModel& rate, std::span<const double> x_start,
                                std::span<const double> x_end, int n_segments) {
  if (n_segments < 2) throw Error(ErrorCode::BadInterval, "need at least two segments");
  const int d = rate.model().d();
  if (static_cast<int>(x_start.size()) != d || static_cast<int>(x_end.size()) != d) {
    throw Error(ErrorCode::DimensionMismatch, "endpoints must have dimension d");
  }
  const RateModel doubled = rate.with_beta_box(2.0 * rate.beta_box());
  const TimeGrid grid = make_grid(0.0, 1.0, n_segments);
  Path path(grid, d);
  for (int k = 0; k <= n_segments; ++k) {
    const double s = static_cast<double>(k) / n_segments;
    for (int i = 0; i < d; ++i) path(k, i) = (1.0 - s) * x_start[i] + s * x_end[i];
  }
  std::vector<double> mid(d), vel(d);
  auto seg = [&](const std::vector<double>& nodes, std::int64_t k) {
    return segment_term(rate, doubled, grid, nodes, d, k, mid, vel);
  };
  auto total = [&](const std::vector<double>& nodes) {
    double s = 0.0;
    for (std::int64_t k = 0; k < n_segments; ++k) s += seg(nodes, k);
    return s;
  };

  const std::size_t n_free = static_cast<std::size_t>(n_segments - 1) * d;
  std::vector<double> x = path.values, trial(x.size()), grad(n_free);
  double fx = total(x);
  MinActionResult result;
  double step = 1.0;
  constexpr double kFd = 1e-6;
  for (int it = 0; it < 10000; ++it) {
    result.iterations = it;
    double gnorm_inf = 0.0, gnorm2 = 0.0;
    for (int k = 1; k < n_segments; ++k) {
      for (int i = 0; i < d; ++i) {
        const std::size_t idx = static_cast<std::size_t>(k) * d + i;
        const double keep = x[idx];
        x[idx] = keep + kFd;
        const double up = seg(x, k - 1) + seg(x, k);
        x[idx] = keep - kFd;
        const double dn = seg(x, k - 1) + seg(x, k);
        x[idx] = keep;
        const double gi = (up - dn) / (2.0 * kFd);
        grad[(k - 1) * d + i] = gi;
        gnorm_inf = std::max(gnorm_inf, std::abs(gi));
        gnorm2 += gi * gi;
      }
    }
    if (!std::isfinite(gnorm2)) break;
    if (gnorm_inf < 1e-6) {
      result.converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e6);
    bool accepted = false;
    while (step > 1e-16) {
      trial = x;
      for (int k = 1; k < n_segments; ++k) {
        for (int i = 0; i < d; ++i) trial[static_cast<std::size_t>(k) * d + i] -= step * grad[(k - 1) * d + i];
      }
      const double ft = total(trial);
      if (ft <= fx - 1e-4 * step * gnorm2) {
        x.swap(trial);
        fx = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further descent possible at this resolution
  }
  path.values = x;
  result.path = std::move(path);
  result.value = fx;
  return result;
}

JumpControls neutral_controls(int n_states, int m, int n_segments, int n_z) {
  JumpControls c;
  c.n_z = n_z;
  c.u.assign(n_states, Eigen::MatrixXd::Zero(n_segments, m));
  c.v.assign(n_states, std::vector<Eigen::MatrixXd>(n_states, Eigen::MatrixXd::Ones(n_segments, n_z)));
  c.pi = Eigen::MatrixXd::Constant(n_segments, n_states, 1.0 / n_states);
  return c;
}

double ell(double x) {
  if (x == 0.0) return 1.0;
  return x * std::log(x) - x + 1.0;
}

JumpCost jump_cost_evaluate(const JumpControls& controls, const ValidatedModel& model, const Path& phi) {
  const auto* jp = std::get_if<StateDependentJump>(&model.environment());
  if (jp == nullptr) throw Error(ErrorCode::UnsupportedEnvironment, "jump cost needs a state-dependent jump environment");
  const int n = jp->n_states;
  const int d = model.d(), m = model.m();
  const std::int64_t n_seg = phi.grid.n_steps();
  const int n_z = controls.n_z;
  if (phi.dim != d || n_z < 1 || static_cast<int>(controls.u.size()) != n || static_cast<int>(controls.v.size()) != n ||
      controls.pi.rows() != n_seg || controls.pi.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "controls do not match the model and path");
  }
  for (int i = 0; i < n; ++i) {
    if (controls.u[i].rows() != n_seg || controls.u[i].cols() != m || static_cast<int>(controls.v[i].size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, "controls do not match the model and path");
    }
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& v = controls.v[i][j];
      if (v.rows() != n_seg || v.cols() != n_z) throw Error(ErrorCode::DimensionMismatch, "v has the wrong shape");
      if ((v.array() < 0.0).any()) {
        std::ostringstream os;
        os << "v_" << i << j << " has a negative entry";
        throw Error(ErrorCode::NegativeControl, os.str());
      }
    }
  }

  const auto& c = model.coefficients();
  const double h = phi.grid.dt();
  const double cell = jp->zeta / n_z;
  JumpCost out;
  std::vector<double> mid(d), vel(d), b(d), sigma(static_cast<std::size_t>(d) * m), rhs(d);
  Eigen::MatrixXd Phi(n, n);
  for (std::int64_t k = 0; k < n_seg; ++k) {
    const double t = phi.grid.node(k) + 0.5 * h;
    for (int i = 0; i < d; ++i) {
      mid[i] = 0.5 * (phi(k, i) + phi(k + 1, i));
      vel[i] = (phi(k + 1, i) - phi(k, i)) / h;
    }
    const double lam = c.friction(t, mid, 0.0);
    c.diffusion(t, mid, 0.0, sigma);
    std::fill(rhs.begin(), rhs.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      const double pj = controls.pi(k, j);
      out.u_term += 0.5 * h * controls.u[j].row(k).squaredNorm() * pj;
      c.drift(t, mid, EnvView{j, {}}, b);
      for (int i = 0; i < d; ++i) {
        double su = 0.0;
        for (int a = 0; a < m; ++a) su += sigma[i * m + a] * controls.u[j](k, a);
        rhs[i] += pj * (b[i] + su) / lam;
      }
    }
    double drift_gap = 0.0;
    for (int i = 0; i < d; ++i) drift_gap += (vel[i] - rhs[i]) * (vel[i] - rhs[i]);
    out.drift_residual = std::max(out.drift_residual, std::sqrt(drift_gap));

    Phi.setZero();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto& v = controls.v[i][j];
        double lsum = 0.0;
        for (int z = 0; z < n_z; ++z) lsum += ell(v(k, z));
        out.v_term += h * cell * lsum * controls.pi(k, i);
        // integral of v over the slot E_ij(phi), cell by cell
        const Slot slot = jump_slot(*jp, mid, i, j);
        double mass = 0.0;
        for (int z = 0; z < n_z; ++z) {
          const double lo = std::max(slot.lo, z * cell), hi = std::min(slot.hi, (z + 1) * cell);
          if (hi > lo) mass += (hi - lo) * v(k, z);
        }
        Phi(i, j) = mass;
      }
    }
    for (int i = 0; i < n; ++i) Phi(i, i) = -(Phi.row(i).sum() - Phi(i, i));
    for (int i = 0; i < n; ++i) {
      double r = 0.0;
      for (int j = 0; j < n; ++j) r += controls.pi(k, j) * Phi(j, i);
      out.stationarity_residual = std::max(out.stationarity_residual, std::abs(r));
    }
  }
  out.value = out.u_term + out.v_term;
  return out;
}

}  // namespace sklab
