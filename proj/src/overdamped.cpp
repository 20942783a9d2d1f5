#include "sklab/overdamped.hpp"

#include <cmath>

#include "sklab/env.hpp"

namespace sklab {

namespace {

/// Shared Euler-Maruyama loop; increments(k, dw, dw_tilde) fills the step-k noise.
template <class Increments>
OverdampedTrajectory run_overdamped(const ValidatedModel& model, double eps, const TimeGrid& grid,
                                    const NoiseStream& stream, Increments&& increments) {
  if (!(eps > 0.0)) throw Error(ErrorCode::BadScheme, "eps must be > 0");
  const auto& c = model.coefficients();
  const auto& env_spec = model.environment();
  const int d = model.d();
  const int m = model.m();
  const int n = extra_noise_dim(env_spec);
  const bool discrete = is_discrete(env_spec);

  OverdampedTrajectory out;
  out.grid = grid;
  out.eps = eps;
  out.q = Path(grid, d);
  out.w = Path(grid, m);
  if (discrete) {
    out.env.labels.resize(static_cast<std::size_t>(grid.n_nodes()));
  } else {
    out.env.y = Path(grid, std::get<FastDiffusion>(env_spec).l);
  }

  NoiseStream env_stream = stream.substream(Lane::Environment);
  EnvState env = initial_env_state(env_spec, eps, env_stream);
  std::vector<double> q = model.spec().x0;
  std::vector<double> q_left(d), b(d), sigma(static_cast<std::size_t>(d) * m), dw(m), dwt(n);
  const double sqrt_eps = std::sqrt(eps);
  const double h = grid.dt();

  auto record = [&](std::int64_t k) {
    std::copy(q.begin(), q.end(), out.q.at(k).begin());
    if (discrete) {
      out.env.labels[static_cast<std::size_t>(k)] = env.label;
    } else {
      std::copy(env.y.begin(), env.y.end(), out.env.y.at(k).begin());
    }
  };
  record(0);
  for (std::int64_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    increments(k, dw, dwt);
    c.drift(t, q, env.view(), b);
    const double lam = c.friction(t, q, eps);
    c.diffusion(t, q, eps, sigma);
    q_left = q;
    for (int i = 0; i < d; ++i) {
      double sdw = 0.0;
      for (int j = 0; j < m; ++j) sdw += sigma[i * m + j] * dw[j];
      q[i] += b[i] / lam * h + sqrt_eps * sdw / lam;
    }
    advance_environment(env, env_spec, q_left, t, eps, h, env_stream, dwt);
    for (int j = 0; j < m; ++j) out.w(k + 1, j) = out.w(k, j) + dw[j];
    record(k + 1);
  }
  return out;
}

}  // namespace

OverdampedTrajectory simulate_overdamped(const ValidatedModel& model, double eps, const TimeGrid& grid,
                                         const NoiseStream& stream) {
  const int m = model.m();
  const int n = extra_noise_dim(model.environment());
  CorrelationMap corr;
  if (const auto* fd = std::get_if<FastDiffusion>(&model.environment())) {
    corr = CorrelationMap(m, n, fd->Sigma);
  } else {
    corr = CorrelationMap(m, 0, Eigen::MatrixXd(m, 0));
  }
  NoiseStream brownian = stream;
  const double sdt = std::sqrt(grid.dt());
  std::vector<double> z(m + n), joint(m + n);
  return run_overdamped(model, eps, grid, stream, [&](std::int64_t, std::vector<double>& dw, std::vector<double>& dwt) {
    for (auto& zi : z) zi = sdt * brownian.normal();
    corr.apply(z, joint);
    for (int j = 0; j < m; ++j) dw[j] = joint[j];
    for (int j = 0; j < n; ++j) dwt[j] = joint[m + j];
  });
}

OverdampedTrajectory simulate_overdamped(const ValidatedModel& model, const TrajectoryBundle& shared,
                                         const NoiseStream& stream) {
  const int m = model.m();
  const int n = extra_noise_dim(model.environment());
  if (shared.w.dim != m || (n > 0 && shared.w_tilde.dim != n)) {
    throw Error(ErrorCode::DimensionMismatch, "shared noise path does not match the model");
  }
  return run_overdamped(model, shared.eps, shared.grid, stream,
                        [&](std::int64_t k, std::vector<double>& dw, std::vector<double>& dwt) {
                          for (int j = 0; j < m; ++j) dw[j] = shared.w(k + 1, j) - shared.w(k, j);
                          for (int j = 0; j < n; ++j) dwt[j] = shared.w_tilde(k + 1, j) - shared.w_tilde(k, j);
                        });
}

std::vector<double> averaged_drift(const ValidatedModel& model, double t, std::span<const double> x) {
  const auto& env = model.environment();
  const auto pi = stationary_measure(env, t, x);
  const int d = model.d();
  std::vector<double> out(d, 0.0), b(d);
  for (std::size_t y = 0; y < pi.weights.size(); ++y) {
    model.coefficients().drift(t, x, EnvView{static_cast<int>(y), {}}, b);
    for (int i = 0; i < d; ++i) out[i] += pi.weights[y] * b[i];
  }
  return out;
}

Path solve_averaged_ode(const ValidatedModel& model, const TimeGrid& grid) {
  const int d = model.d();
  const auto& c = model.coefficients();
  auto rhs = [&](double t, const std::vector<double>& x) {
    auto v = averaged_drift(model, t, x);
    const double lam0 = c.friction(t, x, 0.0);
    for (auto& vi : v) vi /= lam0;
    return v;
  };
  Path phi(grid, d);
  std::vector<double> x = model.spec().x0, tmp(d);
  std::copy(x.begin(), x.end(), phi.at(0).begin());
  const double h = grid.dt();
  for (std::int64_t k = 0; k < grid.n_steps(); ++k) {
    const double t = grid.node(k);
    const auto k1 = rhs(t, x);
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    const auto k2 = rhs(t + 0.5 * h, tmp);
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    const auto k3 = rhs(t + 0.5 * h, tmp);
    for (int i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
    const auto k4 = rhs(t + h, tmp);
    for (int i = 0; i < d; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    std::copy(x.begin(), x.end(), phi.at(k + 1).begin());
  }
  return phi;
}

double sup_distance(const Path& a, const Path& b) {
  if (!(a.grid == b.grid) || a.dim != b.dim) throw Error(ErrorCode::GridMismatch, "paths live on different grids");
  double best = 0.0;
  for (std::int64_t k = 0; k < a.n_nodes(); ++k) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) s += (a(k, i) - b(k, i)) * (a(k, i) - b(k, i));
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

double sk_distance(const TrajectoryBundle& bundle, const Path& q) { return sup_distance(bundle.X, q); }

}  // namespace sklab
