#include "sklab/env.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace sklab {

EnvState initial_env_state(const EnvironmentSpec& env, double eps, NoiseStream& stream) {
  EnvState s;
  if (const auto* mk = std::get_if<MarkovSwitching>(&env)) {
    s.label = mk->initial_state;
    s.residual_clock = stream.exponential(-mk->Q(s.label, s.label) / eps);
  } else if (const auto* jp = std::get_if<StateDependentJump>(&env)) {
    s.label = jp->initial_state;
    s.residual_clock = stream.exponential(jp->zeta / eps);
  } else {
    s.y = std::get<FastDiffusion>(env).y0;
  }
  return s;
}

void env_step_markov(EnvState& state, const MarkovSwitching& spec, double eps, double dt, NoiseStream& stream) {
  const auto& Q = spec.Q;
  double remaining = dt;
  while (state.residual_clock <= remaining) {
    remaining -= state.residual_clock;
    const int i = state.label;
    const double out_rate = -Q(i, i);
    double u = stream.uniform() * out_rate;
    int next = i;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (j == i) continue;
      next = static_cast<int>(j);
      u -= Q(i, j);
      if (u < 0.0) break;
    }
    state.label = next;
    ++state.events;
    state.residual_clock = stream.exponential(-Q(next, next) / eps);
  }
  state.residual_clock -= remaining;
}

void env_step_jump(EnvState& state, const StateDependentJump& spec, std::span<const double> x, double eps, double dt,
                   NoiseStream& stream) {
  double remaining = dt;
  while (state.residual_clock <= remaining) {
    remaining -= state.residual_clock;
    const int y = state.label;
    const double c = spec.intensity(x, y);
    if (c > spec.zeta - 1.0 + 1e-12) {
      std::ostringstream os;
      os << "c_" << y << "(x) = " << c << " exceeds zeta - 1 = " << spec.zeta - 1.0;
      throw Error(ErrorCode::IntensityExceedsZeta, os.str());
    }
    const double mark = stream.uniform() * spec.zeta;
    double edge = 0.0;
    for (int y2 = 0; y2 < spec.n_states; ++y2) {
      if (y2 == y) continue;
      edge += c * spec.transition(x, y, y2);
      if (mark < edge) {
        state.label = y2;
        ++state.events;
        break;
      }
    }
    state.residual_clock = stream.exponential(spec.zeta / eps);
  }
  state.residual_clock -= remaining;
}

Slot jump_slot(const StateDependentJump& spec, std::span<const double> x, int y, int y_next) {
  const double c = spec.intensity(x, y);
  double edge = 0.0;
  for (int y2 = 0; y2 < spec.n_states; ++y2) {
    if (y2 == y) continue;
    const double width = c * spec.transition(x, y, y2);
    if (y2 == y_next) return {edge, edge + width};
    edge += width;
  }
  return {0.0, 0.0};
}

void env_step_diffusion(EnvState& state, const FastDiffusion& spec, std::span<const double> x, double t, double eps,
                        double dt, std::span<const double> w_tilde_increments) {
  const int l = spec.l;
  const int n = spec.n;
  const double h_max = eps / 10.0;
  const auto n_sub = static_cast<std::int64_t>(std::max(1.0, std::ceil(dt / h_max - 1e-12)));
  const double h = dt / static_cast<double>(n_sub);
  const double inv_sqrt_eps = 1.0 / std::sqrt(eps);
  std::vector<double> F(l), G(static_cast<std::size_t>(l) * n), y_next(l);
  for (std::int64_t s = 0; s < n_sub; ++s) {
    const double ts = t + static_cast<double>(s) * h;
    spec.F(ts, x, state.y, F);
    spec.G(ts, x, state.y, G);
    double norm2 = 0.0;
    for (int i = 0; i < l; ++i) {
      double noise = 0.0;
      for (int j = 0; j < n; ++j) noise += G[i * n + j] * w_tilde_increments[j];
      y_next[i] = state.y[i] + F[i] / eps * h + inv_sqrt_eps * noise / static_cast<double>(n_sub);
      norm2 += y_next[i] * y_next[i];
    }
    if (!(std::sqrt(norm2) <= 1e8)) {
      throw Error(ErrorCode::BlowUp, "fast diffusion environment left |y| <= 1e8");
    }
    state.y.swap(y_next);
  }
}

void advance_environment(EnvState& state, const EnvironmentSpec& env, std::span<const double> x, double t, double eps,
                         double dt, NoiseStream& stream, std::span<const double> w_tilde_increments) {
  if (const auto* mk = std::get_if<MarkovSwitching>(&env)) {
    if (mk->Q.rows() > 1) env_step_markov(state, *mk, eps, dt, stream);
  } else if (const auto* jp = std::get_if<StateDependentJump>(&env)) {
    env_step_jump(state, *jp, x, eps, dt, stream);
  } else {
    env_step_diffusion(state, std::get<FastDiffusion>(env), x, t, eps, dt, w_tilde_increments);
  }
}

Eigen::MatrixXd frozen_generator(const StateDependentJump& spec, std::span<const double> x) {
  const int n = spec.n_states;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (int y = 0; y < n; ++y) {
    const double c = spec.intensity(x, y);
    for (int y2 = 0; y2 < n; ++y2) {
      if (y2 == y) continue;
      Q(y, y2) = c * spec.transition(x, y, y2);
      Q(y, y) -= Q(y, y2);
    }
  }
  return Q;
}

Distribution stationary_measure(const Eigen::MatrixXd& Q) {
  const Eigen::Index n = Q.rows();
  if (n == 1) return Distribution{{1.0}};
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Q.transpose());
  lu.setThreshold(1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()));
  if (lu.rank() < n - 1) {
    std::ostringstream os;
    os << "generator null space has dimension " << n - lu.rank();
    throw Error(ErrorCode::Reducible, os.str());
  }
  Eigen::MatrixXd A(n + 1, n);
  A.topRows(n) = Q.transpose();
  A.row(n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs(n) = 1.0;
  Eigen::VectorXd pi = A.colPivHouseholderQr().solve(rhs);
  Distribution d;
  d.weights.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    d.weights[i] = std::max(0.0, pi(i));
    sum += d.weights[i];
  }
  for (auto& w : d.weights) w /= sum;
  return d;
}

Distribution stationary_measure(const EnvironmentSpec& env, double /*t*/, std::span<const double> x) {
  if (const auto* mk = std::get_if<MarkovSwitching>(&env)) return stationary_measure(mk->Q);
  if (const auto* jp = std::get_if<StateDependentJump>(&env)) return stationary_measure(frozen_generator(*jp, x));
  throw Error(ErrorCode::UnsupportedEnvironment, "stationary measure of the fast diffusion is not computed");
}

}  // namespace sklab
