#include "sklab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sklab/diagnostics.hpp"

namespace sklab {

Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::Euler;
  if (name == "exponential") return Scheme::Exponential;
  throw Error(ErrorCode::BadScheme, "unknown scheme '" + name + "' (expected euler or exponential)");
}

std::string to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "exponential"; }

namespace {

/// 1 - (1 - e^{-a}) / a, accurate for small a.
double one_minus_phi1(double a) {
  if (a < 1e-4) return a / 2.0 - a * a / 6.0 + a * a * a / 24.0;
  return (a + std::expm1(-a)) / a;
}

}  // namespace

SecondOrderStepper::SecondOrderStepper(const ValidatedModel& model, double eps, SchemeConfig config)
    : model_(&model),
      eps_(eps),
      config_(config),
      d_(model.d()),
      m_(model.m()),
      n_(extra_noise_dim(model.environment())),
      sqrt_eps_(std::sqrt(eps)) {
  if (!(eps > 0.0)) throw Error(ErrorCode::BadScheme, "eps must be > 0");
  if (!(config.substep_factor > 0.0 && config.substep_factor <= 1.0)) {
    throw Error(ErrorCode::BadScheme, "substep_factor must lie in (0, 1]");
  }
  if (const auto* fd = std::get_if<FastDiffusion>(&model.environment())) {
    corr_ = CorrelationMap(m_, n_, fd->Sigma);
  } else {
    corr_ = CorrelationMap(m_, 0, Eigen::MatrixXd(m_, 0));
  }
  b_.resize(d_);
  sigma_.resize(static_cast<std::size_t>(d_) * m_);
  z_.resize(m_ + n_);
  dB_.resize(m_ + n_);
  J_.resize(m_);
  dw_.resize(m_ + n_);
  x_left_.resize(d_);
}

double SecondOrderStepper::substep(double dt) const {
  double h = 0.0;
  if (config_.scheme == Scheme::Euler) {
    h = config_.substep_factor * eps_ * eps_ / model_->probe().lambda_max;
  } else {
    h = config_.substep_factor * eps_;
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::StepTooCoarse, "internal step is not positive");
  if (h >= dt) return dt;
  const double n_sub = std::ceil(dt / h - 1e-9);
  return dt / n_sub;
}

void SecondOrderStepper::step(PhaseState& s, double t, double dt, NoiseStream& brownian, NoiseStream& env_stream,
                              StepNoise& noise) {
  noise.dw.assign(m_, 0.0);
  noise.dw_tilde.assign(n_, 0.0);
  const double h = substep(dt);
  const auto n_sub = static_cast<std::int64_t>(std::llround(dt / h));
  if (n_sub < 1) throw Error(ErrorCode::StepTooCoarse, "grid step cannot be tiled");
  for (std::int64_t k = 0; k < n_sub; ++k) {
    const double ts = t + static_cast<double>(k) * h;
    if (config_.scheme == Scheme::Euler) {
      euler_substep(s, ts, h, brownian, env_stream, noise);
    } else {
      exponential_substep(s, ts, h, brownian, env_stream, noise);
    }
  }
  check_finite(s);
}

void SecondOrderStepper::check_finite(const PhaseState& s) const {
  for (double v : s.p) {
    if (!(std::abs(v) <= 1e10)) throw Error(ErrorCode::BlowUp, "momentum left |p| <= 1e10");
  }
  for (double v : s.X) {
    if (!std::isfinite(v)) throw Error(ErrorCode::BlowUp, "position is not finite");
  }
}

void SecondOrderStepper::euler_substep(PhaseState& s, double t, double h, NoiseStream& brownian,
                                       NoiseStream& env_stream, StepNoise& noise) {
  const auto& c = model_->coefficients();
  std::copy(s.X.begin(), s.X.end(), x_left_.begin());
  c.drift(t, s.X, s.env.view(), b_);
  const double lam = c.friction(t, s.X, eps_);
  c.diffusion(t, s.X, eps_, sigma_);
  const double sh = std::sqrt(h);
  for (int i = 0; i < m_ + n_; ++i) z_[i] = sh * brownian.normal();
  corr_.apply(z_, dw_);

  const double inv_eps2 = 1.0 / (eps_ * eps_);
  const double noise_scale = sqrt_eps_ * inv_eps2;
  for (int i = 0; i < d_; ++i) {
    double sdw = 0.0;
    for (int j = 0; j < m_; ++j) sdw += sigma_[i * m_ + j] * dw_[j];
    const double p_old = s.p[i];
    s.p[i] = p_old + (b_[i] - lam * p_old) * h * inv_eps2 + noise_scale * sdw;
    s.X[i] += p_old * h;
  }
  // environment over the substep with X frozen at the left endpoint
  const std::span<const double> dwt(dw_.data() + m_, static_cast<std::size_t>(n_));
  advance_environment(s.env, model_->environment(), x_left_, t, eps_, h, env_stream, dwt);
  for (int j = 0; j < m_; ++j) noise.dw[j] += dw_[j];
  for (int j = 0; j < n_; ++j) noise.dw_tilde[j] += dw_[m_ + j];
}

ExpKernel exponential_kernel(double lambda, double eps, double h) {
  const double k = lambda / (eps * eps);
  const double a = k * h;
  ExpKernel K;
  K.decay = std::exp(-a);
  const double one_minus_E = -std::expm1(-a);
  K.one_minus_decay = one_minus_E;
  K.x_from_p = one_minus_E / k;
  K.x_from_drift = h * one_minus_phi1(a);
  // Cholesky factor of Cov(dB, J)
  const double c11 = h;
  const double c12 = one_minus_E / k;
  const double c22 = -std::expm1(-2.0 * a) / (2.0 * k);
  K.L11 = std::sqrt(c11);
  K.L21 = c12 / K.L11;
  K.L22 = std::sqrt(std::max(0.0, c22 - K.L21 * K.L21));
  return K;
}

void SecondOrderStepper::refresh_kernel(double lambda, double h) {
  if (lambda == cached_lambda_ && h == cached_h_) return;
  cached_lambda_ = lambda;
  cached_h_ = h;
  kernel_ = exponential_kernel(lambda, eps_, h);
}

void SecondOrderStepper::exponential_substep(PhaseState& s, double t, double h, NoiseStream& brownian,
                                             NoiseStream& env_stream, StepNoise& noise) {
  const auto& c = model_->coefficients();
  std::copy(s.X.begin(), s.X.end(), x_left_.begin());
  c.drift(t, s.X, s.env.view(), b_);
  const double lam = c.friction(t, s.X, eps_);
  c.diffusion(t, s.X, eps_, sigma_);
  refresh_kernel(lam, h);

  // w block: exact joint draw of (dB_j, J_j); the w~ block only needs dB.
  for (int j = 0; j < m_; ++j) {
    const double z1 = brownian.normal();
    const double z2 = brownian.normal();
    dB_[j] = kernel_.L11 * z1;
    J_[j] = kernel_.L21 * z1 + kernel_.L22 * z2;
  }
  for (int j = m_; j < m_ + n_; ++j) dB_[j] = kernel_.L11 * brownian.normal();
  // The top-left block of the lower Cholesky factor of [[I, S], [S^T, I]] is I,
  // so w increments and the J's pass through unchanged.
  corr_.apply(dB_, dw_);

  const double p_noise = sqrt_eps_ / (eps_ * eps_);
  const double x_noise = sqrt_eps_ / lam;
  for (int i = 0; i < d_; ++i) {
    double sJ = 0.0;
    double sdB = 0.0;
    for (int j = 0; j < m_; ++j) {
      sJ += sigma_[i * m_ + j] * J_[j];
      sdB += sigma_[i * m_ + j] * dw_[j];
    }
    const double p_old = s.p[i];
    const double drift_vel = b_[i] / lam;
    s.p[i] = p_old * kernel_.decay + drift_vel * kernel_.one_minus_decay + p_noise * sJ;
    s.X[i] += p_old * kernel_.x_from_p + drift_vel * kernel_.x_from_drift + x_noise * (sdB - sJ);
  }
  const std::span<const double> dwt(dw_.data() + m_, static_cast<std::size_t>(n_));
  advance_environment(s.env, model_->environment(), x_left_, t, eps_, h, env_stream, dwt);
  for (int j = 0; j < m_; ++j) noise.dw[j] += dw_[j];
  for (int j = 0; j < n_; ++j) noise.dw_tilde[j] += dw_[m_ + j];
}

void step_euler(PhaseState& s, double t, double dt, double eps, const ValidatedModel& model, NoiseStream& brownian,
                NoiseStream& env_stream, double substep_factor) {
  SecondOrderStepper stepper(model, eps, SchemeConfig{Scheme::Euler, substep_factor, false});
  StepNoise noise;
  stepper.step(s, t, dt, brownian, env_stream, noise);
}

void step_exponential(PhaseState& s, double t, double dt, double eps, const ValidatedModel& model,
                      NoiseStream& brownian, NoiseStream& env_stream, double substep_factor) {
  SecondOrderStepper stepper(model, eps, SchemeConfig{Scheme::Exponential, substep_factor, false});
  StepNoise noise;
  stepper.step(s, t, dt, brownian, env_stream, noise);
}

TrajectoryBundle simulate_second_order(const ValidatedModel& model, double eps, const TimeGrid& grid,
                                       const NoiseStream& stream, const SchemeConfig& config) {
  SecondOrderStepper stepper(model, eps, config);
  const int d = model.d();
  const int m = model.m();
  const int n = extra_noise_dim(model.environment());

  NoiseStream brownian = stream;
  NoiseStream env_stream = stream.substream(Lane::Environment);

  TrajectoryBundle out;
  out.grid = grid;
  out.eps = eps;
  out.X = Path(grid, d);
  out.p = Path(grid, d);
  out.w = Path(grid, m);
  const bool discrete = is_discrete(model.environment());
  if (discrete) {
    out.env.labels.resize(static_cast<std::size_t>(grid.n_nodes()));
  } else {
    const auto& fd = std::get<FastDiffusion>(model.environment());
    out.env.y = Path(grid, fd.l);
    out.w_tilde = Path(grid, n);
  }

  PhaseState s;
  s.X = model.spec().x0;
  s.p = model.initial_momentum(eps);
  s.env = initial_env_state(model.environment(), eps, env_stream);

  auto record = [&](std::int64_t k) {
    std::copy(s.X.begin(), s.X.end(), out.X.at(k).begin());
    std::copy(s.p.begin(), s.p.end(), out.p.at(k).begin());
    if (discrete) {
      out.env.labels[static_cast<std::size_t>(k)] = s.env.label;
    } else {
      std::copy(s.env.y.begin(), s.env.y.end(), out.env.y.at(k).begin());
    }
  };
  record(0);
  StepNoise noise;
  for (std::int64_t k = 0; k < grid.n_steps(); ++k) {
    stepper.step(s, grid.node(k), grid.dt(), brownian, env_stream, noise);
    record(k + 1);
    for (int j = 0; j < m; ++j) out.w(k + 1, j) = out.w(k, j) + noise.dw[j];
    for (int j = 0; j < n; ++j) out.w_tilde(k + 1, j) = out.w_tilde(k, j) + noise.dw_tilde[j];
  }

  if (config.record_diagnostics) attach_diagnostics(model, out);
  return out;
}

}  // namespace sklab
