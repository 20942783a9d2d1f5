#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sklab/brownian.hpp"
#include "sklab/env.hpp"
#include "sklab/grid.hpp"
#include "sklab/model.hpp"
#include "sklab/rng.hpp"

namespace sklab {

enum class Scheme { Euler, Exponential };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme s);

/// euler: internal step substep_factor * eps^2 / lambda_max.
/// exponential: internal step substep_factor * eps. Both are capped at the grid step.
struct SchemeConfig {
  Scheme scheme = Scheme::Exponential;
  double substep_factor = 0.1;
  bool record_diagnostics = false;
};

/// Environment sampled at grid nodes: labels for discrete environments, y for
/// the fast diffusion.
struct EnvPath {
  std::vector<int> labels;
  Path y;

  bool discrete() const noexcept { return y.dim == 0; }
  EnvView at(std::int64_t k) const {
    return discrete() ? EnvView{labels[static_cast<std::size_t>(k)], {}} : EnvView{0, y.at(k)};
  }
};

/// A_eps(t) = eps^-2 int_0^t lambda, H_eps and the five remainder terms of
/// the integrated representation of X.
struct Diagnostics {
  std::vector<double> A_eps;
  Path H_eps;
  std::array<Path, 5> R;
};

struct TrajectoryBundle {
  TimeGrid grid;
  double eps = 0.0;
  Path X;
  Path p;
  EnvPath env;
  Path w;
  Path w_tilde;  // only for fast-diffusion environments
  std::optional<Diagnostics> diagnostics;
};

/// Position, momentum and environment of one replica.
struct PhaseState {
  std::vector<double> X;
  std::vector<double> p;
  EnvState env;
};

/// Brownian increments accumulated over one grid step.
struct StepNoise {
  std::vector<double> dw;
  std::vector<double> dw_tilde;
};

/// Coefficients of the frozen-coefficient exact update over a substep h with
/// k = lambda/eps^2, a = k h:
///   p' = decay p + (1 - decay) b/lambda + (sqrt(eps)/eps^2) sigma J
///   X' = X + x_from_p p + x_from_drift b/lambda + (sqrt(eps)/lambda) sigma (dB - J)
/// where (dB, J = int e^{-k(h-s)} dB(s)) = L (z1, z2) with L lower triangular.
struct ExpKernel {
  double decay = 0.0;
  double one_minus_decay = 0.0;  // via expm1
  double x_from_p = 0.0;
  double x_from_drift = 0.0;
  double L11 = 0.0, L21 = 0.0, L22 = 0.0;
};
ExpKernel exponential_kernel(double lambda, double eps, double h);

/// Advances the first-order system X' = p, eps^2 p' = b - lambda p + sqrt(eps) sigma w'
/// over one grid step, tiling it with the scheme's internal substeps.
class SecondOrderStepper {
 public:
  SecondOrderStepper(const ValidatedModel& model, double eps, SchemeConfig config);

  /// Internal substep used for a grid step of length dt.
  double substep(double dt) const;

  void step(PhaseState& s, double t, double dt, NoiseStream& brownian, NoiseStream& env_stream, StepNoise& noise);

 private:
  void euler_substep(PhaseState& s, double t, double h, NoiseStream& brownian, NoiseStream& env_stream, StepNoise& noise);
  void exponential_substep(PhaseState& s, double t, double h, NoiseStream& brownian, NoiseStream& env_stream,
                           StepNoise& noise);
  void refresh_kernel(double lambda, double h);
  void check_finite(const PhaseState& s) const;

  const ValidatedModel* model_;
  double eps_;
  SchemeConfig config_;
  int d_, m_, n_;
  CorrelationMap corr_;
  double sqrt_eps_;
  // scratch
  std::vector<double> b_, sigma_, z_, dB_, J_, dw_, x_left_;
  // cached exponential kernel for (lambda, h)
  double cached_lambda_ = -1.0, cached_h_ = -1.0;
  ExpKernel kernel_;
};

void step_euler(PhaseState& s, double t, double dt, double eps, const ValidatedModel& model, NoiseStream& brownian,
                NoiseStream& env_stream, double substep_factor = 0.1);
void step_exponential(PhaseState& s, double t, double dt, double eps, const ValidatedModel& model,
                      NoiseStream& brownian, NoiseStream& env_stream, double substep_factor = 0.1);

/// Full trajectory at grid nodes. The stream is the replica's Brownian lane;
/// the environment draws come from its Environment substream.
TrajectoryBundle simulate_second_order(const ValidatedModel& model, double eps, const TimeGrid& grid,
                                       const NoiseStream& stream, const SchemeConfig& config);

}  // namespace sklab
