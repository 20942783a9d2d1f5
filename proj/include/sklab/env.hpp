#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sklab/model.hpp"
#include "sklab/rng.hpp"

namespace sklab {

/// Current value of the fast environment. Discrete environments use label
/// and residual_clock (time left until the next exponential event: a jump
/// for Markov switching, a candidate for thinning). The diffusion case uses y.
struct EnvState {
  int label = 0;
  std::vector<double> y;
  double residual_clock = 0.0;
  std::int64_t events = 0;  // accepted jumps so far

  EnvView view() const { return EnvView{label, y}; }
};

/// Probability weights over a finite state set.
struct Distribution {
  std::vector<double> weights;
};

/// Initial state; draws the first holding time from the environment lane.
EnvState initial_env_state(const EnvironmentSpec& env, double eps, NoiseStream& stream);

/// Exact simulation of the chain with generator Q/eps over [0, dt].
void env_step_markov(EnvState& state, const MarkovSwitching& spec, double eps, double dt, NoiseStream& stream);

/// Thinning: candidates at rate zeta/eps; a candidate at state y jumps to y'
/// when a uniform mark on [0, zeta) lands in the slot of length c_y(x) r_yy'(x).
/// x is held fixed over the step.
void env_step_jump(EnvState& state, const StateDependentJump& spec, std::span<const double> x, double eps, double dt,
                   NoiseStream& stream);

/// Slot E_yy'(x) within [0, zeta) that a mark must land in for the jump y -> y'.
struct Slot {
  double lo;
  double hi;
};
Slot jump_slot(const StateDependentJump& spec, std::span<const double> x, int y, int y_next);

/// Euler-Maruyama for dY = F/eps dt + G/sqrt(eps) dw~ with internal substeps
/// no longer than eps/10; the supplied increment is spread evenly over them.
void env_step_diffusion(EnvState& state, const FastDiffusion& spec, std::span<const double> x, double t, double eps,
                        double dt, std::span<const double> w_tilde_increments);

/// Advances whichever environment the model carries.
void advance_environment(EnvState& state, const EnvironmentSpec& env, std::span<const double> x, double t, double eps,
                         double dt, NoiseStream& stream, std::span<const double> w_tilde_increments);

/// Generator of the jump model with x frozen: Q_yy' = c_y(x) r_yy'(x).
Eigen::MatrixXd frozen_generator(const StateDependentJump& spec, std::span<const double> x);

/// Solves pi Q = 0, sum pi = 1. Throws Error(Reducible) if the null space is
/// not one-dimensional.
Distribution stationary_measure(const Eigen::MatrixXd& Q);

/// pi_{t,x} for discrete environments; Error(UnsupportedEnvironment) otherwise.
Distribution stationary_measure(const EnvironmentSpec& env, double t, std::span<const double> x);

}  // namespace sklab
