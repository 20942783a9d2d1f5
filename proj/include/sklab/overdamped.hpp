#pragma once

#include <vector>

#include "sklab/integrator.hpp"

namespace sklab {

/// Path of q' = b/lambda + sqrt(eps) (sigma/lambda) w' together with the
/// environment it saw and its driving noise.
struct OverdampedTrajectory {
  TimeGrid grid;
  double eps = 0.0;
  Path q;
  EnvPath env;
  Path w;
};

/// Euler-Maruyama at the grid step with fresh increments from the stream's
/// Brownian lane; the environment uses the Environment substream.
OverdampedTrajectory simulate_overdamped(const ValidatedModel& model, double eps, const TimeGrid& grid,
                                         const NoiseStream& stream);

/// Same, but driven by the node increments recorded in a second-order bundle
/// (w and, for fast diffusions, w~). The environment is re-simulated from the
/// same Environment substream so both systems see the same realization.
OverdampedTrajectory simulate_overdamped(const ValidatedModel& model, const TrajectoryBundle& shared,
                                         const NoiseStream& stream);

/// b_bar(t, x) = sum_y pi_{t,x}(y) b(t, x, y).
std::vector<double> averaged_drift(const ValidatedModel& model, double t, std::span<const double> x);

/// phi*' = b_bar(t, phi*) / lambda_0(t, phi*) by classical RK4 at grid resolution.
Path solve_averaged_ode(const ValidatedModel& model, const TimeGrid& grid);

/// sup over nodes of |X_t - q_t|. Throws Error(GridMismatch) for different grids.
double sk_distance(const TrajectoryBundle& bundle, const Path& q);

/// sup over nodes of |a_t - b_t| for two paths on the same grid.
double sup_distance(const Path& a, const Path& b);

}  // namespace sklab
