#pragma once

#include <array>
#include <vector>

#include "sklab/integrator.hpp"

namespace sklab {

/// A_eps at nodes by the trapezoid rule: eps^-2 int_0^t lambda_eps(r, X_r) dr.
std::vector<double> compute_A_eps(const ValidatedModel& model, const TrajectoryBundle& bundle);

/// H_eps(t) = sqrt(eps) e^{-A(t)} int_0^t e^{A(s)} sigma dw(s), evaluated by
/// H_{k+1} = e^{-dA} H_k + sqrt(eps) sigma_k dw_k e^{-dA/2}. Never forms e^{+A}.
/// Requires bundle.diagnostics->A_eps.
Path compute_H_eps(const ValidatedModel& model, const TrajectoryBundle& bundle);

/// R^(1..5) of X = x0 + int b/lambda + sqrt(eps) int sigma/lambda dw + R, by
/// quadrature on the node paths. Convolutions against e^{-A(t,s)} integrate
/// the exponential exactly with b interpolated linearly between nodes.
/// Requires A_eps and H_eps.
std::array<Path, 5> compute_remainder(const ValidatedModel& model, const TrajectoryBundle& bundle);

/// X_t - x0 - int b/lambda ds - sqrt(eps) int sigma/lambda dw - sum_i R^(i)
/// at every node. Requires full diagnostics.
Path representation_residual(const ValidatedModel& model, const TrajectoryBundle& bundle);

/// Fills bundle.diagnostics with A_eps, H_eps and R.
void attach_diagnostics(const ValidatedModel& model, TrajectoryBundle& bundle);

/// max over nodes of the Euclidean norm.
double sup_norm(const Path& path);

/// (1 - e^{-a}) / a and (1 - e^{-a}(1 + a)) / a^2 with small-a series.
double phi1(double a);
double psi2(double a);

}  // namespace sklab
