#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sklab/grid.hpp"
#include "sklab/model.hpp"

namespace sklab {

/// Rate-function view of a model with a constant-generator discrete (or
/// trivial) environment.
class RateModel {
 public:
  /// Throws UnsupportedEnvironment for non-Markov environments, Reducible
  /// for a reducible generator and BadInterval for beta_box <= 0.
  explicit RateModel(ValidatedModel model, double beta_box = 16.0, double eig_tol = 1e-12);

  const ValidatedModel& model() const noexcept { return model_; }
  const Eigen::MatrixXd& generator() const noexcept { return Q_; }
  double beta_box() const noexcept { return beta_box_; }
  double eig_tol() const noexcept { return eig_tol_; }

  RateModel with_beta_box(double box) const;

 private:
  ValidatedModel model_;
  Eigen::MatrixXd Q_;
  double beta_box_;
  double eig_tol_;
};

/// Principal eigenvalue of Q + diag(g). Dense eigensolve for n <= 64, shifted
/// power iteration above that.
double h_functional(const Eigen::MatrixXd& Q, std::span<const double> g, double tol = 1e-12);

/// (eps/T) log of (exp((Q + diag g) T/eps) 1)_i for every starting state i.
/// Deterministic check of the eigenvalue characterization.
std::vector<double> h_functional_oracle(const Eigen::MatrixXd& Q, std::span<const double> g, double eps, double T);

/// H(t, x, beta) with g(i) = beta.b(t,x,i)/lambda_0 + |sigma_0^T beta|^2 / (2 lambda_0^2).
double h_at(const RateModel& rate, double t, std::span<const double> x, std::span<const double> beta);

/// L(t, x, gamma) = sup over the beta box of <gamma, beta> - H. Throws
/// Error(BoundaryHit) when the maximizer sits on the box.
double lagrangian(const RateModel& rate, double t, std::span<const double> x, std::span<const double> gamma);

/// Composite midpoint quadrature of L along a path; +inf if a segment still
/// hits the box after one doubling.
double action(const RateModel& rate, const Path& phi);

/// Closed-form constant-coefficient action int lambda^2 (phi' - b/lambda)^2 / (2 sigma^2).
/// Throws Error(NonscalarModel) unless phi is one-dimensional.
double gaussian_action(double lambda0, double sigma0, double b0, const Path& phi);

struct MinActionResult {
  Path path;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;  // false means the iteration cap was hit
};

/// Least-action piecewise-linear path on [0, 1] with fixed endpoints.
MinActionResult minimize_action(const RateModel& rate, std::span<const double> x_start,
                                std::span<const double> x_end, int n_segments);

/// Controls for the jump-environment cost, piecewise constant on the
/// segments of phi's grid and on n_z equal cells of [0, zeta].
struct JumpControls {
  int n_z = 1;
  std::vector<Eigen::MatrixXd> u;               // u[i]: n_segments x m
  std::vector<std::vector<Eigen::MatrixXd>> v;  // v[i][j]: n_segments x n_z, unused for i == j
  Eigen::MatrixXd pi;                           // n_segments x n_states
};

/// Controls with u = 0, v = 1 and pi = 1/n on every cell.
JumpControls neutral_controls(int n_states, int m, int n_segments, int n_z);

struct JumpCost {
  double value = 0.0;
  double u_term = 0.0;
  double v_term = 0.0;
  double drift_residual = 0.0;         // sup |phi' - sum_j pi_j (b_j + sigma u_j) / lambda|
  double stationarity_residual = 0.0;  // sup_{s,i} |sum_j pi_j Phi^v_ji|
};

/// ell(x) = x ln x - x + 1 with ell(0) = 1.
double ell(double x);

/// Objective of the jump rate function at the given controls. Constraint
/// membership is reported through the residuals, not enforced.
/// Throws Error(NegativeControl) for any v < 0.
JumpCost jump_cost_evaluate(const JumpControls& controls, const ValidatedModel& model, const Path& phi);

}  // namespace sklab
