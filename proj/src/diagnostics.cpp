#include "sklab/diagnostics.hpp"

#include <cmath>

namespace sklab {

double phi1(double a) {
  if (a < 1e-3) return 1.0 - a / 2.0 + a * a / 6.0 - a * a * a / 24.0;
  return -std::expm1(-a) / a;
}

double psi2(double a) {
  if (a < 1e-3) return 0.5 - a / 3.0 + a * a / 8.0 - a * a * a / 30.0;
  return (1.0 - std::exp(-a) * (1.0 + a)) / (a * a);
}

double sup_norm(const Path& path) {
  double best = 0.0;
  for (std::int64_t k = 0; k < path.n_nodes(); ++k) {
    double s = 0.0;
    for (double v : path.at(k)) s += v * v;
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

namespace {

const Diagnostics& require(const TrajectoryBundle& b, bool need_H, bool need_R) {
  if (!b.diagnostics || b.diagnostics->A_eps.size() != static_cast<std::size_t>(b.grid.n_nodes())) {
    throw Error(ErrorCode::MissingDiagnostics, "A_eps not recorded on this bundle");
  }
  if (need_H && b.diagnostics->H_eps.n_nodes() != b.grid.n_nodes()) {
    throw Error(ErrorCode::MissingDiagnostics, "H_eps not recorded on this bundle");
  }
  if (need_R && b.diagnostics->R[0].n_nodes() != b.grid.n_nodes()) {
    throw Error(ErrorCode::MissingDiagnostics, "remainder terms not recorded on this bundle");
  }
  return *b.diagnostics;
}

/// Per-node coefficient values reused by the remainder quadratures.
struct NodeCoefficients {
  std::vector<double> lambda;      // lambda_eps(t_k, X_k)
  std::vector<double> lambda_dot;  // d/dt lambda(t, X_t) = dlambda/dt + <grad_x lambda, p>
  Path b;                          // b(t_k, X_k, env_k)
};

NodeCoefficients node_coefficients(const ValidatedModel& model, const TrajectoryBundle& bundle, bool with_dot) {
  const auto& c = model.coefficients();
  const auto& g = bundle.grid;
  const int d = model.d();
  NodeCoefficients nc;
  nc.lambda.resize(static_cast<std::size_t>(g.n_nodes()));
  nc.b = Path(g, d);
  if (with_dot) nc.lambda_dot.resize(static_cast<std::size_t>(g.n_nodes()));
  for (std::int64_t k = 0; k < g.n_nodes(); ++k) {
    const double t = g.node(k);
    const auto x = bundle.X.at(k);
    nc.lambda[k] = c.friction(t, x, bundle.eps);
    c.drift(t, x, bundle.env.at(k), nc.b.at(k));
    if (with_dot) {
      const auto grad = friction_gradient(c, t, x, bundle.eps);
      double v = grad.dt;
      const auto p = bundle.p.at(k);
      for (int i = 0; i < d; ++i) v += grad.dx[i] * p[i];
      nc.lambda_dot[k] = v;
    }
  }
  return nc;
}

}  // namespace

std::vector<double> compute_A_eps(const ValidatedModel& model, const TrajectoryBundle& bundle) {
  const auto& c = model.coefficients();
  const auto& g = bundle.grid;
  const double scale = g.dt() / (2.0 * bundle.eps * bundle.eps);
  std::vector<double> A(static_cast<std::size_t>(g.n_nodes()), 0.0);
  double lam_prev = c.friction(g.node(0), bundle.X.at(0), bundle.eps);
  for (std::int64_t k = 0; k < g.n_steps(); ++k) {
    const double lam_next = c.friction(g.node(k + 1), bundle.X.at(k + 1), bundle.eps);
    A[k + 1] = A[k] + scale * (lam_prev + lam_next);
    lam_prev = lam_next;
  }
  return A;
}

Path compute_H_eps(const ValidatedModel& model, const TrajectoryBundle& bundle) {
  const auto& diag = require(bundle, false, false);
  const auto& c = model.coefficients();
  const auto& g = bundle.grid;
  const int d = model.d();
  const int m = model.m();
  const double sqrt_eps = std::sqrt(bundle.eps);
  Path H(g, d);
  std::vector<double> sigma(static_cast<std::size_t>(d) * m);
  for (std::int64_t k = 0; k < g.n_steps(); ++k) {
    const double dA = diag.A_eps[k + 1] - diag.A_eps[k];
    const double decay = std::exp(-dA);
    const double half = std::exp(-0.5 * dA);
    c.diffusion(g.node(k), bundle.X.at(k), bundle.eps, sigma);
    for (int i = 0; i < d; ++i) {
      double sdw = 0.0;
      for (int j = 0; j < m; ++j) sdw += sigma[i * m + j] * (bundle.w(k + 1, j) - bundle.w(k, j));
      H(k + 1, i) = decay * H(k, i) + sqrt_eps * sdw * half;
    }
  }
  return H;
}

std::array<Path, 5> compute_remainder(const ValidatedModel& model, const TrajectoryBundle& bundle) {
  const auto& diag = require(bundle, true, false);
  const auto& g = bundle.grid;
  const int d = model.d();
  const double dt = g.dt();
  const auto nc = node_coefficients(model, bundle, true);
  const auto& A = diag.A_eps;
  const auto& H = diag.H_eps;

  std::array<Path, 5> R;
  for (auto& r : R) r = Path(g, d);
  const auto p0 = bundle.p.at(0);

  std::vector<double> conv(d, 0.0);  // B_k = int_0^{t_k} e^{-A(t_k,s)} b ds
  std::vector<double> prev3(d, 0.0), prev5(d, 0.0);
  double kernel_mass = 0.0;  // int_0^{t_k} e^{-A(s)} ds
  for (int i = 0; i < d; ++i) {
    R[1](0, i) = 0.0;
    R[3](0, i) = -H(0, i) / nc.lambda[0];
  }
  for (std::int64_t k = 0; k < g.n_steps(); ++k) {
    const double dA = A[k + 1] - A[k];
    kernel_mass += std::exp(-A[k]) * dt * phi1(dA);
    const double decay = std::exp(-dA);
    const double w_left = dt * psi2(dA);
    const double w_right = dt * (phi1(dA) - psi2(dA));
    const double lam_l = nc.lambda[k];
    const double lam_r = nc.lambda[k + 1];
    for (int i = 0; i < d; ++i) {
      const double conv_l = conv[i];
      conv[i] = decay * conv[i] + w_left * nc.b(k, i) + w_right * nc.b(k + 1, i);
      R[0](k + 1, i) = p0[i] * kernel_mass;
      R[1](k + 1, i) = -conv[i] / lam_r;
      const double f3_l = conv_l * nc.lambda_dot[k] / (lam_l * lam_l);
      const double f3_r = conv[i] * nc.lambda_dot[k + 1] / (lam_r * lam_r);
      R[2](k + 1, i) = R[2](k, i) - 0.5 * dt * (f3_l + f3_r);
      R[3](k + 1, i) = -H(k + 1, i) / lam_r;
      const double f5_l = H(k, i) * nc.lambda_dot[k] / (lam_l * lam_l);
      const double f5_r = H(k + 1, i) * nc.lambda_dot[k + 1] / (lam_r * lam_r);
      R[4](k + 1, i) = R[4](k, i) - 0.5 * dt * (f5_l + f5_r);
    }
  }
  return R;
}

Path representation_residual(const ValidatedModel& model, const TrajectoryBundle& bundle) {
  const auto& diag = require(bundle, true, true);
  const auto& c = model.coefficients();
  const auto& g = bundle.grid;
  const int d = model.d();
  const int m = model.m();
  const double dt = g.dt();
  const double sqrt_eps = std::sqrt(bundle.eps);
  const auto nc = node_coefficients(model, bundle, false);
  const auto& x0 = model.spec().x0;

  Path res(g, d);
  std::vector<double> drift_int(d, 0.0), noise_int(d, 0.0);
  std::vector<double> sigma(static_cast<std::size_t>(d) * m);
  for (std::int64_t k = 0; k <= g.n_steps(); ++k) {
    if (k > 0) {
      c.diffusion(g.node(k - 1), bundle.X.at(k - 1), bundle.eps, sigma);
      for (int i = 0; i < d; ++i) {
        drift_int[i] += 0.5 * dt * (nc.b(k - 1, i) / nc.lambda[k - 1] + nc.b(k, i) / nc.lambda[k]);
        double sdw = 0.0;
        for (int j = 0; j < m; ++j) sdw += sigma[i * m + j] * (bundle.w(k, j) - bundle.w(k - 1, j));
        noise_int[i] += sdw / nc.lambda[k - 1];
      }
    }
    for (int i = 0; i < d; ++i) {
      double r_sum = 0.0;
      for (const auto& r : diag.R) r_sum += r(k, i);
      res(k, i) = bundle.X(k, i) - x0[i] - drift_int[i] - sqrt_eps * noise_int[i] - r_sum;
    }
  }
  return res;
}

void attach_diagnostics(const ValidatedModel& model, TrajectoryBundle& bundle) {
  bundle.diagnostics.emplace();
  bundle.diagnostics->A_eps = compute_A_eps(model, bundle);
  bundle.diagnostics->H_eps = compute_H_eps(model, bundle);
  bundle.diagnostics->R = compute_remainder(model, bundle);
}

}  // namespace sklab
