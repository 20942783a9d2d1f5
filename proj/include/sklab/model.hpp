#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sklab/errors.hpp"

namespace sklab {

/// Environment value seen by the drift: a discrete label or a continuous
/// vector (fast-diffusion case).
struct EnvView {
  int label = 0;
  std::span<const double> y{};
};

using DriftFn = std::function<void(double t, std::span<const double> x, const EnvView& env, std::span<double> out)>;
using FrictionFn = std::function<double(double t, std::span<const double> x, double eps)>;
/// Writes the d-by-m diffusion matrix row-major into out.
using DiffusionFn = std::function<void(double t, std::span<const double> x, double eps, std::span<double> out)>;

/// Coefficients of eps^2 X'' = b(t,X,env) - lambda_eps(t,X) X' + sqrt(eps) sigma_eps(t,X) w'.
/// lambda and sigma take eps explicitly; eps = 0 selects the limiting member.
struct CoefficientField {
  int d = 1;
  int m = 1;
  DriftFn drift;
  FrictionFn friction;
  DiffusionFn diffusion;
  double kappa0 = 0.0;          // uniform lower bound on lambda
  double lip_b = 0.0;           // Lipschitz constant of b in x
  double sigma_norm_bound = 0.0;      // bound on |sigma| (spectral norm)
  double sigma_inv_norm_bound = 0.0;  // bound on |sigma^-1| when d == m; 0 disables
  std::string family;
};

struct MarkovSwitching {
  Eigen::MatrixXd Q;  // generator; the chain runs with Q / eps
  int initial_state = 0;
};

using IntensityFn = std::function<double(std::span<const double> x, int y)>;
using TransitionFn = std::function<double(std::span<const double> x, int y, int y_next)>;

/// State-dependent jump environment simulated by thinning against zeta.
struct StateDependentJump {
  int n_states = 1;
  IntensityFn intensity;    // c_y(x)
  TransitionFn transition;  // r_{yy'}(x)
  double zeta = 1.0;
  int initial_state = 0;
};

using FastDriftFn = std::function<void(double t, std::span<const double> x, std::span<const double> y, std::span<double> out)>;
/// Writes the l-by-n matrix G row-major.
using FastNoiseFn = std::function<void(double t, std::span<const double> x, std::span<const double> y, std::span<double> out)>;

/// dY = F/eps dt + G/sqrt(eps) dw~, with w~ correlated to w through Sigma (m-by-n).
struct FastDiffusion {
  int l = 1;
  int n = 1;
  FastDriftFn F;
  FastNoiseFn G;
  Eigen::MatrixXd Sigma;
  std::vector<double> y0;
};

using EnvironmentSpec = std::variant<MarkovSwitching, StateDependentJump, FastDiffusion>;

/// Single-state environment (no switching).
EnvironmentSpec constant_environment();

bool is_discrete(const EnvironmentSpec& env);
int n_states(const EnvironmentSpec& env);          // 0 for the diffusion case
int extra_noise_dim(const EnvironmentSpec& env);   // n for the diffusion case, else 0

enum class X1Scaling { Fixed, OneOverEps };

/// Box over which coefficient bounds are spot-checked.
struct ProbeBox {
  double t_lo = 0.0;
  double t_hi = 1.0;
  double x_lo = -3.0;
  double x_hi = 3.0;
  int points_per_axis = 64;
  std::vector<double> eps_probes{0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0};
};

struct ModelSpec {
  std::string name;
  CoefficientField coefficients;
  EnvironmentSpec environment = constant_environment();
  std::vector<double> x0{0.0};
  std::vector<double> x1{0.0};
  X1Scaling x1_scaling = X1Scaling::Fixed;
  ProbeBox probe;
};

struct ValidationIssue {
  ErrorCode code;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
  bool has(ErrorCode code) const noexcept;
  std::string summary() const;
};

/// Facts measured on the probe lattice.
struct ProbeSummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double intensity_sup = 0.0;  // jump environments only
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Read-only handle to a model that passed validation. Cheap to copy and
/// safe to share across threads.
class ValidatedModel {
 public:
  const ModelSpec& spec() const noexcept { return *spec_; }
  const CoefficientField& coefficients() const noexcept { return spec_->coefficients; }
  const EnvironmentSpec& environment() const noexcept { return spec_->environment; }
  const ProbeSummary& probe() const noexcept { return probe_; }
  int d() const noexcept { return spec_->coefficients.d; }
  int m() const noexcept { return spec_->coefficients.m; }

  /// p(0): x1 or x1/eps according to the configured scaling.
  std::vector<double> initial_momentum(double eps) const;

 private:
  friend ValidatedModel validate_model(ModelSpec spec);
  ValidatedModel(std::shared_ptr<const ModelSpec> spec, ProbeSummary probe)
      : spec_(std::move(spec)), probe_(probe) {}

  std::shared_ptr<const ModelSpec> spec_;
  ProbeSummary probe_;
};

/// Runs every invariant check on the probe lattice and lists each violation.
ValidationReport check_model(const ModelSpec& spec);

/// Throws ValidationError (code of the first issue) if check_model reports anything.
ValidatedModel validate_model(ModelSpec spec);

/// Central finite-difference derivatives of lambda_eps at (t, x), step 1e-5.
struct FrictionGradient {
  double dt = 0.0;
  std::vector<double> dx;
};
FrictionGradient friction_gradient(const CoefficientField& c, double t, std::span<const double> x, double eps);

}  // namespace sklab
