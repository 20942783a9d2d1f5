#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sklab/grid.hpp"
#include "sklab/rng.hpp"

namespace sklab {

/// Joint correlation of (w, w~): [[I_m, Sigma], [Sigma^T, I_n]].
Eigen::MatrixXd joint_correlation(int m, int n, const Eigen::MatrixXd& Sigma);

/// Lower-triangular L with L L^T = C for positive semidefinite C. Zero pivots
/// (rank-deficient C) give zero columns. Throws Error(BadCorrelation) if C is
/// not symmetric PSD to within 1e-12.
Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& C);

/// Throws Error(BadCorrelation) unless every entry of Sigma is in [-1, 1] and
/// the joint correlation is PSD.
void check_correlation(int m, int n, const Eigen::MatrixXd& Sigma);

/// Per-step (m+n)-vectors of jointly Gaussian increments (w then w~).
struct IncrementTable {
  std::int64_t n_steps = 0;
  int m = 0;
  int n = 0;
  std::vector<double> values;

  int width() const noexcept { return m + n; }
  std::span<const double> row(std::int64_t k) const {
    return {values.data() + k * width(), static_cast<std::size_t>(width())};
  }
};

IncrementTable sample_brownian_increments(NoiseStream& stream, const TimeGrid& grid, int m, int n,
                                          const Eigen::MatrixXd& Sigma);

/// Maps independent standard Gaussian draws onto correlated (w, w~) draws.
/// The identity map (n = 0 or Sigma = 0) is detected and skipped.
class CorrelationMap {
 public:
  CorrelationMap() = default;
  CorrelationMap(int m, int n, const Eigen::MatrixXd& Sigma);

  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  int width() const noexcept { return m_ + n_; }
  bool identity() const noexcept { return identity_; }

  /// out = L * z, both of length m + n.
  void apply(std::span<const double> z, std::span<double> out) const;

 private:
  int m_ = 0;
  int n_ = 0;
  bool identity_ = true;
  Eigen::MatrixXd L_;
};

}  // namespace sklab
