#include "sklab/brownian.hpp"

#include <cmath>
#include <sstream>

#include "sklab/errors.hpp"

namespace sklab {

Eigen::MatrixXd joint_correlation(int m, int n, const Eigen::MatrixXd& Sigma) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(m + n, m + n);
  if (n > 0) {
    C.topRightCorner(m, n) = Sigma;
    C.bottomLeftCorner(n, m) = Sigma.transpose();
  }
  return C;
}

Eigen::MatrixXd psd_cholesky(const Eigen::MatrixXd& C) {
  const Eigen::Index k = C.rows();
  if (C.cols() != k || !C.isApprox(C.transpose(), 1e-12)) {
    throw Error(ErrorCode::BadCorrelation, "covariance must be square and symmetric");
  }
  constexpr double tol = 1e-12;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double pivot = C(j, j) - L.row(j).head(j).squaredNorm();
    if (pivot < -tol) {
      throw Error(ErrorCode::BadCorrelation, "covariance is not positive semidefinite");
    }
    if (pivot <= tol) {
      // Rank-deficient direction: the remaining entries of column j must vanish too.
      for (Eigen::Index i = j + 1; i < k; ++i) {
        const double r = C(i, j) - L.row(i).head(j).dot(L.row(j).head(j));
        if (std::abs(r) > 1e-9) {
          throw Error(ErrorCode::BadCorrelation, "covariance is not positive semidefinite");
        }
      }
      continue;
    }
    const double ljj = std::sqrt(pivot);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      L(i, j) = (C(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / ljj;
    }
  }
  return L;
}

void check_correlation(int m, int n, const Eigen::MatrixXd& Sigma) {
  if (Sigma.rows() != m || Sigma.cols() != n) {
    std::ostringstream os;
    os << "Sigma must be " << m << "x" << n << ", got " << Sigma.rows() << "x" << Sigma.cols();
    throw Error(ErrorCode::BadCorrelation, os.str());
  }
  for (Eigen::Index i = 0; i < Sigma.size(); ++i) {
    const double v = Sigma.data()[i];
    if (!(v >= -1.0 && v <= 1.0)) {
      throw Error(ErrorCode::BadCorrelation, "Sigma entries must lie in [-1, 1]");
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(joint_correlation(m, n, Sigma));
  if (es.eigenvalues().minCoeff() < -1e-12) {
    throw Error(ErrorCode::BadCorrelation, "joint (w, w~) correlation is not positive semidefinite");
  }
}

CorrelationMap::CorrelationMap(int m, int n, const Eigen::MatrixXd& Sigma) : m_(m), n_(n) {
  if (n == 0) {
    identity_ = true;
    return;
  }
  check_correlation(m, n, Sigma);
  identity_ = Sigma.isZero(0.0);
  if (!identity_) L_ = psd_cholesky(joint_correlation(m, n, Sigma));
}

void CorrelationMap::apply(std::span<const double> z, std::span<double> out) const {
  const int k = width();
  if (identity_) {
    for (int i = 0; i < k; ++i) out[i] = z[i];
    return;
  }
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int j = 0; j <= i; ++j) s += L_(i, j) * z[j];
    out[i] = s;
  }
}

IncrementTable sample_brownian_increments(NoiseStream& stream, const TimeGrid& grid, int m, int n,
                                          const Eigen::MatrixXd& Sigma) {
  const CorrelationMap map(m, n, n > 0 ? Sigma : Eigen::MatrixXd(m, 0));
  IncrementTable table;
  table.n_steps = grid.n_steps();
  table.m = m;
  table.n = n;
  table.values.resize(static_cast<std::size_t>(table.n_steps) * (m + n));
  const double sdt = std::sqrt(grid.dt());
  std::vector<double> z(m + n);
  for (std::int64_t k = 0; k < table.n_steps; ++k) {
    for (auto& zi : z) zi = sdt * stream.normal();
    map.apply(z, {table.values.data() + k * (m + n), static_cast<std::size_t>(m + n)});
  }
  return table;
}

}  // namespace sklab
