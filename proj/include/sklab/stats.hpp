#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sklab {

/// Bernoulli Monte Carlo estimate with a 95% Wilson score interval.
struct MCEstimate {
  std::int64_t n_replicas = 0;
  std::int64_t n_hits = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t master_seed = 0;
  std::uint64_t replica_begin = 0;
  std::uint64_t replica_end = 0;  // exclusive

  double half_width() const noexcept { return 0.5 * (ci_high - ci_low); }
  bool censored() const noexcept { return n_hits == 0; }
};

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low;
  double high;
};

Interval wilson_interval(std::int64_t hits, std::int64_t n, double z = kZ95);

MCEstimate make_estimate(std::int64_t hits, std::int64_t n, std::uint64_t master_seed, std::uint64_t replica_begin = 0);

/// Upper tail of the standard normal, 1 - Phi(x).
double normal_sf(double x);
double normal_cdf(double x);

/// Linear-interpolated sample quantile (q in [0,1]); takes a copy to sort.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);
double sample_variance(std::span<const double> values);
double sample_correlation(std::span<const double> a, std::span<const double> b);

/// Least-squares slope of log(y) against log(x); nullopt with fewer than
/// two points or any nonpositive entry.
std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y);

/// Chi-square homogeneity test of two count vectors over the same categories.
/// Categories empty in both samples are dropped. Returns the p-value.
double chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// One-sample Kolmogorov-Smirnov p-value of data against standard normal after
/// scaling by sd (asymptotic distribution with the Stephens correction).
double ks_normal_pvalue(std::vector<double> data, double sd);

}  // namespace sklab
