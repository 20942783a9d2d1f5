#include "sklab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

namespace sklab {

Interval wilson_interval(std::int64_t hits, std::int64_t n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  double lo = std::max(0.0, centre - half);
  double hi = std::min(1.0, centre + half);
  if (hits == 0) lo = 0.0;
  if (hits == n) hi = 1.0;
  // Keep p inside the interval despite rounding.
  return {std::min(lo, p), std::max(hi, p)};
}

MCEstimate make_estimate(std::int64_t hits, std::int64_t n, std::uint64_t master_seed, std::uint64_t replica_begin) {
  MCEstimate e;
  e.n_replicas = n;
  e.n_hits = hits;
  e.p_hat = n > 0 ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
  const auto ci = wilson_interval(hits, n);
  e.ci_low = ci.low;
  e.ci_high = ci.high;
  e.master_seed = master_seed;
  e.replica_begin = replica_begin;
  e.replica_end = replica_begin + static_cast<std::uint64_t>(n);
  return e;
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

double sample_correlation(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::optional<double> loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
  }
  sx /= static_cast<double>(n);
  sy /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (lx[i] - sx) * (ly[i] - sy);
    sxx += (lx[i] - sx) * (lx[i] - sx);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

double chi_square_two_sample(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  const std::size_t k = std::min(a.size(), b.size());
  const double na = std::accumulate(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  const double nb = std::accumulate(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  const double n = na + nb;
  double stat = 0.0;
  int used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0.0) continue;
    ++used;
    const double ea = na * col / n;
    const double eb = nb * col / n;
    stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  if (used < 2) return 1.0;
  boost::math::chi_squared dist(used - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

double ks_normal_pvalue(std::vector<double> data, double sd) {
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double f = normal_cdf(data[i] / sd);
    dmax = std::max({dmax, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * dmax;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace sklab
