#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace sklab {

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Lanes partition one replica's randomness so that, e.g., the environment
/// path does not depend on how many Brownian draws the integrator made.
enum class Lane : std::uint64_t { Brownian = 0, Environment = 1, Auxiliary = 2 };

/// Counter-based random stream keyed by (master_seed, replica_id, lane).
/// Output k is a pure function of the key and k, so replicas can be run in
/// any order or on any thread and still reproduce bit-identically.
class NoiseStream {
 public:
  using result_type = std::uint64_t;

  NoiseStream(std::uint64_t master_seed, std::uint64_t replica_id, std::uint64_t lane = 0);

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t z = key_lo_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
    return detail::mix64(detail::mix64(z) ^ key_hi_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() noexcept { return normal_(*this); }

  /// Exponential holding time with the given rate; +inf when rate == 0.
  double exponential(double rate) noexcept {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform()) / rate;
  }

  /// Independent stream sharing this stream's (master_seed, replica_id).
  NoiseStream substream(Lane lane) const { return {master_seed_, replica_id_, static_cast<std::uint64_t>(lane)}; }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t replica_id() const noexcept { return replica_id_; }
  std::uint64_t lane() const noexcept { return lane_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t replica_id_;
  std::uint64_t lane_;
  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
  boost::random::normal_distribution<double> normal_;
};

NoiseStream spawn_stream(std::uint64_t master_seed, std::uint64_t replica_id);

}  // namespace sklab
