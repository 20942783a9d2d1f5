#include "sklab/rng.hpp"

namespace sklab {

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t replica_id, std::uint64_t lane)
    : master_seed_(master_seed), replica_id_(replica_id), lane_(lane) {
  using detail::mix64;
  std::uint64_t k = mix64(master_seed + 0x243f6a8885a308d3ULL);
  k = mix64(k ^ (replica_id * 0xd1b54a32d192ed03ULL + 0x13198a2e03707344ULL));
  k = mix64(k ^ (lane * 0xa4093822299f31d0ULL + 0x082efa98ec4e6c89ULL));
  key_lo_ = k;
  key_hi_ = mix64(k ^ 0x5851f42d4c957f2dULL);
}

NoiseStream spawn_stream(std::uint64_t master_seed, std::uint64_t replica_id) {
  return NoiseStream(master_seed, replica_id, static_cast<std::uint64_t>(Lane::Brownian));
}

}  // namespace sklab
