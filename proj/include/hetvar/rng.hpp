#pragma once

// Deterministic split-stream RNG. Every latent variable in a replication
// draws from its own stream keyed by (master_seed, replication, tag), so
// results are reproducible bit-for-bit no matter how replications are
// scheduled across threads.

#include <cstdint>

namespace hetvar {

/// SplitMix64 step; also used to mix keys into stream states.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replication, std::uint64_t tag) {
    std::uint64_t s = master_seed;
    (void)splitmix64(s);
    s ^= 0x6a09e667f3bcc909ULL + replication;
    (void)splitmix64(s);
    s ^= 0xbb67ae8584caa73bULL + tag;
    (void)splitmix64(s);
    state_ = s;
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in (0, 1); never returns exactly 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pair cached).
  double next_normal();

 private:
  std::uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hetvar
