#pragma once

#include <cstdint>

namespace esdlab {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based SplitMix64 stream keyed by (master_seed, stream_index).
///
/// The starting counter is mix64(master_seed ^ mix64(stream_index + gamma)),
/// so streams with distinct indices start at unrelated points of the 2^64
/// Weyl sequence. The raw generator with state s reproduces the published
/// SplitMix64 vectors (see `from_state`).
class RngStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed),
        stream_index_(stream_index),
        state_(mix64(master_seed ^ mix64(stream_index + kGamma))) {}

  /// Raw generator starting at a given counter; used for test vectors.
  static RngStream from_state(std::uint64_t state) {
    RngStream r(0, 0);
    r.state_ = state;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double next_unit_open0() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t state_;
};

}  // namespace esdlab
