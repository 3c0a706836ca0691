#pragma once

#include <cstdint>
#include <limits>

namespace darkspec {

/// SplitMix64 finalizer; used for seed derivation only.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Derives an independent stream seed from a root seed and two stream
/// coordinates (typically component index and path/replication index).
/// The mapping is a pure function, so path sets do not depend on the order
/// in which they are generated.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                          std::uint64_t index) noexcept;

/// xoshiro256** engine. Satisfies UniformRandomBitGenerator and is cheap to
/// seed, which matters when every replication owns its own stream.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace darkspec
