#pragma once

#include <array>
#include <cstdint>

namespace bell {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Pure: the output depends only on counter and key.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Stream ids used by the simulators. Each (seed, trial, stream) triple is an
/// independent sequence.
enum class RngStream : std::uint32_t {
  alice_setting = 1,
  bob_setting = 2,
  source = 3,
  adversary = 4,
  guess_alice = 5,
  guess_bob = 6,
  trace = 7,
};

/// Reproducible generator keyed by (seed, trial index, stream). Successive
/// draws walk a block counter, so draws for one trial never depend on any
/// other trial.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t index, RngStream stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_(index),
        stream_(static_cast<std::uint32_t>(stream)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    const std::uint64_t hi = next_u32() >> 5;
    const std::uint64_t lo = next_u32() >> 6;
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  /// Uniform on (0, 1), safe for logarithms.
  double uniform_open() {
    const std::uint64_t hi = next_u32() >> 5;
    const std::uint64_t lo = next_u32() >> 6;
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (one of the pair is discarded).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t index_;
  std::uint32_t stream_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
};

}  // namespace bell
