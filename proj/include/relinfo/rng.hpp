#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace relinfo {

/// Seeded pseudo-random generator used by every stochastic routine.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Variates are produced by the transforms below rather than the
/// <random> distributions, so results are identical across standard library
/// implementations.
///
/// Streams are split, not shared: `split(k)` derives an independent child from
/// this generator's key with SplitMix64. The key depends only on the seed and
/// the chain of split indices, never on how many numbers were consumed, so
/// (seed, chain_index) always yields the same chain stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  [[nodiscard]] Rng split(std::uint64_t stream) const;
  [[nodiscard]] std::uint64_t key() const { return key_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, one variate per call).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double rate);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace relinfo
