#pragma once

#include <cstdint>
#include <random>

namespace holonomy {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index);

/// Deterministic random source. Uniform and normal variates are derived from the raw
/// 64-bit engine output by fixed formulas so that streams are reproducible bit-for-bit.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  /// Stream `index` of the family rooted at `root`; streams are independent of thread layout.
  static SeededRng stream(std::uint64_t root, std::uint64_t index) {
    return SeededRng(mix_seed(root, index));
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal variate (Box-Muller, no cached pair).
  double normal();

  bool coin(double p = 0.5) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace holonomy
