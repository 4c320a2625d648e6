#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tdlab {

/// SplitMix64 (Steele, Lea and Flood). A 64-bit counter pushed through a
/// fixed mixing function, so streams are identical on every platform and
/// `split` derives independent generators for parallel runs.
///
/// Conversions to doubles are done here rather than through <random>
/// distributions, whose output is implementation-defined.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// New generator seeded from this one's next output.
  SplitMix64 split() { return SplitMix64((*this)() ^ 0xD1B54A32D192ED03ULL); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller (one of the pair is discarded).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index drawn from an unnormalised-free probability row by inverse CDF.
  template <class Row>
  int categorical(const Row& probs) {
    const double u = uniform();
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    int last_positive = 0;
    for (int i = 0; i < n; ++i) {
      if (probs(i) <= 0.0) continue;
      last_positive = i;
      acc += probs(i);
      if (u < acc) return i;
    }
    return last_positive;  // u landed in the rounding slack above the cumulative sum
  }

 private:
  std::uint64_t state_;
};

}  // namespace tdlab
