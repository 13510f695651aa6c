#pragma once

#include <cmath>
#include <cstdint>

namespace crossfit {

// Counter-based generator: draw i is a SplitMix64-style hash of (key, i), so a
// stream is fully determined by its key and streams never share state.
// Substreams (one per replication, say) come from derive(master, index).
// Gaussian draws use the Marsaglia polar method so results do not depend on
// the standard library's normal_distribution implementation.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : key_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Index in [0, n). Modulo bias is irrelevant at the sizes used here and the
  // mapping must stay bit-stable across builds.
  std::uint64_t below(std::uint64_t n) { return (*this)() % n; }

  static std::uint64_t derive(std::uint64_t master, std::uint64_t stream) {
    return mix(master ^ mix(stream + kGolden));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crossfit
