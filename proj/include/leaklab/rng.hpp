#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace leaklab {

// Deterministic random source. The engine (mt19937_64) is fully specified by
// the standard; the distribution transforms below are hand-rolled so that a
// given seed yields the same stream on every platform, which the trace-replay
// and experiment-reproducibility contracts depend on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. Draws two uniforms per call; no caching,
  // so the stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). Rejection-free modulo bias is negligible for
  // the index ranges used here, but we reject anyway to keep draws exact.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stable sub-seed derivation: hash(root, stage, index) via FNV-1a plus a
// splitmix64 finalizer. Adding new stages never perturbs the seeds of
// existing ones.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(root >> (8 * i)));
  for (char c : stage) mix_byte(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(index >> (8 * i)));
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

}  // namespace leaklab
