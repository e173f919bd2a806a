#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

namespace sebert {

/// Seeded generator shared by initialization, dropout, shuffling and the
/// synthetic corpus. Sequences are reproducible on a given platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// Integer in [0, n).
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  template <typename Range>
  void shuffle(Range& r) {
    std::shuffle(r.begin(), r.end(), engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sebert
