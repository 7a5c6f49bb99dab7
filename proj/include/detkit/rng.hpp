#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace detkit {

/// Seedable deterministic generator. mt19937_64 is fully specified by the
/// standard and all distribution code lives in this class, so one seed gives
/// one stream on every platform and compiler.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  double normal();

  /// Marsaglia-Tsang; any alpha > 0.
  double gamma(double alpha);

  double beta(double a, double b);

  /// First k entries of a uniform random permutation of {0, ..., n-1}.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 engine_;
};

/// Decorrelated per-item seed (global seed combined with an item id).
uint64_t mix_seed(uint64_t seed, uint64_t item);

}  // namespace detkit
