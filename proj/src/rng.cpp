#include "detkit/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace detkit {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(uint64_t seed) : engine_(splitmix64(seed)) {}

uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  // 53 random bits -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  const uint64_t range = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  // Multiply-shift map of a 64-bit draw onto the range.
  const auto v = static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * range) >> 64);
  return static_cast<int>(static_cast<int64_t>(lo) + static_cast<int64_t>(v));
}

double Rng::normal() {
  // Box-Muller, one value per call.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gamma(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be > 0");
  if (alpha < 1.0) {
    const double u = uniform();
    return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: bad n/k");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < k; ++i) {
    const int j = uniform_int(i, n - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

uint64_t mix_seed(uint64_t seed, uint64_t item) {
  return splitmix64(seed ^ (item * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
}

}  // namespace detkit
