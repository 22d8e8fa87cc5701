#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rollkit/common.hpp"

namespace rollkit {

// splitmix64 step; used to stretch user seeds and to derive stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic generator wrapper. std::mt19937_64 output is pinned by the
// standard, and all derived draws below avoid std::*_distribution (whose
// algorithms are implementation-defined), so a seed fully determines every
// sequence on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_seed_(seed) {
    std::uint64_t s = seed;
    engine_.seed(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform in [0, bound); rejection sampling, no modulo bias.
  int uniform_int(int bound) {
    if (bound <= 0) throw ParameterError("uniform_int: bound must be positive");
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % b;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % b);
  }

  // Split rule: child seed = splitmix64 chain over (root_seed, stream).
  // Forked generators are independent streams suitable for per-worker or
  // per-chunk use; (seed, stream) fully determines the child sequence.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t s = root_seed_;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream + 0x9E3779B97F4A7C15ull);
    return Rng(splitmix64(s));
  }

  std::uint64_t root_seed() const { return root_seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t root_seed_;
};

// Categorical draw over a fixed probability vector via inverse CDF.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs) {
    cumulative_.reserve(probs.size());
    double acc = 0.0;
    for (double p : probs) {
      acc += p;
      cumulative_.push_back(acc);
    }
    if (cumulative_.empty())
      throw ParameterError("categorical: empty probability vector");
  }

  int operator()(Rng& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    // First index whose cumulative mass exceeds u.
    std::size_t lo = 0, hi = cumulative_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cumulative_[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return static_cast<int>(lo);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace rollkit
