#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace maskgen {

// Seeded generator whose derived streams (uniform, normal, shuffle) are
// defined here rather than by the standard library's distributions, which
// differ between implementations. mt19937_64 itself is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Normal resampled until it lies within two standard deviations.
  double truncated_normal(double mean, double stddev);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Derives an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace maskgen
