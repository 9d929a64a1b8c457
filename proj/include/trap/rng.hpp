#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace trap {

// Deterministic random source. mt19937_64 output is bit-exact across
// platforms, but the <random> distributions are not, so all samplers are
// implemented here by hand. Streams for independent units of work (users,
// sweep cells, ...) are derived from the base seed with a SplitMix64-style
// hash so they do not depend on draw order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform integer in [0, n). n must be > 0. Unbiased via rejection.
  std::uint64_t uniform_index(std::uint64_t n);

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform_real();

  bool bernoulli(double p);

  // Box-Muller; draws exactly two uniforms per call (no cached spare,
  // keeping the draw count predictable).
  double normal(double mean, double stddev);

  // Child stream keyed by (seed, label); independent of this stream's
  // draw position.
  [[nodiscard]] Rng split(std::uint64_t label) const;

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Sample k distinct indices from [0, n) via partial Fisher-Yates.
  std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used for stream derivation and config digests.
std::uint64_t mix64(std::uint64_t x);

}  // namespace trap
