#pragma once

#include <cstdint>
#include <vector>

#include "trap/rng.hpp"

namespace trap {

// Optimized unary encoding: keep probability p = 1/2 for the held item's bit,
// flip-in probability q = 1/(e^eps + 1) for every other bit.
struct OueParams {
  int d = 0;
  double eps = 0.0;
  double p = 0.5;
  double q = 0.0;
};

OueParams make_oue_params(int d, double eps);

// Length-d bit vector, packed.
class OueReport {
 public:
  OueReport() = default;
  explicit OueReport(int d) : d_(d), words_((static_cast<std::size_t>(d) + 63) / 64, 0) {}

  [[nodiscard]] int domain_size() const { return d_; }
  [[nodiscard]] bool bit(int i) const {
    return (words_[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1u;
  }
  void set_bit(int i) { words_[static_cast<std::size_t>(i) >> 6] |= 1ull << (i & 63); }
  [[nodiscard]] int ones_count() const;

  // Calls fn(index) for every set bit, ascending.
  template <typename Fn>
  void for_each_one(Fn&& fn) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        int b = __builtin_ctzll(bits);
        fn(static_cast<int>(w * 64) + b);
        bits &= bits - 1;
      }
    }
  }

  [[nodiscard]] const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  friend bool operator==(const OueReport& a, const OueReport& b) = default;

 private:
  int d_ = 0;
  std::vector<std::uint64_t> words_;
};

// One honest OUE report for `item`. Throws ConfigError if item out of range.
OueReport oue_perturb(int item, const OueParams& params, Rng& rng);

// Unbiased estimate per index: (ones_j - n*q) / (p - q). May be negative.
// Throws ConfigError on an empty report list.
std::vector<double> oue_aggregate(const std::vector<OueReport>& reports,
                                  const OueParams& params);

// Streaming variant: ones counts already summed per index over n reports.
std::vector<double> oue_aggregate_counts(const std::vector<std::int64_t>& ones,
                                         std::int64_t n, const OueParams& params);

// k-ary randomized response: keep with probability e^eps/(e^eps + d - 1),
// else uniform among the other d-1 items. Requires d >= 2.
int krr_perturb(int item, int d, double eps, Rng& rng);

// Exponential mechanism over real-valued utilities: P(i) proportional to
// exp(eps * u_i / 2), computed with a max shift. Utilities are assumed
// pre-scaled to sensitivity 1. Candidates must be non-empty.
int em_sample(const std::vector<double>& utilities, double eps, Rng& rng);

}  // namespace trap
