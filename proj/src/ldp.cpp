#include "trap/ldp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "trap/errors.hpp"

namespace trap {

OueParams make_oue_params(int d, double eps) {
  if (d < 1) throw ConfigError("OUE domain size must be positive");
  if (eps <= 0.0) throw ConfigError("privacy budget eps must be positive");
  OueParams params;
  params.d = d;
  params.eps = eps;
  params.p = 0.5;
  params.q = 1.0 / (std::exp(eps) + 1.0);
  return params;
}

int OueReport::ones_count() const {
  int ones = 0;
  for (std::uint64_t w : words_) ones += std::popcount(w);
  return ones;
}

OueReport oue_perturb(int item, const OueParams& params, Rng& rng) {
  if (item < 0 || item >= params.d) {
    throw ConfigError("OUE item " + std::to_string(item) + " outside domain of size " +
                      std::to_string(params.d));
  }
  OueReport report(params.d);
  for (int i = 0; i < params.d; ++i) {
    const double keep = i == item ? params.p : params.q;
    if (rng.bernoulli(keep)) report.set_bit(i);
  }
  return report;
}

std::vector<double> oue_aggregate(const std::vector<OueReport>& reports,
                                  const OueParams& params) {
  if (reports.empty()) throw ConfigError("cannot aggregate an empty report list");
  std::vector<std::int64_t> ones(params.d, 0);
  for (const auto& report : reports) {
    if (report.domain_size() != params.d) {
      throw DataError("report domain size mismatch in aggregation");
    }
    report.for_each_one([&](int i) { ++ones[i]; });
  }
  return oue_aggregate_counts(ones, static_cast<std::int64_t>(reports.size()), params);
}

std::vector<double> oue_aggregate_counts(const std::vector<std::int64_t>& ones,
                                         std::int64_t n, const OueParams& params) {
  if (static_cast<int>(ones.size()) != params.d) {
    throw ConfigError("ones vector size does not match the OUE domain");
  }
  if (n <= 0) throw ConfigError("aggregation requires a positive report count");
  std::vector<double> estimates(params.d, 0.0);
  const double denom = params.p - params.q;
  for (int i = 0; i < params.d; ++i) {
    estimates[i] = (static_cast<double>(ones[i]) - static_cast<double>(n) * params.q) / denom;
  }
  return estimates;
}

int krr_perturb(int item, int d, double eps, Rng& rng) {
  if (d < 2) throw ConfigError("k-RR requires a domain of at least 2 items");
  if (item < 0 || item >= d) {
    throw ConfigError("k-RR item " + std::to_string(item) + " outside domain of size " +
                      std::to_string(d));
  }
  if (eps <= 0.0) throw ConfigError("privacy budget eps must be positive");
  const double e = std::exp(eps);
  const double keep = e / (e + static_cast<double>(d) - 1.0);
  if (rng.bernoulli(keep)) return item;
  // Uniform over the d-1 other items.
  const std::uint64_t pick = rng.uniform_index(static_cast<std::uint64_t>(d) - 1);
  const int other = static_cast<int>(pick);
  return other >= item ? other + 1 : other;
}

int em_sample(const std::vector<double>& utilities, double eps, Rng& rng) {
  if (utilities.empty()) throw ConfigError("exponential mechanism needs candidates");
  if (eps <= 0.0) throw ConfigError("privacy budget eps must be positive");
  const double max_u = *std::max_element(utilities.begin(), utilities.end());
  std::vector<double> weights(utilities.size());
  double total = 0.0;
  for (std::size_t i = 0; i < utilities.size(); ++i) {
    weights[i] = std::exp(eps * (utilities[i] - max_u) / 2.0);
    total += weights[i];
  }
  double draw = rng.uniform_real() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    draw -= weights[i];
    if (draw < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;  // floating-point leftovers
}

}  // namespace trap
