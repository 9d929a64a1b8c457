#include "trap/defense.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trap/errors.hpp"

namespace trap {

namespace {

void validate(const FimConfig& cfg) {
  if (cfg.theta_f <= 0.0 || cfg.theta_f > 1.0) {
    throw ConfigError("theta_f must lie in (0, 1]");
  }
  if (cfg.theta_c < 0.0 || cfg.theta_c > 1.0) {
    throw ConfigError("theta_c must lie in [0, 1]");
  }
}

// Threshold above which a count qualifies as frequent (strictly above).
double frequent_threshold(std::vector<std::int64_t> counts, const FimConfig& cfg) {
  if (counts.empty()) return 0.0;
  if (cfg.rule == FrequentRule::kRatioToMax) {
    const std::int64_t max_count = *std::max_element(counts.begin(), counts.end());
    return cfg.theta_f * static_cast<double>(max_count);
  }
  // Nearest-rank percentile over the counts.
  std::sort(counts.begin(), counts.end());
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(cfg.theta_f * static_cast<double>(counts.size())));
  const std::size_t index = std::min(counts.size() - 1, std::max<std::size_t>(rank, 1) - 1);
  return static_cast<double>(counts[index]);
}

}  // namespace

TrajectoryDataset fim_filter_trajectories(const TrajectoryDataset& dataset,
                                          const FimConfig& cfg) {
  validate(cfg);
  if (dataset.empty()) return dataset;

  std::unordered_map<Cell, std::int64_t> cell_counts;
  for (const auto& traj : dataset.trajectories) {
    for (Cell c : traj) ++cell_counts[c];
  }
  std::vector<std::int64_t> counts;
  counts.reserve(cell_counts.size());
  for (const auto& [cell, count] : cell_counts) counts.push_back(count);
  const double threshold = frequent_threshold(std::move(counts), cfg);

  std::unordered_set<Cell> frequent;
  for (const auto& [cell, count] : cell_counts) {
    if (static_cast<double>(count) > threshold) frequent.insert(cell);
  }

  TrajectoryDataset kept;
  kept.provenance = dataset.provenance;
  for (const auto& traj : dataset.trajectories) {
    if (traj.empty()) {
      kept.trajectories.push_back(traj);
      continue;
    }
    int hits = 0;
    for (Cell c : traj) hits += frequent.count(c) > 0 ? 1 : 0;
    const double composition = static_cast<double>(hits) / static_cast<double>(traj.size());
    if (composition <= cfg.theta_c) kept.trajectories.push_back(traj);
  }
  return kept;
}

std::vector<OueReport> fim_filter_reports(const std::vector<OueReport>& reports,
                                          const FimConfig& cfg) {
  validate(cfg);
  if (reports.empty()) return reports;

  const int d = reports.front().domain_size();
  std::vector<std::int64_t> ones(d, 0);
  for (const auto& report : reports) {
    if (report.domain_size() != d) throw DataError("report domain size mismatch");
    report.for_each_one([&](int i) { ++ones[i]; });
  }
  // Unlike the trajectory screen, the percentile runs over every index of the
  // domain: unset indices are real observations of count zero here.
  const double threshold = frequent_threshold(ones, cfg);
  std::vector<bool> frequent(d, false);
  for (int i = 0; i < d; ++i) frequent[i] = static_cast<double>(ones[i]) > threshold;

  std::vector<OueReport> kept;
  kept.reserve(reports.size());
  for (const auto& report : reports) {
    const int total = report.ones_count();
    if (total == 0) {
      kept.push_back(report);
      continue;
    }
    int hits = 0;
    report.for_each_one([&](int i) { hits += frequent[i] ? 1 : 0; });
    const double composition = static_cast<double>(hits) / static_cast<double>(total);
    if (composition <= cfg.theta_c) kept.push_back(report);
  }
  return kept;
}

std::vector<double> normalize_distribution(const std::vector<double>& estimates, bool* warned) {
  if (estimates.empty()) throw ConfigError("cannot normalize an empty vector");
  const double min_v = *std::min_element(estimates.begin(), estimates.end());
  std::vector<double> out(estimates.size());
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out[i] = estimates[i] - min_v;
    total += out[i];
  }
  if (total <= 0.0) {  // all entries equal
    if (warned != nullptr) *warned = true;
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace trap
