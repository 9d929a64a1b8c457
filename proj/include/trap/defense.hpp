#pragma once

#include <vector>

#include "trap/ldp.hpp"
#include "trap/trajectory.hpp"

namespace trap {

// How an item qualifies as "frequent": strictly above the theta_f nearest-rank
// percentile of item counts (default), or strictly above theta_f times the
// maximum count (alternate reading, kept testable).
enum class FrequentRule { kPercentile, kRatioToMax };

struct FimConfig {
  double theta_f = 0.9;  // frequency threshold (percentile over items)
  double theta_c = 0.9;  // composition threshold within a trajectory/report
  FrequentRule rule = FrequentRule::kPercentile;
};

// Removes trajectories whose fraction of frequent cells exceeds theta_c.
// A cell is frequent when its total occurrence count qualifies against the
// counts of the cells observed in the dataset.
TrajectoryDataset fim_filter_trajectories(const TrajectoryDataset& dataset,
                                          const FimConfig& cfg);

// Removes reports whose 1-bits are more than theta_c composed of frequent
// indices. Index counts are ones-counts over all reports; the percentile runs
// over all d indices. Zero-ones reports are retained (vacuous composition).
std::vector<OueReport> fim_filter_reports(const std::vector<OueReport>& reports,
                                          const FimConfig& cfg);

// Subtracts the minimum entry, divides by the adjusted sum. All-equal input
// degenerates to the uniform vector; `*warned` is set when provided.
std::vector<double> normalize_distribution(const std::vector<double>& estimates,
                                           bool* warned = nullptr);

}  // namespace trap
