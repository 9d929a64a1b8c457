#pragma once

#include <cstdint>
#include <string>

#include "trap/patterns.hpp"
#include "trap/trajectory.hpp"

namespace trap {

// Mean traj_score over the dataset. Throws ConfigError on an empty dataset.
double avg_score(const TrajectoryDataset& dataset, const TargetPatternSet& tp_set);

// Tie handling for the percentile rank: patterns with equal counts rank at
// or below the target (<=, default) or strictly below (<, sensitivity mode).
enum class PrTies { kCountEqual, kStrict };

// Percentile rank of the target pattern's total occurrence count among all
// same-length patterns observed in the dataset (the target itself is always
// a member of the universe). In [100/|U|, 100].
double get_pr(const CellTrajectory& tp, const TrajectoryDataset& dataset,
              PrTies ties = PrTies::kCountEqual);

// Mean get_pr over the target patterns. Throws ConfigError on an empty set.
double avg_pr(const TrajectoryDataset& dataset, const TargetPatternSet& tp_set,
              PrTies ties = PrTies::kCountEqual);

struct MetricReport {
  double avg_score = 0.0;
  double avg_pr = 0.0;
  double score_gain = 0.0;  // after - before, identical TP
  double pr_gain = 0.0;
  std::string config_digest;
  std::uint64_t seed = 0;
};

MetricReport make_metric_report(const TrajectoryDataset& after, const TrajectoryDataset& before,
                                const TargetPatternSet& tp_set, const std::string& config_digest,
                                std::uint64_t seed);

}  // namespace trap
