#include "trap/metrics.hpp"

#include <cstdint>
#include <unordered_map>

#include "trap/errors.hpp"

namespace trap {

double avg_score(const TrajectoryDataset& dataset, const TargetPatternSet& tp_set) {
  if (dataset.empty()) throw ConfigError("cannot score an empty dataset");
  double total = 0.0;
  for (const auto& traj : dataset.trajectories) total += traj_score(traj, tp_set);
  return total / static_cast<double>(dataset.size());
}

double get_pr(const CellTrajectory& tp, const TrajectoryDataset& dataset, PrTies ties) {
  if (tp.empty()) throw ConfigError("target pattern is empty");
  const std::size_t k = tp.size();

  // Total occurrence count of every length-k pattern observed in the dataset.
  std::unordered_map<CellTrajectory, std::int64_t, TrajHash> counts;
  for (const auto& traj : dataset.trajectories) {
    if (traj.size() < k) continue;
    for (std::size_t i = 0; i + k <= traj.size(); ++i) {
      CellTrajectory window(traj.begin() + i, traj.begin() + i + k);
      ++counts[std::move(window)];
    }
  }
  const auto it = counts.find(tp);
  const std::int64_t target_count = it == counts.end() ? 0 : it->second;
  // The universe is the observed patterns plus the target itself.
  const bool target_observed = it != counts.end();
  const std::size_t universe = counts.size() + (target_observed ? 0 : 1);

  std::size_t at_or_below = 1;  // the target ranks against itself
  for (const auto& [pattern, count] : counts) {
    if (pattern == tp) continue;
    if (ties == PrTies::kCountEqual ? count <= target_count : count < target_count) {
      ++at_or_below;
    }
  }
  return 100.0 * static_cast<double>(at_or_below) / static_cast<double>(universe);
}

double avg_pr(const TrajectoryDataset& dataset, const TargetPatternSet& tp_set, PrTies ties) {
  if (tp_set.patterns.empty()) throw ConfigError("target pattern set is empty");
  double total = 0.0;
  for (const auto& sp : tp_set.patterns) total += get_pr(sp.cells, dataset, ties);
  return total / static_cast<double>(tp_set.patterns.size());
}

MetricReport make_metric_report(const TrajectoryDataset& after, const TrajectoryDataset& before,
                                const TargetPatternSet& tp_set, const std::string& config_digest,
                                std::uint64_t seed) {
  MetricReport report;
  report.avg_score = avg_score(after, tp_set);
  report.avg_pr = avg_pr(after, tp_set);
  report.score_gain = report.avg_score - avg_score(before, tp_set);
  report.pr_gain = report.avg_pr - avg_pr(before, tp_set);
  report.config_digest = config_digest;
  report.seed = seed;
  return report;
}

}  // namespace trap
