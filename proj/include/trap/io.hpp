#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trap/generator.hpp"
#include "trap/grid.hpp"
#include "trap/metrics.hpp"
#include "trap/patterns.hpp"
#include "trap/trajectory.hpp"
#include "trap/victim.hpp"

namespace trap {

// Trajectory CSV, header `traj_id,step,cell` or `traj_id,step,lat,lon`
// (lat/lon rows are discretized against the grid). Steps must be contiguous
// from 0 per traj_id. Parse failures throw DataError with the line number.
TrajectoryDataset read_trajectory_csv(const std::string& path, const GridSpec& spec);
void write_trajectory_csv(const std::string& path, const TrajectoryDataset& dataset);

// Fake set: cell-format CSV plus a sidecar manifest `<path>.manifest.json`
// holding {m, dist, max_rep, seed, total_score}.
void write_fake_set(const std::string& csv_path, const FakeTrajectorySet& fakes);
FakeTrajectorySet read_fake_set(const std::string& csv_path);

// Target patterns: CSV header `score,cells`, cells joined by ';'.
void write_target_patterns(const std::string& path, const TargetPatternSet& tp_set);
TargetPatternSet read_target_patterns(const std::string& path);

void write_metric_report(const std::string& path, const MetricReport& report);

enum class BundleFormat { kJsonLines, kBinary };

// Report bundles, one per user. JSON-lines or length-prefixed binary;
// layouts are documented in docs/report-schema.md.
void write_report_bundles(const std::string& path, const std::vector<GridTraceReport>& bundles,
                          BundleFormat format);
std::vector<GridTraceReport> read_report_bundles(const std::string& path, BundleFormat format);

// Flat `key = value` config file; '#' starts a comment. Unknown keys are
// rejected by the consumer, not the parser.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Stable hex digest over sorted key=value pairs.
std::string config_digest(const std::map<std::string, std::string>& kv);

}  // namespace trap
