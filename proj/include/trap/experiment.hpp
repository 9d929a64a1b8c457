#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trap/attack.hpp"
#include "trap/generator.hpp"
#include "trap/grid.hpp"
#include "trap/metrics.hpp"
#include "trap/patterns.hpp"
#include "trap/trajectory.hpp"

namespace trap {

enum class ProtocolKind { kDirect, kGridTrace };

struct ExperimentConfig {
  ProtocolKind protocol = ProtocolKind::kDirect;
  double eps = 1.0;

  GridSpec grid{.rows = 16, .cols = 16, .min_lat = 0.0, .max_lat = 16.0,
                .min_lon = 0.0, .max_lon = 16.0};
  bool self_loops = false;

  // Real data: a CSV path, or a synthetic random-walk dataset of size n.
  std::string dataset_path;  // empty -> synthetic
  int n = 4000;
  int data_l_min = 2;
  int data_l_max = 8;
  std::optional<int> sample_cap;  // keep at most this many trajectories

  // Target patterns: a file, or sampled from the dataset (score = length).
  std::string patterns_path;  // empty -> sampled
  int k_min = 1;
  int k_max = 6;
  int per_length = 5;

  // Fake-set generation.
  double beta = 0.2;  // m / (m + n)
  int max_rep = 1;
  double mean_divisor = 2.0;  // length sampling mean = (L_min+L_max)/a
  double std_divisor = 5.0;   // std = (L_max-L_min)/b

  // GridTrace knobs.
  double quantile_k = 0.9;
  double length_budget_frac = 0.1;
  int max_len = 32;
  bool craft_length_report = true;

  DefenseOptions defense;

  int repetitions = 5;
  std::uint64_t seed = 1;

  [[nodiscard]] std::map<std::string, std::string> as_key_values() const;
};

// Parses/overrides cfg from flat key=value pairs; throws ConfigError on
// unknown keys or unparseable values. Schema text for --print-schema.
void apply_key_values(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv);
std::string config_schema_text();

struct ConditionResult {
  MetricReport mean;                      // averaged over repetition seeds
  std::vector<MetricReport> per_seed;
};

struct RunReport {
  ConditionResult no_attack;
  ConditionResult ipa;
  ConditionResult opa;
  double wall_clock_sec = 0.0;
  std::string config_digest;
};

// Seeded random walks on the grid (neighbors8 steps), lengths uniform in
// [l_min, l_max].
TrajectoryDataset generate_synthetic(const GridSpec& spec, int n, int l_min, int l_max,
                                     std::uint64_t seed);

// per_length distinct patterns per length in [k_min, k_max], sampled from the
// dataset's observed patterns; score = pattern length. Throws ConfigError
// (naming the length) when the dataset lacks enough distinct patterns.
TargetPatternSet sample_target_patterns(const TrajectoryDataset& dataset, int k_min, int k_max,
                                        int per_length, std::uint64_t seed);

// Full pipeline: load/synthesize data, sample/load patterns, generate fakes,
// run the no-attack / IPA / OPA conditions over `repetitions` seeds with the
// configured defenses, and average.
RunReport run_experiment(const ExperimentConfig& cfg);

void write_run_report_json(const std::string& path, const RunReport& report,
                           const ExperimentConfig& cfg);
// One row per condition (for plotting); appends when the file exists.
void append_run_report_csv(const std::string& path, const RunReport& report,
                           const std::map<std::string, std::string>& sweep_values);

}  // namespace trap
