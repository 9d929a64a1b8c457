#include "trap/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "trap/errors.hpp"
#include "trap/io.hpp"
#include "trap/rng.hpp"

namespace trap {

namespace {

using nlohmann::json;

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + value + "'");
  }
}

double parse_dbl(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::as_key_values() const {
  std::map<std::string, std::string> kv;
  kv["protocol"] = protocol == ProtocolKind::kDirect ? "direct" : "gridtrace";
  kv["eps"] = double_str(eps);
  kv["grid_rows"] = std::to_string(grid.rows);
  kv["grid_cols"] = std::to_string(grid.cols);
  kv["min_lat"] = double_str(grid.min_lat);
  kv["max_lat"] = double_str(grid.max_lat);
  kv["min_lon"] = double_str(grid.min_lon);
  kv["max_lon"] = double_str(grid.max_lon);
  kv["self_loops"] = bool_str(self_loops);
  kv["dataset_path"] = dataset_path;
  kv["n"] = std::to_string(n);
  kv["data_l_min"] = std::to_string(data_l_min);
  kv["data_l_max"] = std::to_string(data_l_max);
  kv["sample_cap"] = sample_cap.has_value() ? std::to_string(*sample_cap) : "";
  kv["patterns_path"] = patterns_path;
  kv["k_min"] = std::to_string(k_min);
  kv["k_max"] = std::to_string(k_max);
  kv["per_length"] = std::to_string(per_length);
  kv["beta"] = double_str(beta);
  kv["max_rep"] = std::to_string(max_rep);
  kv["mean_divisor"] = double_str(mean_divisor);
  kv["std_divisor"] = double_str(std_divisor);
  kv["quantile_k"] = double_str(quantile_k);
  kv["length_budget_frac"] = double_str(length_budget_frac);
  kv["max_len"] = std::to_string(max_len);
  kv["craft_length_report"] = bool_str(craft_length_report);
  kv["fim"] = bool_str(defense.fim);
  kv["theta_f"] = double_str(defense.fim_cfg.theta_f);
  kv["theta_c"] = double_str(defense.fim_cfg.theta_c);
  kv["fim_rule"] =
      defense.fim_cfg.rule == FrequentRule::kPercentile ? "percentile" : "ratio_to_max";
  kv["normalization"] = bool_str(defense.normalization);
  kv["repetitions"] = std::to_string(repetitions);
  kv["seed"] = std::to_string(seed);
  return kv;
}

void apply_key_values(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "protocol") {
      if (value == "direct") {
        cfg.protocol = ProtocolKind::kDirect;
      } else if (value == "gridtrace") {
        cfg.protocol = ProtocolKind::kGridTrace;
      } else {
        throw ConfigError("protocol: expected direct or gridtrace, got '" + value + "'");
      }
    } else if (key == "eps") {
      cfg.eps = parse_dbl(key, value);
    } else if (key == "grid_rows") {
      cfg.grid.rows = parse_int(key, value);
    } else if (key == "grid_cols") {
      cfg.grid.cols = parse_int(key, value);
    } else if (key == "min_lat") {
      cfg.grid.min_lat = parse_dbl(key, value);
    } else if (key == "max_lat") {
      cfg.grid.max_lat = parse_dbl(key, value);
    } else if (key == "min_lon") {
      cfg.grid.min_lon = parse_dbl(key, value);
    } else if (key == "max_lon") {
      cfg.grid.max_lon = parse_dbl(key, value);
    } else if (key == "self_loops") {
      cfg.self_loops = parse_bool(key, value);
    } else if (key == "dataset_path") {
      cfg.dataset_path = value;
    } else if (key == "n") {
      cfg.n = parse_int(key, value);
    } else if (key == "data_l_min") {
      cfg.data_l_min = parse_int(key, value);
    } else if (key == "data_l_max") {
      cfg.data_l_max = parse_int(key, value);
    } else if (key == "sample_cap") {
      if (value.empty()) {
        cfg.sample_cap.reset();
      } else {
        cfg.sample_cap = parse_int(key, value);
      }
    } else if (key == "patterns_path") {
      cfg.patterns_path = value;
    } else if (key == "k_min") {
      cfg.k_min = parse_int(key, value);
    } else if (key == "k_max") {
      cfg.k_max = parse_int(key, value);
    } else if (key == "per_length") {
      cfg.per_length = parse_int(key, value);
    } else if (key == "beta") {
      cfg.beta = parse_dbl(key, value);
    } else if (key == "max_rep") {
      cfg.max_rep = parse_int(key, value);
    } else if (key == "mean_divisor") {
      cfg.mean_divisor = parse_dbl(key, value);
    } else if (key == "std_divisor") {
      cfg.std_divisor = parse_dbl(key, value);
    } else if (key == "quantile_k") {
      cfg.quantile_k = parse_dbl(key, value);
    } else if (key == "length_budget_frac") {
      cfg.length_budget_frac = parse_dbl(key, value);
    } else if (key == "max_len") {
      cfg.max_len = parse_int(key, value);
    } else if (key == "craft_length_report") {
      cfg.craft_length_report = parse_bool(key, value);
    } else if (key == "fim") {
      cfg.defense.fim = parse_bool(key, value);
    } else if (key == "theta_f") {
      cfg.defense.fim_cfg.theta_f = parse_dbl(key, value);
    } else if (key == "theta_c") {
      cfg.defense.fim_cfg.theta_c = parse_dbl(key, value);
    } else if (key == "fim_rule") {
      if (value == "percentile") {
        cfg.defense.fim_cfg.rule = FrequentRule::kPercentile;
      } else if (value == "ratio_to_max") {
        cfg.defense.fim_cfg.rule = FrequentRule::kRatioToMax;
      } else {
        throw ConfigError("fim_rule: expected percentile or ratio_to_max, got '" + value + "'");
      }
    } else if (key == "normalization") {
      cfg.defense.normalization = parse_bool(key, value);
    } else if (key == "repetitions") {
      cfg.repetitions = parse_int(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
}

std::string config_schema_text() {
  return R"(protocol            direct | gridtrace        victim protocol
eps                 float > 0                 total privacy budget
grid_rows           int > 0                   grid rows
grid_cols           int > 0                   grid columns
min_lat max_lat     floats                    bounding box, latitude
min_lon max_lon     floats                    bounding box, longitude
self_loops          bool                      cells reach themselves
dataset_path        path or empty             empty -> synthetic random walks
n                   int > 0                   synthetic dataset size
data_l_min          int >= 1                  synthetic min length
data_l_max          int >= data_l_min         synthetic max length
sample_cap          int or empty              keep at most this many trajectories
patterns_path       path or empty             empty -> sample from the dataset
k_min               int >= 1                  min target pattern length
k_max               int >= k_min              max target pattern length
per_length          int > 0                   sampled patterns per length
beta                float in [0,1)            fake-user ratio m/(m+n)
max_rep             int >= 1                  max repetitions of one fake
mean_divisor        float > 0                 fake length mean = (Lmin+Lmax)/a
std_divisor         float > 0                 fake length std = (Lmax-Lmin)/b
quantile_k          float in (0,1]            broadcast length quantile
length_budget_frac  float in (0,1)            budget share of the length report
max_len             int >= 1                  length-report domain
craft_length_report bool                      craft the fake length report too
fim                 bool                      frequent-itemset filtering defense
theta_f             float in (0,1]            FIM frequency threshold
theta_c             float in [0,1]            FIM composition threshold
fim_rule            percentile | ratio_to_max frequent-item rule
normalization       bool                      min-subtract estimate cleanup
repetitions         int > 0                   protocol runs to average
seed                uint64                    base seed
)";
}

TrajectoryDataset generate_synthetic(const GridSpec& spec, int n, int l_min, int l_max,
                                     std::uint64_t seed) {
  spec.validate();
  if (n < 0) throw ConfigError("synthetic dataset size must be non-negative");
  if (l_min < 1 || l_max < l_min) {
    throw ConfigError("synthetic lengths must satisfy 1 <= l_min <= l_max");
  }
  const ReachabilityGraph rps = build_reachability(spec, Neighbors8{}, false);
  const Rng base(seed);
  TrajectoryDataset dataset;
  dataset.trajectories.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng = base.split(i);
    const int len = static_cast<int>(rng.uniform_int(l_min, l_max));
    CellTrajectory traj;
    traj.reserve(len);
    traj.push_back(static_cast<Cell>(rng.uniform_index(spec.cell_count())));
    while (static_cast<int>(traj.size()) < len) {
      const auto& next = rps.reachable_from(traj.back());
      traj.push_back(next[rng.uniform_index(next.size())]);
    }
    dataset.trajectories.push_back(std::move(traj));
  }
  return dataset;
}

TargetPatternSet sample_target_patterns(const TrajectoryDataset& dataset, int k_min, int k_max,
                                        int per_length, std::uint64_t seed) {
  if (k_min < 1 || k_max < k_min) {
    throw ConfigError("pattern lengths must satisfy 1 <= k_min <= k_max");
  }
  if (per_length < 1) throw ConfigError("per_length must be positive");

  TargetPatternSet tp_set;
  tp_set.k_min = k_min;
  tp_set.k_max = k_max;
  const Rng base(seed);
  for (int k = k_min; k <= k_max; ++k) {
    std::unordered_set<CellTrajectory, TrajHash> seen;
    std::vector<CellTrajectory> distinct;
    for (const auto& traj : dataset.trajectories) {
      if (static_cast<int>(traj.size()) < k) continue;
      for (std::size_t i = 0; i + k <= traj.size(); ++i) {
        CellTrajectory window(traj.begin() + i, traj.begin() + i + k);
        if (seen.insert(window).second) distinct.push_back(std::move(window));
      }
    }
    if (static_cast<int>(distinct.size()) < per_length) {
      throw ConfigError("dataset has only " + std::to_string(distinct.size()) +
                        " distinct patterns of length " + std::to_string(k) + ", need " +
                        std::to_string(per_length));
    }
    std::sort(distinct.begin(), distinct.end());
    Rng rng = base.split(k);
    const auto picks = rng.sample_without_replacement(
        static_cast<std::uint32_t>(distinct.size()), static_cast<std::uint32_t>(per_length));
    for (std::uint32_t pick : picks) {
      tp_set.patterns.push_back({distinct[pick], static_cast<double>(k)});
    }
  }
  return tp_set;
}

namespace {

MetricReport mean_of(const std::vector<MetricReport>& reports, const std::string& digest,
                     std::uint64_t seed) {
  MetricReport mean;
  mean.config_digest = digest;
  mean.seed = seed;
  if (reports.empty()) return mean;
  for (const auto& r : reports) {
    mean.avg_score += r.avg_score;
    mean.avg_pr += r.avg_pr;
    mean.score_gain += r.score_gain;
    mean.pr_gain += r.pr_gain;
  }
  const double n = static_cast<double>(reports.size());
  mean.avg_score /= n;
  mean.avg_pr /= n;
  mean.score_gain /= n;
  mean.pr_gain /= n;
  return mean;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.grid.validate();
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be positive");
  if (cfg.dataset_path.empty() && cfg.n < 1) {
    throw ConfigError("n must be positive when no dataset file is given");
  }

  const ReachabilityGraph rps = build_reachability(cfg.grid, Neighbors8{}, cfg.self_loops);
  const Rng base(cfg.seed);

  // Real data.
  TrajectoryDataset real;
  if (cfg.dataset_path.empty()) {
    real = generate_synthetic(cfg.grid, cfg.n, cfg.data_l_min, cfg.data_l_max,
                              base.split(10).seed());
  } else {
    real = read_trajectory_csv(cfg.dataset_path, cfg.grid);
  }
  if (cfg.sample_cap.has_value() && static_cast<int>(real.size()) > *cfg.sample_cap) {
    Rng rng = base.split(11);
    auto picks = rng.sample_without_replacement(static_cast<std::uint32_t>(real.size()),
                                                static_cast<std::uint32_t>(*cfg.sample_cap));
    std::sort(picks.begin(), picks.end());
    TrajectoryDataset capped;
    capped.provenance = real.provenance;
    capped.trajectories.reserve(picks.size());
    for (std::uint32_t pick : picks) {
      capped.trajectories.push_back(std::move(real.trajectories[pick]));
    }
    real = std::move(capped);
  }
  if (real.empty()) throw DataError("the real dataset is empty");

  // Target patterns.
  TargetPatternSet tp_set;
  if (cfg.patterns_path.empty()) {
    tp_set = sample_target_patterns(real, cfg.k_min, cfg.k_max, cfg.per_length,
                                    base.split(12).seed());
  } else {
    tp_set = read_target_patterns(cfg.patterns_path);
  }
  tp_set.validate(rps);

  // Fake trajectories: lengths mimic the observed length range.
  int obs_min = std::numeric_limits<int>::max();
  int obs_max = 1;
  for (const auto& traj : real.trajectories) {
    obs_min = std::min(obs_min, static_cast<int>(traj.size()));
    obs_max = std::max(obs_max, static_cast<int>(traj.size()));
  }
  obs_min = std::max(obs_min, 1);

  const int m = fake_count(cfg.beta, static_cast<int>(real.size()));
  FakeTrajectorySet fakes;
  if (m > 0) {
    const LengthDistribution dist = sample_length_distribution(
        m, obs_min, obs_max, base.split(13).seed(), cfg.mean_divisor, cfg.std_divisor);
    GeneratorOptions opts;
    opts.max_rep = cfg.max_rep;
    opts.seed = base.split(14).seed();
    opts.underfill = UnderfillPolicy::kError;
    fakes = trap_generate(rps, tp_set, dist, opts);
  }

  ProtocolConfig protocol;
  if (cfg.protocol == ProtocolKind::kDirect) {
    protocol = DirectTrajConfig{cfg.eps, cfg.grid};
  } else {
    GridTraceConfig gt;
    gt.eps = cfg.eps;
    gt.grid = cfg.grid;
    gt.quantile_k = cfg.quantile_k;
    gt.length_budget_frac = cfg.length_budget_frac;
    gt.max_len = cfg.max_len;
    protocol = gt;
  }

  RunReport report;
  report.config_digest = config_digest(cfg.as_key_values());

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t rep_seed = base.split(100 + rep).seed();
    const RunOutput none = assemble_poisoned_run(real, fakes, AttackMode::kNone, protocol,
                                                 cfg.defense, rep_seed,
                                                 cfg.craft_length_report);
    const RunOutput ipa = assemble_poisoned_run(real, fakes, AttackMode::kIpa, protocol,
                                                cfg.defense, rep_seed,
                                                cfg.craft_length_report);
    const RunOutput opa = assemble_poisoned_run(real, fakes, AttackMode::kOpa, protocol,
                                                cfg.defense, rep_seed,
                                                cfg.craft_length_report);
    report.no_attack.per_seed.push_back(
        make_metric_report(none.dataset, none.dataset, tp_set, report.config_digest, rep_seed));
    report.ipa.per_seed.push_back(
        make_metric_report(ipa.dataset, none.dataset, tp_set, report.config_digest, rep_seed));
    report.opa.per_seed.push_back(
        make_metric_report(opa.dataset, none.dataset, tp_set, report.config_digest, rep_seed));
  }
  report.no_attack.mean = mean_of(report.no_attack.per_seed, report.config_digest, cfg.seed);
  report.ipa.mean = mean_of(report.ipa.per_seed, report.config_digest, cfg.seed);
  report.opa.mean = mean_of(report.opa.per_seed, report.config_digest, cfg.seed);

  const auto end = std::chrono::steady_clock::now();
  report.wall_clock_sec = std::chrono::duration<double>(end - start).count();
  return report;
}

namespace {

json metric_to_json(const MetricReport& r) {
  json j;
  j["avg_score"] = r.avg_score;
  j["avg_pr"] = r.avg_pr;
  j["score_gain"] = r.score_gain;
  j["pr_gain"] = r.pr_gain;
  j["seed"] = r.seed;
  return j;
}

json condition_to_json(const ConditionResult& c) {
  json j;
  j["mean"] = metric_to_json(c.mean);
  json per_seed = json::array();
  for (const auto& r : c.per_seed) per_seed.push_back(metric_to_json(r));
  j["per_seed"] = per_seed;
  return j;
}

}  // namespace

void write_run_report_json(const std::string& path, const RunReport& report,
                           const ExperimentConfig& cfg) {
  json j;
  json config = json::object();
  for (const auto& [key, value] : cfg.as_key_values()) config[key] = value;
  j["config"] = config;
  j["config_digest"] = report.config_digest;
  j["wall_clock_sec"] = report.wall_clock_sec;
  j["no_attack"] = condition_to_json(report.no_attack);
  j["ipa"] = condition_to_json(report.ipa);
  j["opa"] = condition_to_json(report.opa);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

void append_run_report_csv(const std::string& path, const RunReport& report,
                           const std::map<std::string, std::string>& sweep_values) {
  const bool exists = static_cast<bool>(std::ifstream(path));
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot open " + path + " for writing");
  if (!exists) {
    for (const auto& [key, value] : sweep_values) out << key << ',';
    out << "condition,avg_score,avg_pr,score_gain,pr_gain,wall_clock_sec,config_digest\n";
  }
  const auto row = [&](const char* name, const MetricReport& r) {
    for (const auto& [key, value] : sweep_values) out << value << ',';
    out << name << ',' << r.avg_score << ',' << r.avg_pr << ',' << r.score_gain << ','
        << r.pr_gain << ',' << report.wall_clock_sec << ',' << report.config_digest << '\n';
  };
  row("no_attack", report.no_attack.mean);
  row("ipa", report.ipa.mean);
  row("opa", report.opa.mean);
}

}  // namespace trap
