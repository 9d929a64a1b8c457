// trapbench: workbench CLI around the trajectory-poisoning library.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 capacity
// refusal (exhaustive search too large), 5 under-filled fake set.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trap/attack.hpp"
#include "trap/errors.hpp"
#include "trap/experiment.hpp"
#include "trap/generator.hpp"
#include "trap/io.hpp"
#include "trap/ldp.hpp"
#include "trap/metrics.hpp"
#include "trap/victim.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "key = value configuration file");
  cmd->add_option("--set", args->overrides,
                  "override one configuration key (key=value, repeatable)");
}

trap::ExperimentConfig load_config(const CommonArgs& args) {
  trap::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    trap::apply_key_values(cfg, trap::parse_config_file(args.config_path));
  }
  std::map<std::string, std::string> overrides;
  for (const std::string& entry : args.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw trap::ConfigError("--set expects key=value, got '" + entry + "'");
    }
    overrides[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  trap::apply_key_values(cfg, overrides);
  return cfg;
}

trap::TrajectoryDataset load_or_synthesize(const trap::ExperimentConfig& cfg,
                                           const std::string& data_path) {
  const std::string path = data_path.empty() ? cfg.dataset_path : data_path;
  if (!path.empty()) return trap::read_trajectory_csv(path, cfg.grid);
  return trap::generate_synthetic(cfg.grid, cfg.n, cfg.data_l_min, cfg.data_l_max,
                                  trap::Rng(cfg.seed).split(10).seed());
}

trap::TargetPatternSet load_or_sample_patterns(const trap::ExperimentConfig& cfg,
                                               const std::string& patterns_path,
                                               const std::string& data_path) {
  const std::string path = patterns_path.empty() ? cfg.patterns_path : patterns_path;
  if (!path.empty()) return trap::read_target_patterns(path);
  const trap::TrajectoryDataset data = load_or_synthesize(cfg, data_path);
  return trap::sample_target_patterns(data, cfg.k_min, cfg.k_max, cfg.per_length,
                                      trap::Rng(cfg.seed).split(12).seed());
}

int run_synth_data(const CommonArgs& common, const std::string& out_path) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::TrajectoryDataset data = trap::generate_synthetic(
      cfg.grid, cfg.n, cfg.data_l_min, cfg.data_l_max, trap::Rng(cfg.seed).split(10).seed());
  trap::write_trajectory_csv(out_path, data);
  std::cout << "wrote " << data.size() << " trajectories to " << out_path << "\n";
  return 0;
}

int run_sample_patterns(const CommonArgs& common, const std::string& data_path,
                        const std::string& out_path) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::TrajectoryDataset data = load_or_synthesize(cfg, data_path);
  const trap::TargetPatternSet tp_set = trap::sample_target_patterns(
      data, cfg.k_min, cfg.k_max, cfg.per_length, trap::Rng(cfg.seed).split(12).seed());
  trap::write_target_patterns(out_path, tp_set);
  std::cout << "wrote " << tp_set.patterns.size() << " patterns to " << out_path << "\n";
  return 0;
}

int run_generate_fakes(const CommonArgs& common, const std::string& patterns_path,
                       const std::string& data_path, const std::string& out_path,
                       int m_override, bool brute_force) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::ReachabilityGraph rps =
      trap::build_reachability(cfg.grid, trap::Neighbors8{}, cfg.self_loops);
  const trap::TargetPatternSet tp_set = load_or_sample_patterns(cfg, patterns_path, data_path);
  tp_set.validate(rps);

  // Like the experiment runner: size the fake set against the real dataset
  // and mimic its observed length range when one is given.
  int real_n = cfg.n;
  int l_min = cfg.data_l_min;
  int l_max = cfg.data_l_max;
  if (!data_path.empty() || !cfg.dataset_path.empty()) {
    const trap::TrajectoryDataset real = load_or_synthesize(cfg, data_path);
    real_n = static_cast<int>(real.size());
    int obs_min = std::numeric_limits<int>::max();
    int obs_max = 1;
    for (const auto& traj : real.trajectories) {
      obs_min = std::min(obs_min, static_cast<int>(traj.size()));
      obs_max = std::max(obs_max, static_cast<int>(traj.size()));
    }
    l_min = std::max(obs_min, 1);
    l_max = obs_max;
  }

  const int m = m_override > 0 ? m_override : trap::fake_count(cfg.beta, real_n);
  const trap::LengthDistribution dist =
      trap::sample_length_distribution(m, l_min, l_max,
                                       trap::Rng(cfg.seed).split(13).seed(), cfg.mean_divisor,
                                       cfg.std_divisor);

  trap::FakeTrajectorySet fakes;
  if (brute_force) {
    fakes = trap::brute_force_generate(rps, tp_set, dist, cfg.max_rep);
  } else {
    trap::GeneratorOptions opts;
    opts.max_rep = cfg.max_rep;
    opts.seed = trap::Rng(cfg.seed).split(14).seed();
    fakes = trap::trap_generate(rps, tp_set, dist, opts);
  }
  trap::write_fake_set(out_path, fakes);
  std::cout << "wrote " << fakes.trajectories.size() << " fakes (total score "
            << fakes.total_score << ") to " << out_path << "\n";
  return 0;
}

int run_craft_bundles(const CommonArgs& common, const std::string& fakes_path,
                      const std::string& data_path, int l_k_override,
                      const std::string& out_path, const std::string& format_name) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::FakeTrajectorySet fakes = trap::read_fake_set(fakes_path);
  const trap::BundleFormat format =
      format_name == "binary" ? trap::BundleFormat::kBinary : trap::BundleFormat::kJsonLines;

  trap::GridTraceConfig gt;
  gt.eps = cfg.eps;
  gt.grid = cfg.grid;
  gt.quantile_k = cfg.quantile_k;
  gt.length_budget_frac = cfg.length_budget_frac;
  gt.max_len = cfg.max_len;

  int l_k = l_k_override;
  if (l_k <= 0) {
    // Replay the honest length round to recover the broadcast cap the server
    // would announce for this dataset and seed.
    const trap::TrajectoryDataset real = load_or_synthesize(cfg, data_path);
    const trap::OueParams length_params = trap::make_oue_params(gt.max_len, gt.length_eps());
    std::vector<std::int64_t> ones(static_cast<std::size_t>(gt.max_len), 0);
    const trap::Rng real_stream = trap::Rng(cfg.seed).split(1);
    for (std::size_t i = 0; i < real.trajectories.size(); ++i) {
      trap::grid_trace_length_report(real.trajectories[i], gt, real_stream.split(i))
          .for_each_one([&](int idx) { ++ones[static_cast<std::size_t>(idx)]; });
    }
    const std::vector<double> est = trap::oue_aggregate_counts(
        ones, static_cast<std::int64_t>(real.trajectories.size()), length_params);
    l_k = trap::estimate_length_quantile(est, gt.quantile_k);
  }

  std::vector<trap::GridTraceReport> bundles;
  bundles.reserve(fakes.trajectories.size());
  const trap::Rng fake_stream = trap::Rng(cfg.seed).split(2);
  for (std::size_t j = 0; j < fakes.trajectories.size(); ++j) {
    trap::Rng user = fake_stream.split(j);
    bundles.push_back(
        trap::craft_opa_oue(fakes.trajectories[j], gt, l_k, user, cfg.craft_length_report));
  }
  trap::write_report_bundles(out_path, bundles, format);
  std::cout << "wrote " << bundles.size() << " report bundles (l_k " << l_k << ", "
            << (format == trap::BundleFormat::kBinary ? "binary" : "json-lines") << ") to "
            << out_path << "\n";
  return 0;
}

int run_attack(const CommonArgs& common, const std::string& out_path) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::RunReport report = trap::run_experiment(cfg);
  if (!out_path.empty()) trap::write_run_report_json(out_path, report, cfg);
  const auto line = [](const char* name, const trap::MetricReport& r) {
    std::printf("%-10s avg_score %9.4f  avg_pr %7.3f  score_gain %9.4f  pr_gain %7.3f\n", name,
                r.avg_score, r.avg_pr, r.score_gain, r.pr_gain);
  };
  line("no_attack", report.no_attack.mean);
  line("ipa", report.ipa.mean);
  line("opa", report.opa.mean);
  std::printf("wall clock: %.1fs\n", report.wall_clock_sec);
  return 0;
}

int run_evaluate(const CommonArgs& common, const std::string& data_path,
                 const std::string& baseline_path, const std::string& patterns_path,
                 const std::string& out_path) {
  const trap::ExperimentConfig cfg = load_config(common);
  const trap::TrajectoryDataset after = trap::read_trajectory_csv(data_path, cfg.grid);
  const trap::TrajectoryDataset before =
      baseline_path.empty() ? after : trap::read_trajectory_csv(baseline_path, cfg.grid);
  const trap::TargetPatternSet tp_set = load_or_sample_patterns(cfg, patterns_path, data_path);
  const trap::MetricReport report = trap::make_metric_report(
      after, before, tp_set, trap::config_digest(cfg.as_key_values()), cfg.seed);
  if (!out_path.empty()) trap::write_metric_report(out_path, report);
  std::printf("avg_score %9.4f  avg_pr %7.3f  score_gain %9.4f  pr_gain %7.3f\n",
              report.avg_score, report.avg_pr, report.score_gain, report.pr_gain);
  return 0;
}

int run_sweep(const CommonArgs& common, const std::string& param,
              const std::vector<std::string>& values, const std::string& out_path) {
  if (values.empty()) throw trap::ConfigError("sweep needs at least one value");
  for (const std::string& value : values) {
    trap::ExperimentConfig cfg = load_config(common);
    trap::apply_key_values(cfg, {{param, value}});
    const trap::RunReport report = trap::run_experiment(cfg);
    trap::append_run_report_csv(out_path, report, {{param, value}});
    std::cout << param << "=" << value << ": opa score_gain "
              << report.opa.mean.score_gain << ", ipa score_gain "
              << report.ipa.mean.score_gain << "\n";
  }
  std::cout << "wrote sweep rows to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory-poisoning workbench"};
  app.require_subcommand(0, 1);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the configuration schema and exit");

  CommonArgs synth_args;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth-data", "write a synthetic random-walk dataset");
  add_common(synth, &synth_args);
  synth->add_option("--out", synth_out, "output CSV")->required();

  CommonArgs patterns_args;
  std::string patterns_data;
  std::string patterns_out;
  CLI::App* patterns =
      app.add_subcommand("sample-patterns", "sample target patterns from a dataset");
  add_common(patterns, &patterns_args);
  patterns->add_option("--data", patterns_data, "trajectory CSV (default: config dataset)");
  patterns->add_option("--out", patterns_out, "output CSV")->required();

  CommonArgs fakes_args;
  std::string fakes_patterns;
  std::string fakes_data;
  std::string fakes_out;
  int fakes_m = 0;
  bool fakes_brute = false;
  CLI::App* fakes = app.add_subcommand("generate-fakes", "generate the fake trajectory set");
  add_common(fakes, &fakes_args);
  fakes->add_option("--patterns", fakes_patterns, "target pattern CSV (default: sampled)");
  fakes->add_option("--data", fakes_data, "dataset used when sampling patterns");
  fakes->add_option("--out", fakes_out, "output CSV (manifest written alongside)")->required();
  fakes->add_option("--m", fakes_m, "number of fakes (default: beta*n/(1-beta))");
  fakes->add_flag("--brute-force", fakes_brute, "use the exhaustive oracle generator");

  CommonArgs craft_args;
  std::string craft_fakes;
  std::string craft_data;
  std::string craft_out;
  std::string craft_format = "jsonl";
  int craft_l_k = 0;
  CLI::App* craft = app.add_subcommand(
      "craft-bundles", "craft the report bundles the fake users send (gridtrace output poisoning)");
  add_common(craft, &craft_args);
  craft->add_option("--fakes", craft_fakes, "fake trajectory CSV (from generate-fakes)")
      ->required();
  craft->add_option("--data", craft_data,
                    "dataset for the honest length round (default: config dataset)");
  craft->add_option("--l-k", craft_l_k,
                    "broadcast length cap (default: replay the honest length round)");
  craft->add_option("--out", craft_out, "output path")->required();
  craft->add_option("--format", craft_format, "bundle serialization: jsonl or binary")
      ->check(CLI::IsMember({"jsonl", "binary"}));

  CommonArgs attack_args;
  std::string attack_out;
  CLI::App* attack = app.add_subcommand(
      "attack", "run the no-attack / input / output poisoning conditions and report metrics");
  add_common(attack, &attack_args);
  attack->add_option("--out", attack_out, "write the full run report JSON here");

  CommonArgs eval_args;
  std::string eval_data;
  std::string eval_baseline;
  std::string eval_patterns;
  std::string eval_out;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score a collected dataset");
  add_common(evaluate, &eval_args);
  evaluate->add_option("--data", eval_data, "dataset CSV to score")->required();
  evaluate->add_option("--baseline", eval_baseline, "baseline CSV for the gain columns");
  evaluate->add_option("--patterns", eval_patterns, "target pattern CSV (default: sampled)");
  evaluate->add_option("--out", eval_out, "write the metric report JSON here");

  CommonArgs sweep_args;
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  std::string sweep_out;
  CLI::App* sweep = app.add_subcommand("sweep", "run the attack across one parameter");
  add_common(sweep, &sweep_args);
  sweep->add_option("--param", sweep_param, "configuration key to vary")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out", sweep_out, "sweep CSV (appended)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (print_schema) {
      std::cout << trap::config_schema_text();
      return 0;
    }
    if (synth->parsed()) return run_synth_data(synth_args, synth_out);
    if (patterns->parsed()) return run_sample_patterns(patterns_args, patterns_data, patterns_out);
    if (fakes->parsed()) {
      return run_generate_fakes(fakes_args, fakes_patterns, fakes_data, fakes_out, fakes_m,
                                fakes_brute);
    }
    if (craft->parsed()) {
      return run_craft_bundles(craft_args, craft_fakes, craft_data, craft_l_k, craft_out,
                               craft_format);
    }
    if (attack->parsed()) return run_attack(attack_args, attack_out);
    if (evaluate->parsed()) {
      return run_evaluate(eval_args, eval_data, eval_baseline, eval_patterns, eval_out);
    }
    if (sweep->parsed()) return run_sweep(sweep_args, sweep_param, sweep_values, sweep_out);
    std::cout << app.help();
    return 0;
  } catch (const trap::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const trap::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const trap::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 4;
  } catch (const trap::UnderfillError& e) {
    std::cerr << "under-fill error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
