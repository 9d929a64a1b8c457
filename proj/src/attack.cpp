#include "trap/attack.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trap/errors.hpp"

namespace trap {

int fake_count(double beta, int n) {
  if (beta < 0.0 || beta >= 1.0) throw ConfigError("fake ratio beta must lie in [0, 1)");
  if (n < 0) throw ConfigError("real user count must be non-negative");
  return static_cast<int>(std::lround(beta * static_cast<double>(n) / (1.0 - beta)));
}

int honest_expected_ones(const OueParams& params) {
  const double expected = params.p + static_cast<double>(params.d - 1) * params.q;
  return static_cast<int>(std::floor(expected + 0.5));
}

std::vector<CellTrajectory> run_ipa_direct(const FakeTrajectorySet& fakes,
                                           const DirectTrajConfig& cfg, const Rng& base_rng) {
  std::vector<CellTrajectory> out;
  out.reserve(fakes.trajectories.size());
  for (std::size_t j = 0; j < fakes.trajectories.size(); ++j) {
    Rng rng = base_rng.split(j);
    out.push_back(direct_traj_perturb(fakes.trajectories[j], cfg, rng));
  }
  return out;
}

std::vector<GridTraceReport> run_ipa_gridtrace(const FakeTrajectorySet& fakes,
                                               const GridTraceConfig& cfg, int l_k,
                                               const Rng& base_rng) {
  std::vector<GridTraceReport> out;
  out.reserve(fakes.trajectories.size());
  for (std::size_t j = 0; j < fakes.trajectories.size(); ++j) {
    out.push_back(grid_trace_client(fakes.trajectories[j], cfg, l_k, base_rng.split(j)));
  }
  return out;
}

std::vector<CellTrajectory> craft_opa_direct(const FakeTrajectorySet& fakes) {
  return fakes.trajectories;
}

namespace {

// A report with the target bit set and uniformly chosen distinct non-target
// bits added until the ones-count equals the honest expectation, so the
// report is indistinguishable from an honest one by its composition.
OueReport craft_report(int item, const OueParams& params, Rng& rng) {
  if (item < 0 || item >= params.d) {
    throw ConfigError("crafted item " + std::to_string(item) + " outside domain of size " +
                      std::to_string(params.d));
  }
  OueReport report(params.d);
  report.set_bit(item);
  const int target_ones = std::max(1, honest_expected_ones(params));
  const int padding = std::min(target_ones - 1, params.d - 1);
  if (padding > 0) {
    const auto picks = rng.sample_without_replacement(static_cast<std::uint32_t>(params.d - 1),
                                                      static_cast<std::uint32_t>(padding));
    for (std::uint32_t pick : picks) {
      const int index = static_cast<int>(pick);
      report.set_bit(index >= item ? index + 1 : index);
    }
  }
  return report;
}

}  // namespace

GridTraceReport craft_opa_oue(const CellTrajectory& fake, const GridTraceConfig& cfg, int l_k,
                              Rng& rng, bool craft_length_report) {
  if (fake.empty()) throw DataError("cannot craft reports for an empty trajectory");
  if (l_k < 1) throw ConfigError("broadcast length cap l_k must be at least 1");

  GridTraceReport report;
  // Same sub-stream layout as the honest client, so a fake's phase-1 length
  // report and the one in its phase-2 bundle are bit-identical.
  if (craft_length_report) {
    const OueParams length_params = make_oue_params(cfg.max_len, cfg.length_eps());
    const int len = std::clamp(static_cast<int>(fake.size()), 1, cfg.max_len);
    Rng length_rng = rng.split(0);
    report.length_report = craft_report(len - 1, length_params, length_rng);
  } else {
    report.length_report = grid_trace_length_report(fake, cfg, rng);
  }

  const int d = cfg.grid.cell_count();
  const double eps_t = cfg.transition_eps(l_k);
  const OueParams cell_params = make_oue_params(d, eps_t);
  const OueParams pair_params = make_oue_params(d * d, eps_t);
  Rng trans_rng = rng.split(1);

  report.begin = craft_report(fake.front(), cell_params, trans_rng);

  const int intra = grid_trace_intra_count(static_cast<int>(fake.size()), l_k);
  report.intra.reserve(intra);
  for (int i = 1; i <= intra; ++i) {
    report.intra.push_back(craft_report(fake[i - 1] * d + fake[i], pair_params, trans_rng));
  }

  if (grid_trace_emits_terminate(static_cast<int>(fake.size()), l_k)) {
    report.terminate = craft_report(fake.back(), cell_params, trans_rng);
  }
  return report;
}

namespace {

RunOutput run_direct(const TrajectoryDataset& real, const FakeTrajectorySet& fakes,
                     AttackMode mode, const DirectTrajConfig& cfg,
                     const DefenseOptions& defense, std::uint64_t seed) {
  Rng base(seed);
  const Rng real_stream = base.split(1);
  const Rng fake_stream = base.split(2);

  RunOutput out;
  for (std::size_t i = 0; i < real.trajectories.size(); ++i) {
    Rng rng = real_stream.split(i);
    out.dataset.trajectories.push_back(direct_traj_perturb(real.trajectories[i], cfg, rng));
  }

  std::vector<CellTrajectory> fake_outputs;
  if (mode == AttackMode::kIpa) {
    fake_outputs = run_ipa_direct(fakes, cfg, fake_stream);
  } else if (mode == AttackMode::kOpa) {
    fake_outputs = craft_opa_direct(fakes);
  }
  for (auto& traj : fake_outputs) {
    out.dataset.trajectories.push_back(std::move(traj));
  }

  if (defense.fim) {
    const int before = static_cast<int>(out.dataset.size());
    out.dataset = fim_filter_trajectories(out.dataset, defense.fim_cfg);
    out.removed_by_fim = before - static_cast<int>(out.dataset.size());
  }
  return out;
}

RunOutput run_gridtrace(const TrajectoryDataset& real, const FakeTrajectorySet& fakes,
                        AttackMode mode, const GridTraceConfig& cfg,
                        const DefenseOptions& defense, std::uint64_t seed,
                        bool craft_length_report) {
  Rng base(seed);
  const Rng real_stream = base.split(1);
  const Rng fake_stream = base.split(2);
  Rng server_rng = base.split(3);

  const std::size_t n_real = real.trajectories.size();
  const std::size_t n_fake =
      mode == AttackMode::kNone ? 0 : fakes.trajectories.size();

  RunOutput out;
  if (n_real + n_fake == 0) return out;

  // Phase 1: everyone submits a length report; the server broadcasts the
  // quantile cap.
  const OueParams length_params = make_oue_params(cfg.max_len, cfg.length_eps());
  std::vector<std::int64_t> length_ones(cfg.max_len, 0);
  const auto tally = [&](const OueReport& r) { r.for_each_one([&](int i) { ++length_ones[i]; }); };
  for (std::size_t i = 0; i < n_real; ++i) {
    tally(grid_trace_length_report(real.trajectories[i], cfg, real_stream.split(i)));
  }
  for (std::size_t j = 0; j < n_fake; ++j) {
    const Rng user = fake_stream.split(j);
    if (mode == AttackMode::kOpa && craft_length_report) {
      const int len = std::clamp(static_cast<int>(fakes.trajectories[j].size()), 1, cfg.max_len);
      Rng length_rng = user.split(0);
      tally(craft_report(len - 1, length_params, length_rng));
    } else {
      tally(grid_trace_length_report(fakes.trajectories[j], cfg, user));
    }
  }
  const std::vector<double> length_est =
      oue_aggregate_counts(length_ones, static_cast<std::int64_t>(n_real + n_fake),
                           length_params);
  out.l_k = estimate_length_quantile(length_est, cfg.quantile_k);

  // Phase 2: full bundles under the broadcast cap.
  std::vector<GridTraceReport> bundles;
  bundles.reserve(n_real + n_fake);
  for (std::size_t i = 0; i < n_real; ++i) {
    bundles.push_back(grid_trace_client(real.trajectories[i], cfg, out.l_k,
                                        real_stream.split(i)));
  }
  for (std::size_t j = 0; j < n_fake; ++j) {
    Rng user = fake_stream.split(j);
    if (mode == AttackMode::kOpa) {
      bundles.push_back(craft_opa_oue(fakes.trajectories[j], cfg, out.l_k, user,
                                      craft_length_report));
    } else {
      bundles.push_back(grid_trace_client(fakes.trajectories[j], cfg, out.l_k, user));
    }
  }

  GridTraceServerOptions server_opts;
  server_opts.normalization = defense.normalization ? NormalizationMode::kMinSubtract
                                                    : NormalizationMode::kClampRenormalize;
  server_opts.fim_reports = defense.fim;
  server_opts.fim = defense.fim_cfg;

  const SynthesisModel model = aggregate_grid_trace(bundles, cfg, out.l_k, server_opts);
  out.removed_by_fim = model.reports_removed_by_fim;
  out.dataset = synthesize_trajectories(model, cfg, static_cast<int>(bundles.size()),
                                        server_rng);

  // Synthesized trajectories are plain trajectories again, so the trajectory
  // screen applies to them as well.
  if (defense.fim) {
    out.dataset = fim_filter_trajectories(out.dataset, defense.fim_cfg);
  }
  return out;
}

}  // namespace

RunOutput assemble_poisoned_run(const TrajectoryDataset& real, const FakeTrajectorySet& fakes,
                                AttackMode mode, const ProtocolConfig& protocol,
                                const DefenseOptions& defense, std::uint64_t seed,
                                bool craft_length_report) {
  if (const auto* direct = std::get_if<DirectTrajConfig>(&protocol)) {
    if (mode == AttackMode::kNone) {
      FakeTrajectorySet none;
      return run_direct(real, none, mode, *direct, defense, seed);
    }
    return run_direct(real, fakes, mode, *direct, defense, seed);
  }
  const auto& grid_cfg = std::get<GridTraceConfig>(protocol);
  return run_gridtrace(real, fakes, mode, grid_cfg, defense, seed, craft_length_report);
}

}  // namespace trap
