#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trap/errors.hpp"
#include "trap/victim.hpp"

namespace trap {

namespace {

void validate_config(const GridTraceConfig& cfg) {
  cfg.grid.validate();
  if (cfg.eps <= 0.0) throw ConfigError("privacy budget eps must be positive");
  if (cfg.max_len < 1) throw ConfigError("max_len must be at least 1");
  if (cfg.quantile_k <= 0.0 || cfg.quantile_k > 1.0) {
    throw ConfigError("quantile_k must lie in (0, 1]");
  }
  if (cfg.length_budget_frac <= 0.0 || cfg.length_budget_frac >= 1.0) {
    throw ConfigError("length_budget_frac must lie in (0, 1)");
  }
}

void validate_trajectory(const CellTrajectory& traj, const GridTraceConfig& cfg) {
  if (traj.empty()) throw DataError("cannot report an empty trajectory");
  for (Cell c : traj) {
    if (!cfg.grid.valid_cell(c)) {
      throw DataError("trajectory cell " + std::to_string(c) + " outside the grid domain");
    }
  }
}

}  // namespace

int grid_trace_intra_count(int traj_len, int l_k) {
  return std::max(0, std::min(l_k, traj_len - 1));
}

bool grid_trace_emits_terminate(int traj_len, int l_k) { return traj_len - 1 < l_k; }

OueReport grid_trace_length_report(const CellTrajectory& traj, const GridTraceConfig& cfg,
                                   const Rng& user_rng) {
  validate_config(cfg);
  validate_trajectory(traj, cfg);
  const OueParams params = make_oue_params(cfg.max_len, cfg.length_eps());
  const int len = std::clamp(static_cast<int>(traj.size()), 1, cfg.max_len);
  Rng rng = user_rng.split(0);
  return oue_perturb(len - 1, params, rng);  // item index = length - 1
}

GridTraceReport grid_trace_client(const CellTrajectory& traj, const GridTraceConfig& cfg,
                                  int l_k, const Rng& user_rng) {
  validate_config(cfg);
  validate_trajectory(traj, cfg);
  if (l_k < 1) throw ConfigError("broadcast length cap l_k must be at least 1");

  GridTraceReport report;
  report.length_report = grid_trace_length_report(traj, cfg, user_rng);

  const int d = cfg.grid.cell_count();
  const double eps_t = cfg.transition_eps(l_k);
  const OueParams cell_params = make_oue_params(d, eps_t);
  const OueParams pair_params = make_oue_params(d * d, eps_t);
  Rng rng = user_rng.split(1);

  report.begin = oue_perturb(traj.front(), cell_params, rng);

  const int intra = grid_trace_intra_count(static_cast<int>(traj.size()), l_k);
  report.intra.reserve(intra);
  for (int i = 1; i <= intra; ++i) {
    const int item = traj[i - 1] * d + traj[i];
    report.intra.push_back(oue_perturb(item, pair_params, rng));
  }

  if (grid_trace_emits_terminate(static_cast<int>(traj.size()), l_k)) {
    report.terminate = oue_perturb(traj.back(), cell_params, rng);
  }
  return report;
}

double grid_trace_budget_spent(const GridTraceConfig& cfg, int traj_len, int l_k) {
  const int transition_reports = 1 + grid_trace_intra_count(traj_len, l_k) +
                                 (grid_trace_emits_terminate(traj_len, l_k) ? 1 : 0);
  return cfg.length_eps() + cfg.transition_eps(l_k) * transition_reports;
}

int estimate_length_quantile(const std::vector<double>& length_estimates, double k) {
  if (length_estimates.empty()) throw ConfigError("length estimate vector is empty");
  double total = 0.0;
  for (double e : length_estimates) total += std::max(e, 0.0);
  if (total <= 0.0) return static_cast<int>(length_estimates.size());
  const double target = k * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < length_estimates.size(); ++i) {
    cumulative += std::max(length_estimates[i], 0.0);
    if (cumulative >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(length_estimates.size());
}

namespace {

// Clamp-and-renormalize (the default cleanup) or min-subtract (the
// normalization defense). Degenerate input falls back to uniform.
std::vector<double> clean_row(const std::vector<double>& estimates, NormalizationMode mode,
                              bool* degenerate) {
  if (mode == NormalizationMode::kMinSubtract) {
    bool warned = false;
    auto out = normalize_distribution(estimates, &warned);
    if (warned && degenerate != nullptr) *degenerate = true;
    return out;
  }
  std::vector<double> out(estimates.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    out[i] = std::max(estimates[i], 0.0);
    total += out[i];
  }
  if (total <= 0.0) {
    if (degenerate != nullptr) *degenerate = true;
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

std::vector<double> aggregate_class(const std::vector<const OueReport*>& reports, int d,
                                    double eps) {
  if (reports.empty()) return std::vector<double>(d, 0.0);
  const OueParams params = make_oue_params(d, eps);
  std::vector<std::int64_t> ones(d, 0);
  for (const OueReport* report : reports) {
    if (report->domain_size() != d) throw DataError("report domain size mismatch");
    report->for_each_one([&](int i) { ++ones[i]; });
  }
  return oue_aggregate_counts(ones, static_cast<std::int64_t>(reports.size()), params);
}

std::vector<const OueReport*> filtered_class(std::vector<const OueReport*> reports,
                                             const GridTraceServerOptions& opts,
                                             int* removed) {
  if (!opts.fim_reports || reports.empty()) return reports;
  std::vector<OueReport> values;
  values.reserve(reports.size());
  for (const OueReport* r : reports) values.push_back(*r);
  const std::vector<OueReport> kept = fim_filter_reports(values, opts.fim);
  *removed += static_cast<int>(values.size() - kept.size());
  // Map survivors back to the original pointers; fim_filter_reports preserves
  // order, so a single forward scan matches them up.
  std::vector<const OueReport*> out;
  out.reserve(kept.size());
  std::size_t next = 0;
  for (const OueReport& survivor : kept) {
    while (next < reports.size() && !(*reports[next] == survivor)) ++next;
    if (next < reports.size()) out.push_back(reports[next++]);
  }
  return out;
}

}  // namespace

SynthesisModel aggregate_grid_trace(const std::vector<GridTraceReport>& reports,
                                    const GridTraceConfig& cfg, int l_k,
                                    const GridTraceServerOptions& opts) {
  validate_config(cfg);
  if (reports.empty()) throw DataError("no reports to aggregate");
  if (l_k < 1) throw ConfigError("broadcast length cap l_k must be at least 1");

  const int d = cfg.grid.cell_count();
  const double eps_t = cfg.transition_eps(l_k);

  std::vector<const OueReport*> length_reports;
  std::vector<const OueReport*> begin_reports;
  std::vector<const OueReport*> intra_reports;
  std::vector<const OueReport*> terminate_reports;
  for (const auto& report : reports) {
    length_reports.push_back(&report.length_report);
    begin_reports.push_back(&report.begin);
    for (const auto& r : report.intra) intra_reports.push_back(&r);
    if (report.terminate.has_value()) terminate_reports.push_back(&*report.terminate);
  }

  SynthesisModel model;
  // The length report class is never filtered: a crafted length report is a
  // single bit pattern indistinguishable from an honest one by composition.
  begin_reports = filtered_class(std::move(begin_reports), opts, &model.reports_removed_by_fim);
  intra_reports = filtered_class(std::move(intra_reports), opts, &model.reports_removed_by_fim);
  terminate_reports =
      filtered_class(std::move(terminate_reports), opts, &model.reports_removed_by_fim);

  const std::vector<double> length_est =
      aggregate_class(length_reports, cfg.max_len, cfg.length_eps());
  const std::vector<double> begin_est = aggregate_class(begin_reports, d, eps_t);
  const std::vector<double> intra_est = aggregate_class(intra_reports, d * d, eps_t);
  const std::vector<double> term_est = aggregate_class(terminate_reports, d, eps_t);

  model.length_dist = clean_row(length_est, opts.normalization, &model.degenerate_fallback);
  model.begin = clean_row(begin_est, opts.normalization, &model.degenerate_fallback);

  model.step.resize(static_cast<std::size_t>(d) * (d + 1), 0.0);
  std::vector<double> row(d + 1);
  for (Cell c = 0; c < d; ++c) {
    for (Cell to = 0; to < d; ++to) row[to] = intra_est[static_cast<std::size_t>(c) * d + to];
    row[d] = term_est[c];
    const std::vector<double> cleaned = clean_row(row, opts.normalization,
                                                  &model.degenerate_fallback);
    std::copy(cleaned.begin(), cleaned.end(),
              model.step.begin() + static_cast<std::size_t>(c) * (d + 1));
  }
  return model;
}

namespace {

// Draw an index from non-negative weights via the cumulative array.
int sample_weights(const std::vector<double>& cumulative, double total, Rng& rng) {
  const double draw = rng.uniform_real() * total;
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), draw);
  const auto idx = std::distance(cumulative.begin(), it);
  return std::min<int>(static_cast<int>(idx), static_cast<int>(cumulative.size()) - 1);
}

std::vector<double> cumulative_of(const double* weights, int n) {
  std::vector<double> cumulative(n);
  double running = 0.0;
  for (int i = 0; i < n; ++i) {
    running += std::max(weights[i], 0.0);
    cumulative[i] = running;
  }
  return cumulative;
}

}  // namespace

TrajectoryDataset synthesize_trajectories(const SynthesisModel& model, const GridTraceConfig& cfg,
                                          int n_out, Rng& rng) {
  validate_config(cfg);
  if (n_out < 0) throw ConfigError("cannot synthesize a negative number of trajectories");
  const int d = cfg.grid.cell_count();
  if (static_cast<int>(model.length_dist.size()) != cfg.max_len ||
      static_cast<int>(model.begin.size()) != d ||
      model.step.size() != static_cast<std::size_t>(d) * (d + 1)) {
    throw DataError("synthesis model shape does not match the configuration");
  }

  const std::vector<double> length_cum = cumulative_of(model.length_dist.data(), cfg.max_len);
  const std::vector<double> begin_cum = cumulative_of(model.begin.data(), d);
  std::vector<std::vector<double>> step_cum(d);
  for (Cell c = 0; c < d; ++c) {
    step_cum[c] = cumulative_of(model.step.data() + static_cast<std::size_t>(c) * (d + 1), d + 1);
  }

  TrajectoryDataset out;
  out.provenance = Provenance::kSynthesized;
  out.trajectories.reserve(n_out);
  for (int i = 0; i < n_out; ++i) {
    const int target_len = sample_weights(length_cum, length_cum.back(), rng) + 1;
    CellTrajectory traj;
    traj.reserve(target_len);
    traj.push_back(sample_weights(begin_cum, begin_cum.back(), rng));
    while (static_cast<int>(traj.size()) < target_len) {
      const Cell current = traj.back();
      const int next = sample_weights(step_cum[current], step_cum[current].back(), rng);
      if (next == d) break;  // stop symbol
      traj.push_back(next);
    }
    out.trajectories.push_back(std::move(traj));
  }
  return out;
}

TrajectoryDataset grid_trace_server(const std::vector<GridTraceReport>& reports,
                                    const GridTraceConfig& cfg, int l_k, int n_out, Rng& rng,
                                    const GridTraceServerOptions& opts) {
  const SynthesisModel model = aggregate_grid_trace(reports, cfg, l_k, opts);
  return synthesize_trajectories(model, cfg, n_out, rng);
}

}  // namespace trap
