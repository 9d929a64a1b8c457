#pragma once

#include <optional>
#include <vector>

#include "trap/defense.hpp"
#include "trap/grid.hpp"
#include "trap/ldp.hpp"
#include "trap/rng.hpp"
#include "trap/trajectory.hpp"

namespace trap {

// Full-trajectory protocol: each point perturbed locally with the exponential
// mechanism (utility = -grid distance to the true cell, budget eps/|traj| per
// point); the server just collects what arrives.
struct DirectTrajConfig {
  double eps = 1.0;
  GridSpec grid;
};

CellTrajectory direct_traj_perturb(const CellTrajectory& traj, const DirectTrajConfig& cfg,
                                   Rng& rng);

// Transition-report protocol: OUE reports for the trajectory length, the
// virtual-start transition R_s->first, intra transitions, and last->R_e; the
// server aggregates and synthesizes trajectories from the estimated Markov
// model. Report domains: length max_len, begin |P|, intra |P|^2, terminate |P|.
struct GridTraceConfig {
  double eps = 1.0;
  GridSpec grid;
  double quantile_k = 0.9;          // broadcast L_k = k-th quantile of lengths
  double length_budget_frac = 0.1;  // share of eps for the length report
  int max_len = 32;                 // length-report domain covers 1..max_len

  [[nodiscard]] double length_eps() const { return eps * length_budget_frac; }
  // Remaining budget split evenly across the up-to-(L_k+1) transition reports.
  [[nodiscard]] double transition_eps(int l_k) const {
    return eps * (1.0 - length_budget_frac) / (l_k + 1);
  }
};

struct GridTraceReport {
  OueReport length_report;
  OueReport begin;
  std::vector<OueReport> intra;
  std::optional<OueReport> terminate;

  [[nodiscard]] int report_count() const {
    return 2 + static_cast<int>(intra.size()) + (terminate.has_value() ? 1 : 0);
  }
};

// Number of intra reports a length-|traj| client emits under cap l_k:
// transitions i in [1, min(l_k, |traj|-1)]; the terminate report is emitted
// iff the trajectory ends within the cap (|traj|-1 < l_k).
int grid_trace_intra_count(int traj_len, int l_k);
bool grid_trace_emits_terminate(int traj_len, int l_k);

// Phase-1 report: the user's (clamped) length under OUE with the length
// budget. Drawn from rng.split(0) so grid_trace_client reproduces it.
OueReport grid_trace_length_report(const CellTrajectory& traj, const GridTraceConfig& cfg,
                                   const Rng& user_rng);

// Full bundle for one user once L_k is known. Deterministic per user_rng:
// the length report re-derives sub-stream 0, transitions use sub-stream 1.
GridTraceReport grid_trace_client(const CellTrajectory& traj, const GridTraceConfig& cfg,
                                  int l_k, const Rng& user_rng);

// Total budget a length-`traj_len` client spends under cap l_k; tests assert
// this never exceeds cfg.eps.
double grid_trace_budget_spent(const GridTraceConfig& cfg, int traj_len, int l_k);

// Smallest length whose cumulative (negativity-clamped) estimated mass
// reaches k; falls back to the largest supported length when everything
// clamps to zero.
int estimate_length_quantile(const std::vector<double>& length_estimates, double k);

enum class NormalizationMode { kClampRenormalize, kMinSubtract };

struct GridTraceServerOptions {
  NormalizationMode normalization = NormalizationMode::kClampRenormalize;
  bool fim_reports = false;   // filter transition reports before aggregation
  FimConfig fim;
};

// Estimated and cleaned synthesis model. Conditional rows concatenate the
// intra row for a cell with its terminate weight (index d = stop).
struct SynthesisModel {
  std::vector<double> length_dist;          // over lengths 1..max_len
  std::vector<double> begin;                // over cells
  std::vector<double> step;                 // (d+1) weights per cell, flattened
  bool degenerate_fallback = false;
  int reports_removed_by_fim = 0;
};

SynthesisModel aggregate_grid_trace(const std::vector<GridTraceReport>& reports,
                                    const GridTraceConfig& cfg, int l_k,
                                    const GridTraceServerOptions& opts);

// Synthesizes n_out trajectories: sample a length L, a first cell from the
// begin weights, then extend from the current cell's conditional weights
// until the stop symbol or L cells.
TrajectoryDataset synthesize_trajectories(const SynthesisModel& model, const GridTraceConfig& cfg,
                                          int n_out, Rng& rng);

TrajectoryDataset grid_trace_server(const std::vector<GridTraceReport>& reports,
                                    const GridTraceConfig& cfg, int l_k, int n_out, Rng& rng,
                                    const GridTraceServerOptions& opts = {});

}  // namespace trap
