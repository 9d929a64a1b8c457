#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "trap/errors.hpp"
#include "trap/grid.hpp"
#include "trap/ldp.hpp"
#include "trap/rng.hpp"
#include "trap/victim.hpp"

using trap::CellTrajectory;
using trap::DirectTrajConfig;
using trap::GridSpec;
using trap::GridTraceConfig;
using trap::GridTraceReport;
using trap::Rng;
using trap::SynthesisModel;

namespace {

GridSpec square(int n) {
  GridSpec spec;
  spec.rows = n;
  spec.cols = n;
  spec.min_lat = spec.min_lon = 0.0;
  spec.max_lat = spec.max_lon = n;
  return spec;
}

GridTraceConfig small_grid_trace(double eps = 1.0) {
  GridTraceConfig cfg;
  cfg.eps = eps;
  cfg.grid = square(4);
  cfg.max_len = 8;
  return cfg;
}

}  // namespace

TEST_CASE("direct perturbation keeps length and domain") {
  DirectTrajConfig cfg;
  cfg.eps = 1.0;
  cfg.grid = square(4);
  Rng rng(3);
  const CellTrajectory traj{0, 1, 5, 10};
  const CellTrajectory out = trap::direct_traj_perturb(traj, cfg, rng);
  REQUIRE(out.size() == traj.size());
  for (trap::Cell c : out) CHECK(cfg.grid.valid_cell(c));
}

TEST_CASE("direct perturbation at huge eps is the identity in practice") {
  DirectTrajConfig cfg;
  cfg.eps = 5000.0;  // per-point eps stays enormous even after division
  cfg.grid = square(4);
  Rng rng(17);
  const CellTrajectory traj{0, 5, 10, 15};
  CHECK(trap::direct_traj_perturb(traj, cfg, rng) == traj);
}

TEST_CASE("direct perturbation at tiny eps scatters") {
  DirectTrajConfig cfg;
  cfg.eps = 1e-9;
  cfg.grid = square(8);
  Rng rng(23);
  int moved = 0;
  for (int i = 0; i < 200; ++i) {
    const CellTrajectory out = trap::direct_traj_perturb({0}, cfg, rng);
    if (out[0] != 0) ++moved;
  }
  // Near-uniform over 64 cells: staying put ~1/64.
  CHECK(moved > 180);
}

TEST_CASE("direct perturbation validates input") {
  DirectTrajConfig cfg;
  cfg.eps = 1.0;
  cfg.grid = square(4);
  Rng rng(1);
  CHECK_THROWS_AS(static_cast<void>(trap::direct_traj_perturb({}, cfg, rng)),
                  trap::DataError);
  CHECK_THROWS_AS(static_cast<void>(trap::direct_traj_perturb({99}, cfg, rng)),
                  trap::DataError);
  cfg.eps = 0.0;
  CHECK_THROWS_AS(static_cast<void>(trap::direct_traj_perturb({0}, cfg, rng)),
                  trap::ConfigError);
}

TEST_CASE("report-count rules for the transition protocol") {
  // Transitions reported are i in [1, min(l_k, len-1)].
  CHECK(trap::grid_trace_intra_count(11, 10) == 10);
  CHECK(trap::grid_trace_intra_count(2, 4) == 1);
  CHECK(trap::grid_trace_intra_count(6, 4) == 4);
  CHECK(trap::grid_trace_intra_count(5, 4) == 4);
  CHECK(trap::grid_trace_intra_count(1, 4) == 0);
  CHECK(trap::grid_trace_intra_count(1, 1) == 0);

  // Terminate is sent iff the trajectory ends inside the cap.
  CHECK(trap::grid_trace_emits_terminate(2, 4));
  CHECK(trap::grid_trace_emits_terminate(4, 4));
  CHECK_FALSE(trap::grid_trace_emits_terminate(5, 4));
  CHECK_FALSE(trap::grid_trace_emits_terminate(11, 10));
  CHECK(trap::grid_trace_emits_terminate(1, 1));
}

TEST_CASE("client bundle has the right shape and domains") {
  const GridTraceConfig cfg = small_grid_trace();
  const Rng user(42);
  const CellTrajectory traj{0, 1, 5};

  SUBCASE("trajectory shorter than the cap sends terminate") {
    const GridTraceReport r = trap::grid_trace_client(traj, cfg, /*l_k=*/4, user);
    CHECK(r.length_report.domain_size() == cfg.max_len);
    CHECK(r.begin.domain_size() == 16);
    REQUIRE(r.intra.size() == 2);
    for (const auto& rep : r.intra) CHECK(rep.domain_size() == 16 * 16);
    REQUIRE(r.terminate.has_value());
    CHECK(r.terminate->domain_size() == 16);
    CHECK(r.report_count() == 5);
  }
  SUBCASE("trajectory at or past the cap omits terminate") {
    const GridTraceReport r = trap::grid_trace_client(traj, cfg, /*l_k=*/2, user);
    CHECK(r.intra.size() == 2);
    CHECK_FALSE(r.terminate.has_value());
  }
  SUBCASE("bundle is deterministic and reproduces the phase-1 length report") {
    const GridTraceReport r1 = trap::grid_trace_client(traj, cfg, 4, user);
    const GridTraceReport r2 = trap::grid_trace_client(traj, cfg, 4, user);
    CHECK(r1.length_report == r2.length_report);
    CHECK(r1.begin == r2.begin);
    CHECK(r1.intra == r2.intra);
    CHECK(r1.length_report == trap::grid_trace_length_report(traj, cfg, user));
  }
  SUBCASE("validation") {
    GridTraceConfig bad = cfg;
    bad.eps = 0.0;
    CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_client(traj, bad, 4, user)),
                    trap::ConfigError);
    CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_client(traj, cfg, 0, user)),
                    trap::ConfigError);
    CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_client({}, cfg, 4, user)),
                    trap::DataError);
  }
}

TEST_CASE("privacy budget is never exceeded and is exhausted at the cap") {
  const GridTraceConfig cfg = small_grid_trace(2.0);
  for (int len = 1; len <= 12; ++len) {
    for (int l_k = 1; l_k <= 10; ++l_k) {
      const double spent = trap::grid_trace_budget_spent(cfg, len, l_k);
      CAPTURE(len);
      CAPTURE(l_k);
      CHECK(spent <= cfg.eps + 1e-12);
    }
  }
  // A trajectory that uses every transition slot but stops inside the cap
  // (len-1 == l_k would omit terminate... len-1 >= l_k spends all slots).
  CHECK(trap::grid_trace_budget_spent(cfg, 6, 5) == doctest::Approx(cfg.eps));
  CHECK(trap::grid_trace_budget_spent(cfg, 12, 5) == doctest::Approx(cfg.eps));
  // A short trajectory under a high cap spends less.
  CHECK(trap::grid_trace_budget_spent(cfg, 2, 5) < cfg.eps);
}

TEST_CASE("length quantile estimation") {
  SUBCASE("uniform mass over lengths 2..11, k=0.5 lands at 6") {
    std::vector<double> est(12, 0.0);  // lengths 1..12
    for (int len = 2; len <= 11; ++len) est[static_cast<std::size_t>(len - 1)] = 10.0;
    CHECK(trap::estimate_length_quantile(est, 0.5) == 6);
    CHECK(trap::estimate_length_quantile(est, 0.9) == 10);
    CHECK(trap::estimate_length_quantile(est, 1.0) == 11);
  }
  SUBCASE("negative estimates clamp to zero") {
    const std::vector<double> est{-5.0, 3.0, -2.0, 1.0};
    CHECK(trap::estimate_length_quantile(est, 0.5) == 2);
    CHECK(trap::estimate_length_quantile(est, 0.9) == 4);
  }
  SUBCASE("all-nonpositive falls back to the maximum length") {
    const std::vector<double> est{-1.0, -2.0, 0.0};
    CHECK(trap::estimate_length_quantile(est, 0.9) == 3);
  }
  SUBCASE("single length") {
    CHECK(trap::estimate_length_quantile({5.0}, 0.9) == 1);
  }
}

TEST_CASE("model recovery at huge eps from repeated trajectories") {
  // 60 users walk (0 -> 1 -> 5), 40 walk (10 -> 9). With eps enormous, OUE is
  // essentially noiseless, so the model must localize exactly.
  GridTraceConfig cfg = small_grid_trace(5000.0);
  const CellTrajectory walk_a{0, 1, 5};
  const CellTrajectory walk_b{10, 9};
  Rng base(99);
  std::vector<GridTraceReport> bundles;
  const int l_k = 3;
  for (int i = 0; i < 60; ++i) {
    bundles.push_back(trap::grid_trace_client(walk_a, cfg, l_k, base.split(i)));
  }
  for (int i = 60; i < 100; ++i) {
    bundles.push_back(trap::grid_trace_client(walk_b, cfg, l_k, base.split(i)));
  }
  const SynthesisModel model = trap::aggregate_grid_trace(bundles, cfg, l_k, {});

  REQUIRE(model.length_dist.size() == 8);
  CHECK(model.length_dist[2] == doctest::Approx(0.6).epsilon(0.02));  // length 3
  CHECK(model.length_dist[1] == doctest::Approx(0.4).epsilon(0.02));  // length 2
  REQUIRE(model.begin.size() == 16);
  CHECK(model.begin[0] == doctest::Approx(0.6).epsilon(0.02));
  CHECK(model.begin[10] == doctest::Approx(0.4).epsilon(0.02));

  // Conditional row of cell 0: all mass on "next = 1" (index 1 of 17).
  const std::size_t row = 17;  // d + 1 entries per cell
  CHECK(model.step[0 * row + 1] == doctest::Approx(1.0).epsilon(0.02));
  // Cell 5 is walk_a's last cell: all mass on stop (index 16).
  CHECK(model.step[5 * row + 16] == doctest::Approx(1.0).epsilon(0.02));
  // Cell 10 always moves to 9.
  CHECK(model.step[10 * row + 9] == doctest::Approx(1.0).epsilon(0.02));
  // Cell 9 is walk_b's last cell.
  CHECK(model.step[9 * row + 16] == doctest::Approx(1.0).epsilon(0.02));
  // Cells no walk ever visited have empty rows, which fall back to uniform.
  CHECK(model.degenerate_fallback);
  CHECK(model.reports_removed_by_fim == 0);

  SUBCASE("synthesis then reproduces the walks plus the length crossover") {
    Rng synth_rng(7);
    const trap::TrajectoryDataset out =
        trap::synthesize_trajectories(model, cfg, 50, synth_rng);
    REQUIRE(out.size() == 50);
    CHECK(out.provenance == trap::Provenance::kSynthesized);
    // Length and begin are independent marginals, so the possible outputs are
    // (0,1,5), (10,9), and the crossover (0,1) from length 2 with start 0.
    int a_count = 0;
    int b_count = 0;
    int cross_count = 0;
    for (const auto& t : out.trajectories) {
      if (t == walk_a) ++a_count;
      if (t == walk_b) ++b_count;
      if (t == CellTrajectory{0, 1}) ++cross_count;
    }
    CHECK(a_count + b_count + cross_count == 50);
    CHECK(a_count > 8);    // expectation 0.36 * 50 = 18
    CHECK(b_count > 8);    // expectation 0.40 * 50 = 20
    CHECK(cross_count > 2);  // expectation 0.24 * 50 = 12
  }
}

TEST_CASE("rows sum to one under both cleaning modes") {
  GridTraceConfig cfg = small_grid_trace(1.0);
  Rng base(5);
  std::vector<GridTraceReport> bundles;
  const int l_k = 3;
  for (int i = 0; i < 40; ++i) {
    bundles.push_back(trap::grid_trace_client({0, 1, 5, 6}, cfg, l_k, base.split(i)));
  }
  for (auto mode : {trap::NormalizationMode::kClampRenormalize,
                    trap::NormalizationMode::kMinSubtract}) {
    trap::GridTraceServerOptions opts;
    opts.normalization = mode;
    const SynthesisModel model = trap::aggregate_grid_trace(bundles, cfg, l_k, opts);
    auto sums_to_one = [](const std::vector<double>& row) {
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      return s == doctest::Approx(1.0);
    };
    CHECK(sums_to_one(model.length_dist));
    CHECK(sums_to_one(model.begin));
    const std::size_t row = 17;
    for (std::size_t c = 0; c < 16; ++c) {
      std::vector<double> r(model.step.begin() + static_cast<std::ptrdiff_t>(c * row),
                            model.step.begin() + static_cast<std::ptrdiff_t>((c + 1) * row));
      CAPTURE(c);
      CHECK(sums_to_one(r));
      for (double w : r) CHECK(w >= 0.0);
    }
  }
}

TEST_CASE("a starved conditional row falls back to uniform and is flagged") {
  // One user with a single-cell trajectory: no intra or begin->next mass for
  // most cells; at huge eps the noise is zero so those rows clamp to nothing.
  GridTraceConfig cfg = small_grid_trace(5000.0);
  Rng base(11);
  std::vector<GridTraceReport> bundles{trap::grid_trace_client({3}, cfg, 2, base.split(0))};
  const SynthesisModel model = trap::aggregate_grid_trace(bundles, cfg, 2, {});
  CHECK(model.degenerate_fallback);
  const std::size_t row = 17;
  // Cell 0 received no evidence at all: its row must be uniform.
  for (std::size_t j = 0; j < row; ++j) {
    CHECK(model.step[0 * row + j] == doctest::Approx(1.0 / 17));
  }
}

TEST_CASE("server pipeline runs end to end deterministically") {
  GridTraceConfig cfg = small_grid_trace(1.0);
  Rng base(31);
  std::vector<GridTraceReport> bundles;
  for (int i = 0; i < 30; ++i) {
    bundles.push_back(trap::grid_trace_client({1, 2, 6}, cfg, 3, base.split(i)));
  }
  Rng s1(77);
  Rng s2(77);
  const trap::TrajectoryDataset a = trap::grid_trace_server(bundles, cfg, 3, 20, s1);
  const trap::TrajectoryDataset b = trap::grid_trace_server(bundles, cfg, 3, 20, s2);
  REQUIRE(a.size() == 20);
  CHECK(a.trajectories == b.trajectories);
  for (const auto& t : a.trajectories) {
    CHECK(!t.empty());
    CHECK(static_cast<int>(t.size()) <= cfg.max_len);
    for (trap::Cell c : t) CHECK(cfg.grid.valid_cell(c));
  }
}

TEST_CASE("grid trace config validation") {
  GridTraceConfig cfg = small_grid_trace();
  Rng rng(1);
  cfg.quantile_k = 0.0;
  CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_length_report({0}, cfg, rng)),
                  trap::ConfigError);
  cfg = small_grid_trace();
  cfg.length_budget_frac = 1.0;
  CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_length_report({0}, cfg, rng)),
                  trap::ConfigError);
  cfg = small_grid_trace();
  cfg.max_len = 0;
  CHECK_THROWS_AS(static_cast<void>(trap::grid_trace_length_report({0}, cfg, rng)),
                  trap::ConfigError);
}

TEST_CASE("length report clamps out-of-range lengths into the domain") {
  const GridTraceConfig cfg = small_grid_trace(5000.0);
  const Rng user(13);
  // Length 20 exceeds max_len 8: the report must claim length 8 (index 7).
  CellTrajectory long_traj(20, 0);
  const trap::OueReport r = trap::grid_trace_length_report(long_traj, cfg, user);
  // At huge eps the report is noiseless: exactly one bit, at index 7.
  CHECK(r.ones_count() == 1);
  CHECK(r.bit(7));
}
