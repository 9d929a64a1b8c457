#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <vector>

#include "trap/errors.hpp"
#include "trap/generator.hpp"
#include "trap/grid.hpp"
#include "trap/patterns.hpp"
#include "trap/rng.hpp"

using trap::brute_force_generate;
using trap::CellTrajectory;
using trap::check_constraints;
using trap::count_reachable_trajectories;
using trap::FakeTrajectorySet;
using trap::GeneratorOptions;
using trap::LengthDistribution;
using trap::pick_high;
using trap::PrefixIndex;
using trap::ReachabilityGraph;
using trap::ScoreTable;
using trap::TargetPatternSet;
using trap::trap_generate;

namespace {

// Abstract cells a=0, b=1, c=2, d=3; self loops on. The worked example whose
// every intermediate value is known by hand.
ReachabilityGraph worked_graph() {
  return trap::build_reachability_explicit(
      4, {{0, 1}, {1, 0}, {1, 2}, {1, 3}, {2, 1}, {2, 3}, {3, 1}, {3, 2}}, true);
}

TargetPatternSet worked_patterns() {
  TargetPatternSet tp;
  tp.patterns = {{{0, 1}, 1.0}, {{0, 1, 2}, 2.0}, {{1, 3}, 1.0}};
  tp.k_min = 2;
  tp.k_max = 3;
  return tp;
}

LengthDistribution worked_dist() {
  LengthDistribution d;
  d.counts = {{1, 3}, {2, 5}, {3, 4}};
  return d;
}

std::multiset<CellTrajectory> trajs_of_length(const FakeTrajectorySet& fakes, std::size_t len) {
  std::multiset<CellTrajectory> out;
  for (const auto& t : fakes.trajectories) {
    if (t.size() == len) out.insert(t);
  }
  return out;
}

}  // namespace

TEST_CASE("length distribution totals and max demand") {
  const LengthDistribution d = worked_dist();
  CHECK(d.total() == 12);
  CHECK(d.max_length_with_demand() == 3);
  LengthDistribution e;
  CHECK(e.total() == 0);
  CHECK(e.max_length_with_demand() == 0);
  e.counts = {{4, 0}, {2, 1}};
  CHECK(e.max_length_with_demand() == 2);
}

TEST_CASE("sample_length_distribution is deterministic, bounded, and exact in total") {
  const LengthDistribution d = trap::sample_length_distribution(500, 2, 9, 42);
  CHECK(d.total() == 500);
  for (const auto& [len, cnt] : d.counts) {
    CHECK(len >= 2);
    CHECK(len <= 9);
    CHECK(cnt >= 0);
  }
  const LengthDistribution again = trap::sample_length_distribution(500, 2, 9, 42);
  CHECK(d.counts == again.counts);
  const LengthDistribution other = trap::sample_length_distribution(500, 2, 9, 43);
  CHECK(d.counts != other.counts);  // astronomically unlikely to collide

  SUBCASE("degenerate range puts everything at the single length") {
    const LengthDistribution one = trap::sample_length_distribution(50, 4, 4, 7);
    CHECK(one.counts == std::map<int, int>{{4, 50}});
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(trap::sample_length_distribution(-1, 2, 9, 0), trap::ConfigError);
    CHECK_THROWS_AS(trap::sample_length_distribution(5, 0, 9, 0), trap::ConfigError);
    CHECK_THROWS_AS(trap::sample_length_distribution(5, 9, 2, 0), trap::ConfigError);
    CHECK_THROWS_AS(trap::sample_length_distribution(5, 2, 9, 0, 0.0), trap::ConfigError);
    CHECK_THROWS_AS(trap::sample_length_distribution(5, 2, 9, 0, 2.0, -1.0),
                    trap::ConfigError);
  }
}

TEST_CASE("pick_high greedy fill with repetition cap") {
  const CellTrajectory a{0}, b{1}, c{2};
  const std::vector<CellTrajectory> sorted{a, b, c};
  ScoreTable scores{{a, 5.0}, {b, 3.0}, {c, 1.0}};

  SUBCASE("fills m_l picks, best first, up to max_rep each") {
    const auto r = pick_high(sorted, 5, 2, scores);
    CHECK(r.chosen == std::vector<CellTrajectory>{a, a, b, b, c});
    CHECK_FALSE(r.under_filled);
  }
  SUBCASE("stops exactly at m_l") {
    const auto r = pick_high(sorted, 3, 2, scores);
    CHECK(r.chosen == std::vector<CellTrajectory>{a, a, b});
    CHECK_FALSE(r.under_filled);
  }
  SUBCASE("max_rep=1 takes distinct candidates") {
    const auto r = pick_high(sorted, 2, 1, scores);
    CHECK(r.chosen == std::vector<CellTrajectory>{a, b});
    CHECK_FALSE(r.under_filled);
  }
  SUBCASE("zero demand picks nothing") {
    const auto r = pick_high(sorted, 0, 2, scores);
    CHECK(r.chosen.empty());
    CHECK_FALSE(r.under_filled);
  }
  SUBCASE("too few candidates flags under-fill") {
    const std::vector<CellTrajectory> only_a{a};
    const auto r = pick_high(only_a, 3, 2, scores);
    CHECK(r.chosen == std::vector<CellTrajectory>{a, a});
    CHECK(r.under_filled);
  }
  SUBCASE("empty candidate list under-fills any positive demand") {
    const auto r = pick_high({}, 1, 1, scores);
    CHECK(r.chosen.empty());
    CHECK(r.under_filled);
  }
}

TEST_CASE("delete_hopeless reproduces the worked round-2 pruning exactly") {
  const ReachabilityGraph rps = worked_graph();
  const trap::PrefixSet pref = trap::build_prefix_set(worked_patterns());

  // Candidates of length 2 after round 1 kept {(0), (1)}.
  const CellTrajectory aa{0, 0}, ab{0, 1}, ba{1, 0}, bb{1, 1}, bc{1, 2}, bd{1, 3};
  ScoreTable scores{{aa, 0.0}, {ab, 1.0}, {ba, 0.0}, {bb, 0.0}, {bc, 0.0}, {bd, 1.0}};
  PrefixIndex index;
  index[{0, 1}] = {ab};
  index[{0}] = {aa, ba};   // score 0 each, lex ascending
  index[{1}] = {bb};
  index[{}] = {bd, bc};    // (1,3) scores 1, sorts first

  const PrefixIndex kept = trap::delete_hopeless(/*m_max=*/4, /*max_rep=*/2, rps, scores,
                                                 pref, index);

  REQUIRE(kept.count({0, 1}) == 1);
  CHECK(kept.at({0, 1}) == std::vector<CellTrajectory>{ab});
  REQUIRE(kept.count({0}) == 1);
  // (1,0) survives because the running capacity before it is exactly m_max.
  CHECK(kept.at({0}) == std::vector<CellTrajectory>{aa, ba});
  CHECK(kept.count({1}) == 0);  // (1,1) pruned: dominated by (0,1) capacity 8 > 4
  CHECK(kept.count(CellTrajectory{}) == 0);  // (1,2), (1,3) pruned the same way
}

TEST_CASE("trap_generate reproduces the worked example end to end") {
  const ReachabilityGraph rps = worked_graph();
  const TargetPatternSet tp = worked_patterns();
  const LengthDistribution dist = worked_dist();
  GeneratorOptions opts;
  opts.max_rep = 2;
  opts.seed = 1234;  // lexicographic tie-break: seed must not matter

  const FakeTrajectorySet fakes = trap_generate(rps, tp, dist, opts);

  CHECK(fakes.trajectories.size() == 12);
  CHECK(fakes.per_length == std::map<int, int>{{1, 3}, {2, 5}, {3, 4}});
  CHECK(fakes.requested == std::map<int, int>{{1, 3}, {2, 5}, {3, 4}});
  CHECK_FALSE(fakes.under_filled);
  CHECK(fakes.max_rep == 2);

  // Length 1: all candidates score 0, lexicographic pick twice (0) then (1).
  CHECK(trajs_of_length(fakes, 1) ==
        std::multiset<CellTrajectory>{{0}, {0}, {1}});
  // Length 2: (0,1) and (1,3) score 1 (picked twice each), then (0,0).
  CHECK(trajs_of_length(fakes, 2) ==
        std::multiset<CellTrajectory>{{0, 1}, {0, 1}, {1, 3}, {1, 3}, {0, 0}});
  // Length 3: (0,1,2) scores 3, (0,1,3) scores 2, twice each.
  CHECK(trajs_of_length(fakes, 3) ==
        std::multiset<CellTrajectory>{{0, 1, 2}, {0, 1, 2}, {0, 1, 3}, {0, 1, 3}});

  CHECK(fakes.total_score == doctest::Approx(14.0));
  CHECK(check_constraints(fakes, dist, 2, rps).all());

  SUBCASE("heuristic matches the brute-force optimum here") {
    const FakeTrajectorySet best = brute_force_generate(rps, tp, dist, 2);
    CHECK(best.total_score == doctest::Approx(14.0));
    CHECK(fakes.total_score == doctest::Approx(best.total_score));
    CHECK(check_constraints(best, dist, 2, rps).all());
  }
  SUBCASE("a second run is bit-identical") {
    const FakeTrajectorySet again = trap_generate(rps, tp, dist, opts);
    CHECK(fakes.trajectories == again.trajectories);
    CHECK(fakes.total_score == again.total_score);
  }
}

TEST_CASE("seeded shuffle tie-break stays deterministic per seed and keeps constraints") {
  const ReachabilityGraph rps = worked_graph();
  const TargetPatternSet tp = worked_patterns();
  const LengthDistribution dist = worked_dist();
  GeneratorOptions opts;
  opts.max_rep = 2;
  opts.seed = 77;
  opts.tie_break = trap::TieBreak::kSeededShuffle;

  const FakeTrajectorySet a = trap_generate(rps, tp, dist, opts);
  const FakeTrajectorySet b = trap_generate(rps, tp, dist, opts);
  CHECK(a.trajectories == b.trajectories);
  CHECK(check_constraints(a, dist, 2, rps).all());
  // Shuffle only reorders ties; the greedy total cannot change.
  CHECK(a.total_score == doctest::Approx(14.0));
}

TEST_CASE("generated sets satisfy the three constraints on random grid instances") {
  // 3x3 grid, 8-neighbour moves plus self loops: every cell can always
  // extend, so no demand can under-fill.
  trap::GridSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.min_lat = spec.min_lon = 0.0;
  spec.max_lat = spec.max_lon = 3.0;
  const ReachabilityGraph rps = trap::build_reachability(spec, trap::Neighbors8{}, true);

  trap::Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    trap::Rng trial_rng = rng.split(static_cast<std::uint64_t>(trial));

    // Random target patterns: valid walks of length 2..3.
    TargetPatternSet tp;
    tp.k_min = 2;
    tp.k_max = 3;
    while (tp.patterns.size() < 3) {
      const int len = static_cast<int>(trial_rng.uniform_int(2, 3));
      CellTrajectory walk{static_cast<trap::Cell>(trial_rng.uniform_index(9))};
      while (static_cast<int>(walk.size()) < len) {
        const auto& nbrs = rps.reachable_from(walk.back());
        walk.push_back(nbrs[trial_rng.uniform_index(nbrs.size())]);
      }
      const bool dup = std::any_of(tp.patterns.begin(), tp.patterns.end(),
                                   [&](const auto& p) { return p.cells == walk; });
      if (!dup) tp.patterns.push_back({walk, 1.0 + static_cast<double>(trial % 3)});
    }

    LengthDistribution dist;
    for (int len = 1; len <= 4; ++len) {
      dist.counts[len] = static_cast<int>(trial_rng.uniform_int(0, 5));
    }
    if (dist.total() == 0) dist.counts[2] = 1;

    GeneratorOptions opts;
    opts.max_rep = 1 + static_cast<int>(trial_rng.uniform_index(3));
    opts.seed = trial_rng.next_u64();

    const FakeTrajectorySet fakes = trap_generate(rps, tp, dist, opts);
    const trap::ConstraintCheck check = check_constraints(fakes, dist, opts.max_rep, rps);
    CAPTURE(trial);
    CHECK(check.counts_match);
    CHECK(check.repetition_ok);
    CHECK(check.reachability_ok);
    CHECK(fakes.total_score >= 0.0);
  }
}

TEST_CASE("under-fill on a sink domain") {
  // 0 -> 1, and 1 is a dead end: only one trajectory of length 2 exists.
  const ReachabilityGraph rps = trap::build_reachability_explicit(2, {{0, 1}}, false);
  TargetPatternSet tp;
  tp.patterns = {{{0, 1}, 1.0}};
  tp.k_min = 2;
  tp.k_max = 2;
  LengthDistribution dist;
  dist.counts = {{2, 3}};

  GeneratorOptions opts;
  opts.max_rep = 1;

  SUBCASE("kError throws with the offending length") {
    try {
      trap_generate(rps, tp, dist, opts);
      FAIL("expected UnderfillError");
    } catch (const trap::UnderfillError& e) {
      CHECK(e.length() == 2);
    }
  }
  SUBCASE("kWarn flags the result and keeps what it found") {
    opts.underfill = trap::UnderfillPolicy::kWarn;
    const FakeTrajectorySet fakes = trap_generate(rps, tp, dist, opts);
    CHECK(fakes.under_filled);
    CHECK(fakes.per_length.at(2) == 1);
    CHECK(fakes.trajectories == std::vector<CellTrajectory>{{0, 1}});
  }
  SUBCASE("raising max_rep fills the demand instead") {
    opts.max_rep = 3;
    const FakeTrajectorySet fakes = trap_generate(rps, tp, dist, opts);
    CHECK_FALSE(fakes.under_filled);
    CHECK(fakes.trajectories ==
          std::vector<CellTrajectory>{{0, 1}, {0, 1}, {0, 1}});
  }
}

TEST_CASE("count_reachable_trajectories dynamic program") {
  const ReachabilityGraph rps = worked_graph();
  CHECK(count_reachable_trajectories(rps, 1, 1'000'000) == 4);
  CHECK(count_reachable_trajectories(rps, 2, 1'000'000) == 12);
  CHECK(count_reachable_trajectories(rps, 3, 1'000'000) == 38);
  // Saturation: the true count 12 exceeds cap 10, reported as cap+1.
  CHECK(count_reachable_trajectories(rps, 2, 10) == 11);
  CHECK(count_reachable_trajectories(rps, 1, 10) == 4);
}

TEST_CASE("brute force refuses demands beyond the enumeration cap") {
  const ReachabilityGraph rps = worked_graph();
  const TargetPatternSet tp = worked_patterns();
  LengthDistribution dist;
  dist.counts = {{2, 1}};
  CHECK_THROWS_AS(brute_force_generate(rps, tp, dist, 1, /*cap=*/10), trap::CapacityError);
  // Lengths without demand are not counted against the cap.
  dist.counts = {{1, 2}, {2, 0}};
  CHECK_NOTHROW(brute_force_generate(rps, tp, dist, 1, /*cap=*/10));
}

TEST_CASE("brute force under-fills loudly") {
  const ReachabilityGraph rps = trap::build_reachability_explicit(2, {{0, 1}}, false);
  TargetPatternSet tp;
  tp.patterns = {{{0, 1}, 1.0}};
  tp.k_min = 2;
  tp.k_max = 2;
  LengthDistribution dist;
  dist.counts = {{2, 2}};
  CHECK_THROWS_AS(brute_force_generate(rps, tp, dist, 1), trap::UnderfillError);
}

TEST_CASE("check_constraints detects each violation kind") {
  const ReachabilityGraph rps = worked_graph();
  LengthDistribution dist;
  dist.counts = {{2, 2}};

  FakeTrajectorySet fakes;
  fakes.trajectories = {{0, 1}, {1, 3}};
  CHECK(check_constraints(fakes, dist, 1, rps).all());

  SUBCASE("count mismatch, too few") {
    fakes.trajectories = {{0, 1}};
    CHECK_FALSE(check_constraints(fakes, dist, 1, rps).counts_match);
  }
  SUBCASE("count mismatch, wrong length") {
    fakes.trajectories = {{0, 1}, {0, 1, 2}};
    CHECK_FALSE(check_constraints(fakes, dist, 1, rps).counts_match);
  }
  SUBCASE("repetition violation") {
    fakes.trajectories = {{0, 1}, {0, 1}};
    const auto check = check_constraints(fakes, dist, 1, rps);
    CHECK(check.counts_match);
    CHECK_FALSE(check.repetition_ok);
  }
  SUBCASE("reachability violation") {
    fakes.trajectories = {{0, 1}, {0, 3}};  // a -> d is not an edge
    CHECK_FALSE(check_constraints(fakes, dist, 1, rps).reachability_ok);
  }
}
