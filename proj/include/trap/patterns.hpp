#pragma once

#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trap/grid.hpp"
#include "trap/trajectory.hpp"

namespace trap {

struct ScoredPattern {
  CellTrajectory cells;
  double score = 0.0;
};

// Attacker-chosen target patterns with scores.
struct TargetPatternSet {
  std::vector<ScoredPattern> patterns;
  int k_min = 1;
  int k_max = 1;

  // Throws ConfigError on: empty set, duplicate patterns, negative scores,
  // lengths outside [k_min, k_max], or a pattern whose adjacent pair is not
  // reachable in rps (patterns the generator could never emit are rejected
  // up front).
  void validate(const ReachabilityGraph& rps) const;
};

// Number of contiguous subarrays of `traj` equal to `tp`; 0 when |tp| > |traj|.
int count_pattern(const CellTrajectory& tp, const CellTrajectory& traj);

// Sum over patterns of score * count_pattern.
double traj_score(const CellTrajectory& traj, const TargetPatternSet& tp_set);

// All proper prefixes of all target patterns, deduplicated, including ().
// `ordered` is sorted longest-first (lex ascending within a length), the
// processing order the pruning step wants.
struct PrefixSet {
  std::vector<CellTrajectory> ordered;
  std::unordered_set<CellTrajectory, TrajHash> lookup;
  int max_len = 0;

  [[nodiscard]] bool contains(const CellTrajectory& p) const {
    return lookup.count(p) > 0;
  }
};

PrefixSet build_prefix_set(const TargetPatternSet& tp_set);

// Longest element of PREF that is a suffix of `traj`. Always defined: ()
// matches everything.
CellTrajectory prefix_category(const CellTrajectory& traj, const PrefixSet& pref);

}  // namespace trap
