#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <vector>

#include "trap/grid.hpp"
#include "trap/patterns.hpp"
#include "trap/rng.hpp"
#include "trap/trajectory.hpp"

namespace trap {

// Requested number of fake trajectories per length.
struct LengthDistribution {
  std::map<int, int> counts;  // length -> m_{L=length}

  [[nodiscard]] int total() const;
  [[nodiscard]] int max_length_with_demand() const;  // largest length with count > 0, or 0
};

// Draws m lengths from N(mean, std) with mean = (L_min+L_max)/mean_divisor and
// std = (L_max-L_min)/std_divisor, rounds to nearest, clamps to [L_min, L_max].
// The default divisors (2, 5) are the standard configuration; others exist for
// distribution-mismatch studies.
LengthDistribution sample_length_distribution(int m, int l_min, int l_max,
                                              std::uint64_t seed,
                                              double mean_divisor = 2.0,
                                              double std_divisor = 5.0);

enum class UnderfillPolicy { kError, kWarn };
enum class TieBreak { kLexicographic, kSeededShuffle };

struct GeneratorOptions {
  int max_rep = 1;
  std::uint64_t seed = 0;
  UnderfillPolicy underfill = UnderfillPolicy::kError;
  TieBreak tie_break = TieBreak::kLexicographic;
};

struct FakeTrajectorySet {
  std::vector<CellTrajectory> trajectories;
  std::map<int, int> per_length;     // realized counts
  std::map<int, int> requested;      // the input distribution
  int max_rep = 1;
  std::uint64_t seed = 0;
  double total_score = 0.0;
  bool under_filled = false;
};

using ScoreTable = std::unordered_map<CellTrajectory, double, TrajHash>;

// Candidate bucket index: category -> candidates sorted score-desc
// (lex-asc tie-break).
using PrefixIndex = std::unordered_map<CellTrajectory, std::vector<CellTrajectory>, TrajHash>;

struct PickResult {
  std::vector<CellTrajectory> chosen;
  bool under_filled = false;
};

// Greedy selection: candidates in score-descending order, each taken up to
// max_rep times, until m_l picks. Candidates must already be sorted.
PickResult pick_high(const std::vector<CellTrajectory>& sorted_candidates, int m_l,
                     int max_rep, const ScoreTable& scores);

// Prunes candidates that provably cannot reach a top-m_max extension set.
// `index` buckets exactly the candidates by category, each bucket sorted.
// Returns the surviving candidates grouped per category (the kept lists).
PrefixIndex delete_hopeless(int m_max, int max_rep, const ReachabilityGraph& rps,
                            const ScoreTable& scores, const PrefixSet& pref,
                            const PrefixIndex& index);

// The prefix-suffix heuristic: extend, categorize, score, pick, prune, per
// length round. Deterministic for a fixed seed. Throws UnderfillError when a
// demanded length cannot be filled (unless policy is kWarn, which flags the
// result instead).
FakeTrajectorySet trap_generate(const ReachabilityGraph& rps, const TargetPatternSet& tp_set,
                                const LengthDistribution& dist, const GeneratorOptions& opts);

inline constexpr std::uint64_t kBruteForceCapPerLength = 5'000'000;

// Number of reachability-valid trajectories of exactly `length`, saturating
// at `cap` + 1 (a cheap DP; used to refuse enumeration before it starts).
std::uint64_t count_reachable_trajectories(const ReachabilityGraph& rps, int length,
                                           std::uint64_t cap);

// Exhaustive per-length optimum: enumerate, sort by score descending, fill
// respecting max_rep. Throws CapacityError when any demanded length exceeds
// the enumeration cap. The oracle against which the heuristic is judged.
FakeTrajectorySet brute_force_generate(const ReachabilityGraph& rps,
                                       const TargetPatternSet& tp_set,
                                       const LengthDistribution& dist, int max_rep,
                                       std::uint64_t cap = kBruteForceCapPerLength);

// Constraint suite over a fake set: per-length counts match the request
// (Eq. 3), no trajectory occurs more than max_rep times (Eq. 4), every
// adjacent pair is reachable (Eq. 5).
struct ConstraintCheck {
  bool counts_match = false;
  bool repetition_ok = false;
  bool reachability_ok = false;
  [[nodiscard]] bool all() const { return counts_match && repetition_ok && reachability_ok; }
};
ConstraintCheck check_constraints(const FakeTrajectorySet& fakes, const LengthDistribution& dist,
                                  int max_rep, const ReachabilityGraph& rps);

}  // namespace trap
