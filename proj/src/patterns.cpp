#include "trap/patterns.hpp"

#include <algorithm>
#include <unordered_set>

#include "trap/errors.hpp"

namespace trap {

void TargetPatternSet::validate(const ReachabilityGraph& rps) const {
  if (patterns.empty()) throw ConfigError("target pattern set is empty");
  std::unordered_set<CellTrajectory, TrajHash> seen;
  for (const auto& sp : patterns) {
    if (sp.cells.empty()) throw ConfigError("target pattern is empty");
    const int len = static_cast<int>(sp.cells.size());
    if (len < k_min || len > k_max) {
      throw ConfigError("target pattern " + format_trajectory(sp.cells) +
                        " has length outside [k_min, k_max]");
    }
    if (sp.score < 0.0) {
      throw ConfigError("target pattern " + format_trajectory(sp.cells) +
                        " has a negative score");
    }
    if (!seen.insert(sp.cells).second) {
      throw ConfigError("duplicate target pattern " + format_trajectory(sp.cells));
    }
    if (!rps.valid_trajectory(sp.cells)) {
      throw ConfigError("target pattern " + format_trajectory(sp.cells) +
                        " violates the reachability constraint");
    }
  }
}

int count_pattern(const CellTrajectory& tp, const CellTrajectory& traj) {
  const std::size_t k = tp.size();
  if (k == 0 || k > traj.size()) return 0;
  int num = 0;
  for (std::size_t i = 0; i + k <= traj.size(); ++i) {
    if (std::equal(tp.begin(), tp.end(), traj.begin() + i)) ++num;
  }
  return num;
}

double traj_score(const CellTrajectory& traj, const TargetPatternSet& tp_set) {
  double score = 0.0;
  for (const auto& sp : tp_set.patterns) {
    score += sp.score * count_pattern(sp.cells, traj);
  }
  return score;
}

PrefixSet build_prefix_set(const TargetPatternSet& tp_set) {
  PrefixSet pref;
  for (const auto& sp : tp_set.patterns) {
    for (std::size_t len = 0; len < sp.cells.size(); ++len) {  // proper prefixes only
      CellTrajectory p(sp.cells.begin(), sp.cells.begin() + len);
      if (pref.lookup.insert(p).second) {
        pref.ordered.push_back(std::move(p));
        pref.max_len = std::max(pref.max_len, static_cast<int>(len));
      }
    }
  }
  // Longest first; ancestors (strict suffix extensions) always precede their
  // descendants in this order. Lex within a length for determinism.
  std::sort(pref.ordered.begin(), pref.ordered.end(),
            [](const CellTrajectory& a, const CellTrajectory& b) {
              if (a.size() != b.size()) return a.size() > b.size();
              return a < b;
            });
  return pref;
}

CellTrajectory prefix_category(const CellTrajectory& traj, const PrefixSet& pref) {
  const int longest = std::min<int>(pref.max_len, static_cast<int>(traj.size()));
  for (int len = longest; len > 0; --len) {
    CellTrajectory suffix(traj.end() - len, traj.end());
    if (pref.contains(suffix)) return suffix;
  }
  return {};
}

}  // namespace trap
