#include "trap/generator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>

#include "trap/errors.hpp"

namespace trap {

int LengthDistribution::total() const {
  int sum = 0;
  for (const auto& [len, count] : counts) sum += count;
  return sum;
}

int LengthDistribution::max_length_with_demand() const {
  int best = 0;
  for (const auto& [len, count] : counts) {
    if (count > 0) best = std::max(best, len);
  }
  return best;
}

LengthDistribution sample_length_distribution(int m, int l_min, int l_max,
                                              std::uint64_t seed, double mean_divisor,
                                              double std_divisor) {
  if (m < 0) throw ConfigError("fake count m must be non-negative");
  if (l_min < 1 || l_max < l_min) {
    throw ConfigError("length bounds must satisfy 1 <= l_min <= l_max");
  }
  if (mean_divisor <= 0.0 || std_divisor <= 0.0) {
    throw ConfigError("length distribution divisors must be positive");
  }
  const double mean = static_cast<double>(l_min + l_max) / mean_divisor;
  const double sd = static_cast<double>(l_max - l_min) / std_divisor;
  Rng rng(seed);
  LengthDistribution dist;
  for (int i = 0; i < m; ++i) {
    const double draw = rng.normal(mean, sd);
    int len = static_cast<int>(std::lround(draw));
    len = std::clamp(len, l_min, l_max);
    ++dist.counts[len];
  }
  return dist;
}

namespace {

// Candidate with its score carried alongside so extension is O(k_max) via
// suffix lookups instead of a full rescan.
struct Candidate {
  CellTrajectory traj;
  double score = 0.0;
};

// score(pattern) keyed by the pattern itself, split per pattern length so an
// extended trajectory only probes suffixes of lengths k_min..k_max.
struct PatternLookup {
  std::unordered_map<CellTrajectory, double, TrajHash> by_pattern;
  int k_min = 1;
  int k_max = 1;

  explicit PatternLookup(const TargetPatternSet& tp_set)
      : k_min(tp_set.k_min), k_max(tp_set.k_max) {
    for (const auto& sp : tp_set.patterns) by_pattern.emplace(sp.cells, sp.score);
  }

  // Total score of pattern occurrences ending at the last position of traj.
  [[nodiscard]] double tail_delta(const CellTrajectory& traj) const {
    double delta = 0.0;
    const int longest = std::min<int>(k_max, static_cast<int>(traj.size()));
    for (int len = k_min; len <= longest; ++len) {
      CellTrajectory suffix(traj.end() - len, traj.end());
      auto it = by_pattern.find(suffix);
      if (it != by_pattern.end()) delta += it->second;
    }
    return delta;
  }
};

void order_candidates(std::vector<Candidate>& cands, TieBreak tie_break, Rng* round_rng) {
  if (tie_break == TieBreak::kSeededShuffle && round_rng != nullptr) {
    round_rng->shuffle(cands);
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  } else {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.traj < b.traj;
    });
  }
}

int demand_at(const LengthDistribution& dist, int len) {
  auto it = dist.counts.find(len);
  return it == dist.counts.end() ? 0 : it->second;
}

int max_demand_after(const LengthDistribution& dist, int len) {
  int best = 0;
  for (const auto& [l, count] : dist.counts) {
    if (l > len && count > 0) best = std::max(best, count);
  }
  return best;
}

void handle_underfill(int length, int got, int wanted, UnderfillPolicy policy,
                      FakeTrajectorySet& result) {
  if (policy == UnderfillPolicy::kError) {
    throw UnderfillError("only " + std::to_string(got) + " of " + std::to_string(wanted) +
                             " fake trajectories of length " + std::to_string(length) +
                             " could be generated",
                         length);
  }
  result.under_filled = true;
}

}  // namespace

PickResult pick_high(const std::vector<CellTrajectory>& sorted_candidates, int m_l,
                     int max_rep, const ScoreTable& scores) {
  assert(max_rep >= 1);
#ifndef NDEBUG
  for (std::size_t i = 1; i < sorted_candidates.size(); ++i) {
    assert(scores.at(sorted_candidates[i - 1]) >= scores.at(sorted_candidates[i]));
  }
#else
  (void)scores;
#endif
  PickResult result;
  if (m_l <= 0) return result;
  const int max_index = m_l / max_rep + 1;  // 1-based, floor division
  for (int j = 1; j <= max_index; ++j) {
    if (static_cast<std::size_t>(j) > sorted_candidates.size()) break;
    for (int times = 1; times <= max_rep; ++times) {
      if (static_cast<int>(result.chosen.size()) >= m_l) break;
      result.chosen.push_back(sorted_candidates[j - 1]);
    }
  }
  result.under_filled = static_cast<int>(result.chosen.size()) < m_l;
  return result;
}

PrefixIndex delete_hopeless(int m_max, int max_rep, const ReachabilityGraph& rps,
                            const ScoreTable& scores, const PrefixSet& pref,
                            const PrefixIndex& index) {
  // Capacity of one kept trajectory: how many length-(i+1) trajectories it can
  // spawn, counting repetitions.
  const auto capacity = [&](const CellTrajectory& traj) {
    return static_cast<long long>(rps.reachable_from(traj.back()).size()) * max_rep;
  };

  PrefixIndex selected;
  static const std::vector<CellTrajectory> kEmptyBucket;
  const auto bucket_of = [&](const CellTrajectory& u) -> const std::vector<CellTrajectory>& {
    auto it = index.find(u);
    return it == index.end() ? kEmptyBucket : it->second;
  };

  // Longest-first order guarantees every ancestor's selected list is final
  // before any descendant consults it.
  for (const auto& u : pref.ordered) {
    const auto& bucket = bucket_of(u);
    if (bucket.empty()) continue;

    // Ancestors: strictly longer PREF categories that end with u.
    std::vector<const CellTrajectory*> ancestors;
    for (const auto& v : pref.ordered) {
      if (v.size() <= u.size()) break;  // ordered longest-first
      if (std::equal(u.rbegin(), u.rend(), v.rbegin())) ancestors.push_back(&v);
    }

    auto& kept = selected[u];
    if (!ancestors.empty()) {
      // Best score among the ancestors' full buckets (their sorted heads).
      double best_ancestor = -std::numeric_limits<double>::infinity();
      for (const auto* v : ancestors) {
        const auto& ancestor_bucket = bucket_of(*v);
        if (!ancestor_bucket.empty()) {
          best_ancestor = std::max(best_ancestor, scores.at(ancestor_bucket.front()));
        }
      }
      for (const auto& traj : bucket) {
        const double sc = scores.at(traj);
        if (sc > best_ancestor) {
          kept.push_back(traj);
          continue;
        }
        // Every selected ancestor trajectory scoring at least sc out-competes
        // traj's whole extension tree; count the slots they can fill.
        long long accumulate = 0;
        for (const auto* v : ancestors) {
          auto sel = selected.find(*v);
          if (sel == selected.end()) continue;
          for (const auto& rival : sel->second) {
            if (scores.at(rival) >= sc) accumulate += capacity(rival);
          }
        }
        if (accumulate <= m_max) kept.push_back(traj);
      }
    } else {
      // No ancestors: keep in score order while the kept capacity still fits
      // under the largest remaining demand.
      long long accumulate = 0;
      for (const auto& traj : bucket) {
        if (accumulate <= m_max) {
          accumulate += capacity(traj);
          kept.push_back(traj);
        }
      }
    }
    if (kept.empty()) selected.erase(u);
  }
  return selected;
}

FakeTrajectorySet trap_generate(const ReachabilityGraph& rps, const TargetPatternSet& tp_set,
                                const LengthDistribution& dist, const GeneratorOptions& opts) {
  if (opts.max_rep < 1) throw ConfigError("max_rep must be at least 1");
  for (const auto& [len, count] : dist.counts) {
    if (len < 1) throw ConfigError("length distribution contains a non-positive length");
    if (count < 0) throw ConfigError("length distribution contains a negative count");
  }
  tp_set.validate(rps);

  FakeTrajectorySet result;
  result.requested = dist.counts;
  result.max_rep = opts.max_rep;
  result.seed = opts.seed;

  const int l_max = dist.max_length_with_demand();
  if (l_max == 0) return result;

  const PrefixSet pref = build_prefix_set(tp_set);
  const PatternLookup lookup(tp_set);
  Rng base_rng(opts.seed);

  // Round 1 candidates: every single-cell trajectory.
  std::vector<Candidate> cands;
  cands.reserve(rps.domain_size());
  for (Cell c = 0; c < rps.domain_size(); ++c) {
    Candidate cand{{c}, 0.0};
    cand.score = lookup.tail_delta(cand.traj);
    cands.push_back(std::move(cand));
  }

  for (int len = 1; len <= l_max; ++len) {
    if (len > 1) {
      // Extend every surviving candidate by one reachable cell.
      std::vector<Candidate> next;
      for (const auto& cand : cands) {
        for (Cell c : rps.reachable_from(cand.traj.back())) {
          Candidate child;
          child.traj = cand.traj;
          child.traj.push_back(c);
          child.score = cand.score + lookup.tail_delta(child.traj);
          next.push_back(std::move(child));
        }
      }
      cands = std::move(next);
    }

    Rng round_rng = base_rng.split(static_cast<std::uint64_t>(len));
    order_candidates(cands, opts.tie_break, &round_rng);

    ScoreTable scores;
    scores.reserve(cands.size());
    std::vector<CellTrajectory> flat;
    flat.reserve(cands.size());
    for (const auto& cand : cands) {
      scores.emplace(cand.traj, cand.score);
      flat.push_back(cand.traj);
    }

    const int m_l = demand_at(dist, len);
    if (m_l > 0) {
      PickResult picked = pick_high(flat, m_l, opts.max_rep, scores);
      if (picked.under_filled) {
        handle_underfill(len, static_cast<int>(picked.chosen.size()), m_l, opts.underfill,
                         result);
      }
      for (auto& traj : picked.chosen) {
        result.total_score += scores.at(traj);
        ++result.per_length[len];
        result.trajectories.push_back(std::move(traj));
      }
      if (result.per_length.count(len) == 0) result.per_length[len] = 0;
    }

    if (len < l_max) {
      PrefixIndex buckets;
      for (const auto& traj : flat) {
        buckets[prefix_category(traj, pref)].push_back(traj);
      }
      const int m_max = max_demand_after(dist, len);
      PrefixIndex kept = delete_hopeless(m_max, opts.max_rep, rps, scores, pref, buckets);

      std::vector<Candidate> survivors;
      // Walk categories in the deterministic PREF order so the surviving list
      // is reproducible; per-bucket order is already the sorted round order.
      for (const auto& u : pref.ordered) {
        auto it = kept.find(u);
        if (it == kept.end()) continue;
        for (const auto& traj : it->second) {
          survivors.push_back(Candidate{traj, scores.at(traj)});
        }
      }
      cands = std::move(survivors);
    }
  }
  return result;
}

std::uint64_t count_reachable_trajectories(const ReachabilityGraph& rps, int length,
                                           std::uint64_t cap) {
  if (length < 1) return 0;
  const std::uint64_t saturated =
      cap == std::numeric_limits<std::uint64_t>::max() ? cap : cap + 1;
  const auto add_sat = [saturated](std::uint64_t a, std::uint64_t b) {
    return a >= saturated || b >= saturated - a ? saturated : a + b;
  };
  // ending[c] = number of valid trajectories of the current length ending at c.
  std::vector<std::uint64_t> ending(rps.domain_size(), 1);
  for (int step = 2; step <= length; ++step) {
    std::vector<std::uint64_t> next(rps.domain_size(), 0);
    for (Cell c = 0; c < rps.domain_size(); ++c) {
      if (ending[c] == 0) continue;
      for (Cell to : rps.reachable_from(c)) {
        next[to] = add_sat(next[to], ending[c]);
      }
    }
    ending = std::move(next);
  }
  std::uint64_t total = 0;
  for (std::uint64_t e : ending) total = add_sat(total, e);
  return total;
}

namespace {

void enumerate_trajectories(const ReachabilityGraph& rps, int length, CellTrajectory& current,
                            std::vector<CellTrajectory>& out) {
  if (static_cast<int>(current.size()) == length) {
    out.push_back(current);
    return;
  }
  if (current.empty()) {
    for (Cell c = 0; c < rps.domain_size(); ++c) {
      current.push_back(c);
      enumerate_trajectories(rps, length, current, out);
      current.pop_back();
    }
  } else {
    for (Cell c : rps.reachable_from(current.back())) {
      current.push_back(c);
      enumerate_trajectories(rps, length, current, out);
      current.pop_back();
    }
  }
}

}  // namespace

FakeTrajectorySet brute_force_generate(const ReachabilityGraph& rps,
                                       const TargetPatternSet& tp_set,
                                       const LengthDistribution& dist, int max_rep,
                                       std::uint64_t cap) {
  if (max_rep < 1) throw ConfigError("max_rep must be at least 1");
  tp_set.validate(rps);

  // Refuse before enumerating: the DP count is cheap, the enumeration is not.
  for (const auto& [len, count] : dist.counts) {
    if (count <= 0) continue;
    const std::uint64_t n = count_reachable_trajectories(rps, len, cap);
    if (n > cap) {
      throw CapacityError("length " + std::to_string(len) + " has more than " +
                          std::to_string(cap) +
                          " reachable trajectories; exhaustive search refused");
    }
  }

  FakeTrajectorySet result;
  result.requested = dist.counts;
  result.max_rep = max_rep;

  for (const auto& [len, m_l] : dist.counts) {
    if (m_l <= 0) continue;
    std::vector<CellTrajectory> all;
    CellTrajectory current;
    enumerate_trajectories(rps, len, current, all);

    ScoreTable scores;
    scores.reserve(all.size());
    for (const auto& traj : all) scores.emplace(traj, traj_score(traj, tp_set));
    std::sort(all.begin(), all.end(), [&](const CellTrajectory& a, const CellTrajectory& b) {
      const double sa = scores.at(a);
      const double sb = scores.at(b);
      if (sa != sb) return sa > sb;
      return a < b;
    });

    PickResult picked = pick_high(all, m_l, max_rep, scores);
    if (picked.under_filled) {
      throw UnderfillError("exhaustive search found only " +
                               std::to_string(picked.chosen.size()) + " of " +
                               std::to_string(m_l) + " trajectories of length " +
                               std::to_string(len),
                           len);
    }
    for (auto& traj : picked.chosen) {
      result.total_score += scores.at(traj);
      ++result.per_length[len];
      result.trajectories.push_back(std::move(traj));
    }
  }
  return result;
}

ConstraintCheck check_constraints(const FakeTrajectorySet& fakes, const LengthDistribution& dist,
                                  int max_rep, const ReachabilityGraph& rps) {
  ConstraintCheck check;

  std::map<int, int> realized;
  for (const auto& traj : fakes.trajectories) ++realized[static_cast<int>(traj.size())];
  check.counts_match = true;
  for (const auto& [len, count] : dist.counts) {
    auto it = realized.find(len);
    const int got = it == realized.end() ? 0 : it->second;
    if (got != count) check.counts_match = false;
  }
  for (const auto& [len, count] : realized) {
    if (count > 0 && demand_at(dist, len) == 0) check.counts_match = false;
  }

  std::unordered_map<CellTrajectory, int, TrajHash> occurrences;
  for (const auto& traj : fakes.trajectories) ++occurrences[traj];
  check.repetition_ok = true;
  for (const auto& [traj, count] : occurrences) {
    if (count > max_rep) check.repetition_ok = false;
  }

  check.reachability_ok = true;
  for (const auto& traj : fakes.trajectories) {
    if (!rps.valid_trajectory(traj)) check.reachability_ok = false;
  }
  return check;
}

}  // namespace trap
