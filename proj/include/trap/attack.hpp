#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "trap/defense.hpp"
#include "trap/generator.hpp"
#include "trap/victim.hpp"

namespace trap {

enum class AttackMode { kNone, kIpa, kOpa };

// m fake users for n real users at fake ratio beta = m/(m+n).
int fake_count(double beta, int n);

// Honest expected ones in an OUE report: round-half-up(p + (d-1)*q).
int honest_expected_ones(const OueParams& params);

// IPA: fakes pass through the honest client like real users.
std::vector<CellTrajectory> run_ipa_direct(const FakeTrajectorySet& fakes,
                                           const DirectTrajConfig& cfg, const Rng& base_rng);
std::vector<GridTraceReport> run_ipa_gridtrace(const FakeTrajectorySet& fakes,
                                               const GridTraceConfig& cfg, int l_k,
                                               const Rng& base_rng);

// OPA against the full-trajectory protocol: the identity. Consumes no
// randomness and never touches eps.
std::vector<CellTrajectory> craft_opa_direct(const FakeTrajectorySet& fakes);

// OPA against the report protocol: per report, the fake trajectory's bit is
// set and non-target bits are padded uniformly (without replacement) until
// the ones-count equals the honest expectation. craft_length_report selects
// MGA-style crafting of the length report too; otherwise the length report
// goes through honest OUE.
GridTraceReport craft_opa_oue(const CellTrajectory& fake, const GridTraceConfig& cfg, int l_k,
                              Rng& rng, bool craft_length_report = true);

using ProtocolConfig = std::variant<DirectTrajConfig, GridTraceConfig>;

struct DefenseOptions {
  bool fim = false;
  FimConfig fim_cfg;
  bool normalization = false;  // GridTrace server-side min-subtract cleanup
};

struct RunOutput {
  TrajectoryDataset dataset;
  int l_k = 0;                 // GridTrace only
  int removed_by_fim = 0;      // trajectories (Direct) or reports (GridTrace)
};

// One full collection round: honest users perturb the real trajectories,
// fake reports are produced per mode, the server pipeline (with defenses)
// yields the final dataset. Deterministic for a fixed seed.
RunOutput assemble_poisoned_run(const TrajectoryDataset& real, const FakeTrajectorySet& fakes,
                                AttackMode mode, const ProtocolConfig& protocol,
                                const DefenseOptions& defense, std::uint64_t seed,
                                bool craft_length_report = true);

}  // namespace trap
