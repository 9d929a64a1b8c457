#include <string>
#include <vector>

#include "trap/errors.hpp"
#include "trap/victim.hpp"

namespace trap {

CellTrajectory direct_traj_perturb(const CellTrajectory& traj, const DirectTrajConfig& cfg,
                                   Rng& rng) {
  cfg.grid.validate();
  if (traj.empty()) throw DataError("cannot perturb an empty trajectory");
  if (cfg.eps <= 0.0) throw ConfigError("privacy budget eps must be positive");

  const int d = cfg.grid.cell_count();
  const double point_eps = cfg.eps / static_cast<double>(traj.size());

  CellTrajectory out;
  out.reserve(traj.size());
  std::vector<double> utilities(d);
  for (Cell true_cell : traj) {
    if (!cfg.grid.valid_cell(true_cell)) {
      throw DataError("trajectory cell " + std::to_string(true_cell) +
                      " outside the grid domain");
    }
    for (Cell candidate = 0; candidate < d; ++candidate) {
      utilities[candidate] = -cfg.grid.grid_distance(true_cell, candidate);
    }
    out.push_back(em_sample(utilities, point_eps, rng));
  }
  return out;
}

}  // namespace trap
