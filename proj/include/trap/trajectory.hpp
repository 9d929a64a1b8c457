#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace trap {

// A point is a grid cell (or an abstract POI in toy domains).
using Cell = std::int32_t;

// Ordered sequence of cells. The universal internal trajectory form.
using CellTrajectory = std::vector<Cell>;

enum class Provenance { kReal, kFake, kSynthesized };

struct TrajectoryDataset {
  std::vector<CellTrajectory> trajectories;
  Provenance provenance = Provenance::kReal;

  [[nodiscard]] std::size_t size() const { return trajectories.size(); }
  [[nodiscard]] bool empty() const { return trajectories.empty(); }
};

// FNV-1a over the cell sequence; usable as the hash for unordered maps
// keyed by trajectories.
struct TrajHash {
  std::size_t operator()(const CellTrajectory& t) const {
    std::uint64_t h = 1469598103934665603ull;
    for (Cell c : t) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// "(3,7,1)" — for error messages and logs.
std::string format_trajectory(const CellTrajectory& t);

}  // namespace trap
