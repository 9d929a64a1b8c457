#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "trap/trajectory.hpp"

namespace trap {

// Uniform grid over a lat/lon bounding box. Cell ids are row-major:
// id = row * cols + col, row 0 at min_lat, col 0 at min_lon.
struct GridSpec {
  int rows = 1;
  int cols = 1;
  double min_lat = 0.0;
  double max_lat = 1.0;
  double min_lon = 0.0;
  double max_lon = 1.0;

  // Throws ConfigError on non-positive dimensions or a degenerate box.
  void validate() const;

  [[nodiscard]] int cell_count() const { return rows * cols; }
  [[nodiscard]] Cell cell_id(int row, int col) const { return row * cols + col; }
  [[nodiscard]] int row_of(Cell c) const { return c / cols; }
  [[nodiscard]] int col_of(Cell c) const { return c % cols; }
  [[nodiscard]] bool valid_cell(Cell c) const { return c >= 0 && c < cell_count(); }

  // Containing cell for a point; throws DataError outside the box.
  // Points on the max edge fall into the last row/col.
  [[nodiscard]] Cell cell_of(double lat, double lon) const;

  // Cell center in (lat, lon).
  [[nodiscard]] std::pair<double, double> cell_center(Cell c) const;

  // Euclidean distance between cells in (row, col) units.
  [[nodiscard]] double grid_distance(Cell a, Cell b) const;
};

// Per-cell ordered set of reachable next cells.
struct ReachabilityGraph {
  std::vector<std::vector<Cell>> rps;

  [[nodiscard]] int domain_size() const { return static_cast<int>(rps.size()); }
  [[nodiscard]] const std::vector<Cell>& reachable_from(Cell c) const { return rps[c]; }
  [[nodiscard]] bool reachable(Cell a, Cell b) const;
  [[nodiscard]] bool valid_trajectory(const CellTrajectory& t) const;
};

struct Neighbors8 {};
struct SpeedLimit {
  double speed;          // box coordinate units per time unit
  double time_interval;  // time units between consecutive points
};
struct ExplicitEdges {
  std::vector<std::pair<Cell, Cell>> edges;
};
using ReachMode = std::variant<Neighbors8, SpeedLimit, ExplicitEdges>;

// Builds rps for every cell of the grid. self_loops controls whether a cell
// reaches itself (the distance-0 case is excluded from the speed predicate so
// the flag is authoritative in every mode). Explicit edges outside the domain
// throw ConfigError.
ReachabilityGraph build_reachability(const GridSpec& spec, const ReachMode& mode,
                                     bool self_loops);

// Explicit graph over an abstract domain of `domain_size` points (toy worlds
// without a grid). Stored verbatim; self_loops appends c to rps[c].
ReachabilityGraph build_reachability_explicit(int domain_size,
                                              const std::vector<std::pair<Cell, Cell>>& edges,
                                              bool self_loops);

// Maps raw (lat, lon) points to cells, collapses consecutive duplicates, and
// inserts the straight-line cells between centers whenever two consecutive
// cells are not 8-neighbors, so the result always satisfies the neighbors8
// constraint. Throws DataError for points outside the box.
CellTrajectory discretize(const std::vector<std::pair<double, double>>& raw,
                          const GridSpec& spec);

}  // namespace trap
