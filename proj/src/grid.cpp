#include "trap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "trap/errors.hpp"
#include "trap/trajectory.hpp"

namespace trap {

std::string format_trajectory(const CellTrajectory& t) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0) out << ',';
    out << t[i];
  }
  out << ')';
  return out.str();
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("grid dimensions must be positive");
  if (!(min_lat < max_lat) || !(min_lon < max_lon)) {
    throw ConfigError("grid bounding box is degenerate");
  }
}

Cell GridSpec::cell_of(double lat, double lon) const {
  if (lat < min_lat || lat > max_lat || lon < min_lon || lon > max_lon) {
    std::ostringstream msg;
    msg << "point (" << lat << ", " << lon << ") outside bounding box";
    throw DataError(msg.str());
  }
  int row = static_cast<int>((lat - min_lat) / (max_lat - min_lat) * rows);
  int col = static_cast<int>((lon - min_lon) / (max_lon - min_lon) * cols);
  row = std::min(row, rows - 1);  // max edge belongs to the last row/col
  col = std::min(col, cols - 1);
  return cell_id(row, col);
}

std::pair<double, double> GridSpec::cell_center(Cell c) const {
  const double lat_step = (max_lat - min_lat) / rows;
  const double lon_step = (max_lon - min_lon) / cols;
  return {min_lat + (row_of(c) + 0.5) * lat_step, min_lon + (col_of(c) + 0.5) * lon_step};
}

double GridSpec::grid_distance(Cell a, Cell b) const {
  const double dr = row_of(a) - row_of(b);
  const double dc = col_of(a) - col_of(b);
  return std::sqrt(dr * dr + dc * dc);
}

bool ReachabilityGraph::reachable(Cell a, Cell b) const {
  const auto& row = rps[a];
  return std::binary_search(row.begin(), row.end(), b);
}

bool ReachabilityGraph::valid_trajectory(const CellTrajectory& t) const {
  for (Cell c : t) {
    if (c < 0 || c >= domain_size()) return false;
  }
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!reachable(t[i - 1], t[i])) return false;
  }
  return true;
}

namespace {

void sort_rows(ReachabilityGraph& g) {
  for (auto& row : g.rps) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
}

}  // namespace

ReachabilityGraph build_reachability(const GridSpec& spec, const ReachMode& mode,
                                     bool self_loops) {
  spec.validate();
  ReachabilityGraph g;
  g.rps.resize(spec.cell_count());

  if (const auto* edges = std::get_if<ExplicitEdges>(&mode)) {
    for (const auto& [from, to] : edges->edges) {
      if (!spec.valid_cell(from) || !spec.valid_cell(to)) {
        throw ConfigError("explicit reachability edge outside the cell domain");
      }
      g.rps[from].push_back(to);
    }
  } else if (std::holds_alternative<Neighbors8>(mode)) {
    for (int r = 0; r < spec.rows; ++r) {
      for (int c = 0; c < spec.cols; ++c) {
        auto& row = g.rps[spec.cell_id(r, c)];
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nr = r + dr;
            const int nc = c + dc;
            if (nr >= 0 && nr < spec.rows && nc >= 0 && nc < spec.cols) {
              row.push_back(spec.cell_id(nr, nc));
            }
          }
        }
      }
    }
  } else {
    const auto& sl = std::get<SpeedLimit>(mode);
    if (sl.speed <= 0.0 || sl.time_interval <= 0.0) {
      throw ConfigError("speed_limit mode requires positive speed and interval");
    }
    const double reach = sl.speed * sl.time_interval;
    for (Cell a = 0; a < spec.cell_count(); ++a) {
      const auto [alat, alon] = spec.cell_center(a);
      for (Cell b = 0; b < spec.cell_count(); ++b) {
        if (a == b) continue;  // self-membership is the flag's decision
        const auto [blat, blon] = spec.cell_center(b);
        const double dist = std::hypot(alat - blat, alon - blon);
        if (dist <= reach) g.rps[a].push_back(b);
      }
    }
  }

  if (self_loops) {
    for (Cell c = 0; c < spec.cell_count(); ++c) g.rps[c].push_back(c);
  }
  sort_rows(g);
  return g;
}

ReachabilityGraph build_reachability_explicit(int domain_size,
                                              const std::vector<std::pair<Cell, Cell>>& edges,
                                              bool self_loops) {
  ReachabilityGraph g;
  g.rps.resize(domain_size);
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= domain_size || to < 0 || to >= domain_size) {
      throw ConfigError("explicit reachability edge outside the point domain");
    }
    g.rps[from].push_back(to);
  }
  if (self_loops) {
    for (Cell c = 0; c < domain_size; ++c) g.rps[c].push_back(c);
  }
  sort_rows(g);
  return g;
}

namespace {

// Cells crossed by the straight segment between two cell centers, endpoints
// included, in integer (row, col) space. Supercover-style marching: steps one
// row or column at a time toward the target, choosing the axis whose boundary
// the segment crosses first, so consecutive cells are always 8-neighbors.
std::vector<std::pair<int, int>> line_cells(int r0, int c0, int r1, int c1) {
  std::vector<std::pair<int, int>> cells;
  int r = r0;
  int c = c0;
  const int dr = std::abs(r1 - r0);
  const int dc = std::abs(c1 - c0);
  const int sr = r0 < r1 ? 1 : -1;
  const int sc = c0 < c1 ? 1 : -1;
  int err = dc - dr;  // Bresenham accumulator scaled by 2 below
  cells.emplace_back(r, c);
  while (r != r1 || c != c1) {
    const int e2 = 2 * err;
    if (e2 > -dr) {
      err -= dr;
      c += sc;
    }
    if (e2 < dc) {
      err += dc;
      r += sr;
    }
    cells.emplace_back(r, c);
  }
  return cells;
}

}  // namespace

CellTrajectory discretize(const std::vector<std::pair<double, double>>& raw,
                          const GridSpec& spec) {
  spec.validate();
  CellTrajectory out;
  for (const auto& [lat, lon] : raw) {
    const Cell cell = spec.cell_of(lat, lon);
    if (!out.empty() && out.back() == cell) continue;  // collapse duplicates
    if (out.empty()) {
      out.push_back(cell);
      continue;
    }
    const Cell prev = out.back();
    const int dr = std::abs(spec.row_of(prev) - spec.row_of(cell));
    const int dc = std::abs(spec.col_of(prev) - spec.col_of(cell));
    if (dr <= 1 && dc <= 1) {
      out.push_back(cell);
      continue;
    }
    // Bridge the gap along the straight line between cell centers.
    const auto bridge =
        line_cells(spec.row_of(prev), spec.col_of(prev), spec.row_of(cell), spec.col_of(cell));
    for (std::size_t i = 1; i < bridge.size(); ++i) {
      out.push_back(spec.cell_id(bridge[i].first, bridge[i].second));
    }
  }
  return out;
}

}  // namespace trap
