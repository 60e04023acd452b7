#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphsparse/rng.hpp"

namespace graphsparse {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline double distance(Cell a, Cell b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline long squared_distance(Cell a, Cell b) {
  const long dx = a.x - b.x;
  const long dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Occupancy grid plus the monotone explored mask.
///
/// Explored cells are only ever added. The map keeps running counts of free
/// cells and explored free cells so coverage is O(1), and the list of explored
/// free cells in reveal order so RRT sampling is uniform and deterministic.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  bool is_obstacle(Cell c) const { return occupancy_[index(c)] != 0; }
  bool is_free(Cell c) const { return occupancy_[index(c)] == 0; }
  bool is_explored(Cell c) const { return explored_[index(c)] != 0; }

  /// Only valid while nothing has been explored (map construction).
  void set_obstacle(Cell c, bool obstacle);
  /// Marks a cell explored; returns true when it was previously unexplored.
  bool mark_explored(Cell c);

  long free_cell_count() const { return free_count_; }
  long explored_free_count() const { return explored_free_count_; }
  long explored_count() const { return explored_count_; }
  const std::vector<Cell>& explored_free_cells() const { return explored_free_cells_; }

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  const std::vector<std::uint8_t>& explored() const { return explored_; }

  /// Full rescan of the cached counters; used by audits and tests.
  bool counters_consistent() const;

  /// Restore from raw arrays (checkpoint load).
  static GridMap from_raw(int width, int height, std::vector<std::uint8_t> occupancy,
                          std::vector<std::uint8_t> explored, std::vector<Cell> explored_free);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> occupancy_;
  std::vector<std::uint8_t> explored_;
  std::vector<Cell> explored_free_cells_;
  long free_count_ = 0;
  long explored_free_count_ = 0;
  long explored_count_ = 0;
};

struct RobotState {
  Cell position;
  int fov_radius = 25;
  int moves_taken = 0;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct EnvConfig {
  int width = 250;
  int height = 250;
  IntRange obstacle_count{8, 16};
  IntRange obstacle_size{10, 50};
  int fov_radius = 25;
  /// Regeneration is triggered when the start's connected free region covers
  /// less than this fraction of the map.
  double min_reachable_fraction = 0.25;
  int max_generation_attempts = 64;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Environment {
  GridMap map;
  RobotState robot;
};

/// Builds a map with axis-aligned rectangular obstacles, seals free pockets not
/// 4-connected to the start cell, places the robot and reveals its start FOV.
/// Throws std::runtime_error after config.max_generation_attempts failures.
Environment generate_environment(const EnvConfig& config, std::uint64_t seed);

/// Visits every cell whose closed unit square intersects the segment between
/// the centers of a and b. The cell set is independent of argument order.
/// Returning false from the visitor stops the walk; the function then returns false.
bool for_each_supercover_cell(Cell a, Cell b, const std::function<bool(Cell)>& visit);

/// All supercover cells in column-major walk order (a convenience for tests and rendering).
std::vector<Cell> supercover_cells(Cell a, Cell b);

/// True iff no obstacle cell lies on the supercover of the segment, endpoints excluded.
/// Endpoints are excluded so that an obstacle face can itself be seen.
bool line_of_sight(const GridMap& map, Cell a, Cell b);

/// True iff every supercover cell, endpoints included, is free and explored.
bool segment_traversable(const GridMap& map, Cell a, Cell b);

/// Reveals the Euclidean FOV disc around the robot, subject to line of sight.
/// Returns the number of newly explored cells.
long reveal(GridMap& map, const RobotState& robot);

/// True iff reveal() from p would mark at least one cell explored.
bool reveals_any(const GridMap& map, Cell p, int fov_radius);

/// Explored free cells / free cells.
double coverage(const GridMap& map);

}  // namespace graphsparse
