#include "graphsparse/grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace graphsparse {

namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long long ceil_div(long long a, long long b) { return -floor_div(-a, b); }

}  // namespace

GridMap::GridMap(int width, int height)
    : width_(width),
      height_(height),
      occupancy_(static_cast<std::size_t>(width) * height, 0),
      explored_(static_cast<std::size_t>(width) * height, 0),
      free_count_(static_cast<long>(width) * height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("GridMap: dimensions must be positive");
}

void GridMap::set_obstacle(Cell c, bool obstacle) {
  if (explored_count_ != 0) throw std::logic_error("GridMap::set_obstacle after exploration began");
  auto& v = occupancy_[index(c)];
  const std::uint8_t nv = obstacle ? 1 : 0;
  if (v == nv) return;
  free_count_ += obstacle ? -1 : 1;
  v = nv;
}

bool GridMap::mark_explored(Cell c) {
  auto& e = explored_[index(c)];
  if (e) return false;
  e = 1;
  ++explored_count_;
  if (is_free(c)) {
    ++explored_free_count_;
    explored_free_cells_.push_back(c);
  }
  return true;
}

bool GridMap::counters_consistent() const {
  long free = 0, explored_free = 0, explored = 0;
  for (std::size_t i = 0; i < occupancy_.size(); ++i) {
    free += occupancy_[i] == 0;
    explored += explored_[i] != 0;
    explored_free += (occupancy_[i] == 0 && explored_[i] != 0);
  }
  return free == free_count_ && explored == explored_count_ &&
         explored_free == explored_free_count_ &&
         static_cast<long>(explored_free_cells_.size()) == explored_free_count_;
}

GridMap GridMap::from_raw(int width, int height, std::vector<std::uint8_t> occupancy,
                          std::vector<std::uint8_t> explored, std::vector<Cell> explored_free) {
  GridMap m(width, height);
  const auto n = static_cast<std::size_t>(width) * height;
  if (occupancy.size() != n || explored.size() != n)
    throw std::invalid_argument("GridMap::from_raw: array size mismatch");
  m.occupancy_ = std::move(occupancy);
  m.explored_ = std::move(explored);
  m.explored_free_cells_ = std::move(explored_free);
  m.free_count_ = m.explored_count_ = m.explored_free_count_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m.free_count_ += m.occupancy_[i] == 0;
    m.explored_count_ += m.explored_[i] != 0;
    m.explored_free_count_ += (m.occupancy_[i] == 0 && m.explored_[i] != 0);
  }
  if (!m.counters_consistent()) throw std::invalid_argument("GridMap::from_raw: inconsistent explored list");
  return m;
}

void EnvConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("invalid env config '" + key + "': " + why);
  };
  if (width < 1) fail("env_dimensions", "width must be >= 1");
  if (height < 1) fail("env_dimensions", "height must be >= 1");
  if (obstacle_count.lo < 0 || obstacle_count.hi < obstacle_count.lo)
    fail("obstacle_count_range", "empty or negative range");
  if (obstacle_size.lo < 1 || obstacle_size.hi < obstacle_size.lo)
    fail("obstacle_size_range", "empty or non-positive range");
  if (fov_radius < 1) fail("fov_radius", "must be >= 1");
  if (!(min_reachable_fraction >= 0.0 && min_reachable_fraction <= 1.0))
    fail("min_reachable_fraction", "must lie in [0,1]");
  if (max_generation_attempts < 1) fail("max_generation_attempts", "must be >= 1");
}

bool for_each_supercover_cell(Cell a, Cell b, const std::function<bool(Cell)>& visit) {
  // Doubled coordinates: cell (x, y) is the closed square [2x-1, 2x+1] x [2y-1, 2y+1]
  // and the segment runs between the doubled centers. All arithmetic is exact.
  if (b.x < a.x || (b.x == a.x && b.y < a.y)) std::swap(a, b);
  if (a.x == b.x) {
    for (int y = a.y; y <= b.y; ++y)
      if (!visit({a.x, y})) return false;
    return true;
  }
  const long long dx2 = 2LL * (b.x - a.x);
  const long long dy2 = 2LL * (b.y - a.y);
  const bool ascending = dy2 >= 0;
  for (int xc = a.x; xc <= b.x; ++xc) {
    const long long xlo = std::max(2LL * xc - 1, 2LL * a.x);
    const long long xhi = std::min(2LL * xc + 1, 2LL * b.x);
    // Y(X) * dx2 = 2*ay*dx2 + (X - 2*ax) * dy2
    const long long nlo = 2LL * a.y * dx2 + (xlo - 2LL * a.x) * dy2;
    const long long nhi = 2LL * a.y * dx2 + (xhi - 2LL * a.x) * dy2;
    const long long nmin = std::min(nlo, nhi);
    const long long nmax = std::max(nlo, nhi);
    const auto ylo = static_cast<int>(ceil_div(nmin - dx2, 2 * dx2));
    const auto yhi = static_cast<int>(floor_div(nmax + dx2, 2 * dx2));
    if (ascending) {
      for (int y = ylo; y <= yhi; ++y)
        if (!visit({xc, y})) return false;
    } else {
      for (int y = yhi; y >= ylo; --y)
        if (!visit({xc, y})) return false;
    }
  }
  return true;
}

std::vector<Cell> supercover_cells(Cell a, Cell b) {
  std::vector<Cell> out;
  for_each_supercover_cell(a, b, [&](Cell c) {
    out.push_back(c);
    return true;
  });
  return out;
}

bool line_of_sight(const GridMap& map, Cell a, Cell b) {
  if (a == b) return true;
  return for_each_supercover_cell(a, b, [&](Cell c) {
    if (c == a || c == b) return true;
    return !map.is_obstacle(c);
  });
}

bool segment_traversable(const GridMap& map, Cell a, Cell b) {
  return for_each_supercover_cell(a, b, [&](Cell c) { return map.is_free(c) && map.is_explored(c); });
}

long reveal(GridMap& map, const RobotState& robot) {
  const int r = robot.fov_radius;
  const long r2 = static_cast<long>(r) * r;
  const Cell p = robot.position;
  long revealed = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > r2) continue;
      const Cell c{p.x + dx, p.y + dy};
      if (!map.in_bounds(c) || map.is_explored(c)) continue;
      if (line_of_sight(map, p, c) && map.mark_explored(c)) ++revealed;
    }
  }
  return revealed;
}

bool reveals_any(const GridMap& map, Cell p, int fov_radius) {
  const long r2 = static_cast<long>(fov_radius) * fov_radius;
  for (int dy = -fov_radius; dy <= fov_radius; ++dy)
    for (int dx = -fov_radius; dx <= fov_radius; ++dx) {
      if (static_cast<long>(dx) * dx + static_cast<long>(dy) * dy > r2) continue;
      const Cell c{p.x + dx, p.y + dy};
      if (map.in_bounds(c) && !map.is_explored(c) && line_of_sight(map, p, c)) return true;
    }
  return false;
}

double coverage(const GridMap& map) {
  if (map.free_cell_count() == 0) return 0.0;
  return static_cast<double>(map.explored_free_count()) / static_cast<double>(map.free_cell_count());
}

namespace {

// 2D prefix sum of obstacle flags for O(1) box queries.
class ObstacleIntegral {
 public:
  explicit ObstacleIntegral(const GridMap& m) : w_(m.width() + 1), sum_((m.width() + 1) * (m.height() + 1), 0) {
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) + (m.is_obstacle({x, y}) ? 1 : 0);
  }
  // Obstacles in the inclusive box [x0,x1] x [y0,y1] (already clipped).
  long box(int x0, int y0, int x1, int y1) const {
    return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
  }

 private:
  long& at(int x, int y) { return sum_[static_cast<std::size_t>(y) * w_ + x]; }
  long at(int x, int y) const { return sum_[static_cast<std::size_t>(y) * w_ + x]; }
  int w_;
  std::vector<long> sum_;
};

bool has_clearance(const GridMap& m, const ObstacleIntegral& integral, Cell c, double clearance) {
  const int r = static_cast<int>(std::floor(clearance));
  const int x0 = std::max(0, c.x - r), x1 = std::min(m.width() - 1, c.x + r);
  const int y0 = std::max(0, c.y - r), y1 = std::min(m.height() - 1, c.y + r);
  if (integral.box(x0, y0, x1, y1) == 0) return true;
  const double c2 = clearance * clearance;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (m.is_obstacle({x, y}) && static_cast<double>(squared_distance(c, {x, y})) <= c2) return false;
  return true;
}

}  // namespace

Environment generate_environment(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  const int w = config.width, h = config.height;
  for (int attempt = 0; attempt < config.max_generation_attempts; ++attempt) {
    Rng rng(derive_seed(seed, {0x656e76ULL, static_cast<std::uint64_t>(attempt)}));
    GridMap map(w, h);
    const auto n_obstacles = rng.uniform_int(config.obstacle_count.lo, config.obstacle_count.hi);
    for (std::int64_t i = 0; i < n_obstacles; ++i) {
      const int sw = static_cast<int>(rng.uniform_int(config.obstacle_size.lo, std::min(config.obstacle_size.hi, w)));
      const int sh = static_cast<int>(rng.uniform_int(config.obstacle_size.lo, std::min(config.obstacle_size.hi, h)));
      const int x0 = static_cast<int>(rng.uniform_int(0, std::max(0, w - sw)));
      const int y0 = static_cast<int>(rng.uniform_int(0, std::max(0, h - sh)));
      for (int y = y0; y < std::min(h, y0 + sh); ++y)
        for (int x = x0; x < std::min(w, x0 + sw); ++x) map.set_obstacle({x, y}, true);
    }

    const ObstacleIntegral integral(map);
    const double clearance = config.fov_radius / 2.0;
    std::vector<Cell> starts;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (map.is_free({x, y}) && has_clearance(map, integral, {x, y}, clearance)) starts.push_back({x, y});
    if (starts.empty()) continue;
    const Cell start = starts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(starts.size()) - 1))];

    // Flood fill the start's 4-connected free region; everything else free is sealed.
    std::vector<std::uint8_t> reach(static_cast<std::size_t>(w) * h, 0);
    std::vector<Cell> stack{start};
    reach[map.index(start)] = 1;
    long reachable = 0;
    while (!stack.empty()) {
      const Cell c = stack.back();
      stack.pop_back();
      ++reachable;
      const Cell nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      for (const Cell& nb : nbrs) {
        if (!map.in_bounds(nb) || map.is_obstacle(nb) || reach[map.index(nb)]) continue;
        reach[map.index(nb)] = 1;
        stack.push_back(nb);
      }
    }
    if (static_cast<double>(reachable) < config.min_reachable_fraction * static_cast<double>(w) * h) continue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (map.is_free({x, y}) && !reach[map.index({x, y})]) map.set_obstacle({x, y}, true);

    Environment env{std::move(map), RobotState{start, config.fov_radius, 0}};
    reveal(env.map, env.robot);
    return env;
  }
  throw std::runtime_error("generate_environment: no valid map after " +
                           std::to_string(config.max_generation_attempts) +
                           " attempts (obstacle configuration too dense)");
}

}  // namespace graphsparse
