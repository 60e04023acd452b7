#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "graphsparse/grid.hpp"
#include "support.hpp"

using namespace graphsparse;
using graphsparse::testing::brute_los;
using graphsparse::testing::brute_supercover;
using graphsparse::testing::open_map;

namespace {

std::set<std::pair<int, int>> as_set(const std::vector<Cell>& cells) {
  std::set<std::pair<int, int>> s;
  for (Cell c : cells) s.insert({c.x, c.y});
  return s;
}

GridMap random_map(Rng& rng, int w, int h, double density) {
  GridMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (rng.uniform01() < density) m.set_obstacle({x, y}, true);
  return m;
}

}  // namespace

TEST(Supercover, MatchesClosedSquareOracle) {
  Rng rng(11);
  for (int i = 0; i < 4000; ++i) {
    const Cell a{static_cast<int>(rng.uniform_int(0, 30)), static_cast<int>(rng.uniform_int(0, 30))};
    const Cell b{static_cast<int>(rng.uniform_int(0, 30)), static_cast<int>(rng.uniform_int(0, 30))};
    ASSERT_EQ(as_set(supercover_cells(a, b)), as_set(brute_supercover(a, b)))
        << "(" << a.x << "," << a.y << ") -> (" << b.x << "," << b.y << ")";
  }
}

TEST(Supercover, OrderIndependentAndDiagonalTouchesCorners) {
  EXPECT_EQ(as_set(supercover_cells({0, 0}, {7, 3})), as_set(supercover_cells({7, 3}, {0, 0})));
  // A pure diagonal passes through shared corners, so both side cells count.
  const auto s = as_set(supercover_cells({0, 0}, {2, 2}));
  EXPECT_TRUE(s.count({1, 0}) && s.count({0, 1}) && s.count({1, 1}) && s.count({2, 1}));
}

TEST(LineOfSight, IdentityCorridorAndMidpointBlock) {
  GridMap m = open_map(9, 3, false);
  EXPECT_TRUE(line_of_sight(m, {4, 1}, {4, 1}));
  EXPECT_TRUE(line_of_sight(m, {0, 1}, {8, 1}));
  m.set_obstacle({4, 1}, true);
  EXPECT_FALSE(line_of_sight(m, {0, 1}, {8, 1}));
  // The obstacle itself is visible: endpoints never block.
  EXPECT_TRUE(line_of_sight(m, {0, 1}, {4, 1}));
}

TEST(LineOfSight, SymmetricAndMatchesOracleOnRandomMaps) {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const GridMap m = random_map(rng, 16, 16, 0.15);
    for (int i = 0; i < 200; ++i) {
      const Cell a{static_cast<int>(rng.uniform_int(0, 15)), static_cast<int>(rng.uniform_int(0, 15))};
      const Cell b{static_cast<int>(rng.uniform_int(0, 15)), static_cast<int>(rng.uniform_int(0, 15))};
      ASSERT_EQ(line_of_sight(m, a, b), line_of_sight(m, b, a));
      ASSERT_EQ(line_of_sight(m, a, b), brute_los(m, a, b));
    }
  }
}

TEST(Reveal, OpenDiscOfRadiusTwoHasThirteenCells) {
  GridMap m = open_map(11, 11, false);
  const RobotState robot{{5, 5}, 2, 0};
  // Oracle: integer points with dx^2 + dy^2 <= 4.
  long expected = 0;
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx) expected += dx * dx + dy * dy <= 4;
  ASSERT_EQ(expected, 13);
  EXPECT_EQ(reveal(m, robot), 13);
  EXPECT_EQ(reveal(m, robot), 0);
  EXPECT_EQ(m.explored_count(), 13);
}

TEST(Reveal, WallHidesCellsBehindIt) {
  // 5x5 fixture: robot at (0,2), full-height wall at x = 2.
  GridMap m = open_map(5, 5, false);
  for (int y = 0; y < 5; ++y) m.set_obstacle({2, y}, true);
  reveal(m, RobotState{{0, 2}, 4, 0});
  for (int y = 0; y < 5; ++y)
    for (int x = 3; x < 5; ++x) EXPECT_FALSE(m.is_explored({x, y})) << x << "," << y;
  EXPECT_TRUE(m.is_explored({2, 2}));  // the wall face is seen
}

TEST(Reveal, NeverMarksCellsWithoutLineOfSight) {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    GridMap m = random_map(rng, 21, 21, 0.2);
    Cell p{10, 10};
    m.set_obstacle(p, false);
    const int r = static_cast<int>(rng.uniform_int(1, 9));
    reveal(m, RobotState{p, r, 0});
    for (int y = 0; y < 21; ++y)
      for (int x = 0; x < 21; ++x) {
        const Cell c{x, y};
        const bool in_disc = squared_distance(c, p) <= static_cast<long>(r) * r;
        ASSERT_EQ(m.is_explored(c), in_disc && brute_los(m, p, c)) << x << "," << y << " r=" << r;
      }
    ASSERT_TRUE(m.counters_consistent());
  }
}

TEST(Coverage, CountsOnlyFreeCells) {
  GridMap m = open_map(250, 250, false);
  EXPECT_EQ(coverage(m), 0.0);
  reveal(m, RobotState{{100, 100}, 2, 0});
  EXPECT_DOUBLE_EQ(coverage(m), 13.0 / 62500.0);
  const GridMap full = open_map(4, 4, true);
  EXPECT_EQ(coverage(full), 1.0);
}

TEST(Environment, DeterministicAndEmptyRange) {
  EnvConfig cfg;
  cfg.width = cfg.height = 60;
  cfg.obstacle_size = {4, 12};
  cfg.fov_radius = 6;
  const Environment a = generate_environment(cfg, 99);
  const Environment b = generate_environment(cfg, 99);
  EXPECT_EQ(a.map.occupancy(), b.map.occupancy());
  EXPECT_EQ(a.map.explored(), b.map.explored());
  EXPECT_EQ(a.robot.position, b.robot.position);

  cfg.obstacle_count = {0, 0};
  const Environment e = generate_environment(cfg, 3);
  EXPECT_EQ(e.map.free_cell_count(), 60L * 60L);
}

TEST(Environment, StartIsFreeExploredAndRegionConnected) {
  EnvConfig cfg;
  cfg.width = cfg.height = 100;
  cfg.obstacle_size = {4, 20};
  cfg.fov_radius = 10;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Environment env = generate_environment(cfg, seed);
    const GridMap& m = env.map;
    ASSERT_TRUE(m.is_free(env.robot.position));
    ASSERT_TRUE(m.is_explored(env.robot.position));
    ASSERT_TRUE(m.counters_consistent());
    // Every free cell is 4-connected to the start.
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(m.width()) * m.height(), 0);
    std::vector<Cell> stack{env.robot.position};
    seen[m.index(env.robot.position)] = 1;
    long reached = 0;
    while (!stack.empty()) {
      const Cell c = stack.back();
      stack.pop_back();
      ++reached;
      for (Cell nb : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}})
        if (m.in_bounds(nb) && m.is_free(nb) && !seen[m.index(nb)]) {
          seen[m.index(nb)] = 1;
          stack.push_back(nb);
        }
    }
    ASSERT_EQ(reached, m.free_cell_count());
  }
}

TEST(Environment, OverDenseConfigFailsCleanly) {
  EnvConfig cfg;
  cfg.width = cfg.height = 20;
  cfg.obstacle_count = {40, 40};
  cfg.obstacle_size = {15, 20};
  cfg.fov_radius = 6;
  cfg.max_generation_attempts = 4;
  EXPECT_THROW(generate_environment(cfg, 1), std::runtime_error);
}

TEST(EnvConfigValidation, NamesTheKey) {
  EnvConfig cfg;
  cfg.fov_radius = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("fov_radius"), std::string::npos);
  }
}
