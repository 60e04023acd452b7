#include <gtest/gtest.h>

#include <cmath>

#include "graphsparse/reward.hpp"

using namespace graphsparse;

namespace {

NodeClass cls(bool frontier, bool leaf, bool split) {
  NodeClass c;
  c.is_frontier = frontier;
  c.is_leaf = leaf;
  c.is_split = split;
  return c;
}

StepRewardInput input(std::vector<NodeClass> pruned, int attempts, bool terminal = false, double coverage = 0.0) {
  return {std::move(pruned), attempts, terminal, coverage};
}

}  // namespace

TEST(NodeReward, AllSixClassCombinations) {
  // Hand table: r_f = -1 on frontier, r_c = -1 on leaf or split.
  struct Row {
    bool frontier;
    const char* shape;
    double rf, rc;
  };
  const Row table[] = {
      {true, "leaf", -1, -1},   {true, "split", -1, -1},  {true, "chain", -1, +1},
      {false, "leaf", +1, -1},  {false, "split", +1, -1}, {false, "chain", +1, +1},
  };
  for (const Row& r : table) {
    const std::string shape = r.shape;
    const NodeReward got = node_reward(cls(r.frontier, shape == "leaf", shape == "split"));
    EXPECT_EQ(got.frontier, r.rf) << r.frontier << " " << shape;
    EXPECT_EQ(got.structure, r.rc) << r.frontier << " " << shape;
    const double sum = got.frontier + got.structure;
    EXPECT_TRUE(sum == -2 || sum == 0 || sum == 2);
  }
}

TEST(TimestepReward, Fixtures) {
  const RewardConstants k;
  const NodeClass frontier_leaf = cls(true, true, false), safe = cls(false, false, false);
  EXPECT_DOUBLE_EQ(timestep_reward(input({frontier_leaf, safe}, 0), k), 0.0);
  EXPECT_NEAR(timestep_reward(input({safe}, 4), k), 1.9, 1e-12);
  EXPECT_NEAR(timestep_reward(input({frontier_leaf}, 100), k), -4.5, 1e-12);
  EXPECT_THROW(timestep_reward(input({}, 0), k), std::invalid_argument);
}

TEST(TimestepReward, StaysWithinBounds) {
  const RewardConstants k;
  const NodeClass shapes[] = {cls(true, true, false), cls(true, false, true), cls(true, false, false),
                              cls(false, true, false), cls(false, false, true), cls(false, false, false)};
  std::uint64_t state = 12345;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<NodeClass> p;
    const int n = 1 + trial % 17;
    for (int i = 0; i < n; ++i) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      p.push_back(shapes[(state >> 33) % 6]);
    }
    const int attempts = trial % 101;
    const double r = timestep_reward(input(p, attempts), k);
    ASSERT_LE(r, 2.0);
    ASSERT_GE(r, -2.0 - k.attempt_penalty * 100 / (2.0 * k.max_moves));
  }
}

TEST(TerminalBonus, Fixtures) {
  const RewardConstants k;
  EXPECT_EQ(terminal_bonus(0.0, k), 0.0);
  EXPECT_NEAR(terminal_bonus(1.0, k), 8.0 * (std::exp(1.0) - 1.0), 1e-9);
  EXPECT_NEAR(terminal_bonus(1.0, k), 13.7463, 1e-4);
  // 8 * (e^0.45 - 1) = 4.54650; the commonly quoted 4.5467 is a rounding slip.
  EXPECT_NEAR(terminal_bonus(0.45, k), 8.0 * std::expm1(0.45), 1e-12);
  EXPECT_NEAR(terminal_bonus(0.45, k), 4.5467, 5e-4);
}

TEST(TerminalBonus, MonotoneAndConvex) {
  const RewardConstants k;
  double prev = terminal_bonus(0.0, k), prev_slope = -1.0;
  for (int i = 1; i <= 100; ++i) {
    const double b = terminal_bonus(i / 100.0, k);
    const double slope = b - prev;
    ASSERT_GT(slope, 0.0);
    ASSERT_GT(slope, prev_slope);
    prev = b;
    prev_slope = slope;
  }
}

TEST(TotalReward, Fixtures) {
  const RewardConstants k;
  const NodeClass safe = cls(false, false, false), frontier_chain = cls(true, false, false);
  // R_t = 0.3 from one safe node: 2 - 5 * 68 / 200.
  EXPECT_NEAR(total_reward(input({safe}, 68), k), 0.3, 1e-12);
  // R_t = 0 with a frontier chain node (r_f + r_c = 0).
  EXPECT_NEAR(total_reward(input({frontier_chain}, 0, true, 1.0), k), 13.7463, 1e-4);
  // R_t = -0.1 via N_a = 4 on a zero-sum node.
  EXPECT_NEAR(total_reward(input({frontier_chain}, 4, true, 0.45), k), 8.0 * std::expm1(0.45) - 0.1, 1e-12);
  EXPECT_NEAR(total_reward(input({frontier_chain}, 4, true, 0.45), k), 4.4467, 5e-4);
  EXPECT_THROW(total_reward(input({}, 0, true, 0.5), k), std::invalid_argument);
}

TEST(StepReward, EmptyPruneIsZeroPlusBonus) {
  const RewardConstants k;
  const auto b = step_reward(input({}, 3), k);
  EXPECT_EQ(b.timestep, 0.0);
  EXPECT_EQ(b.total, 0.0);
  const auto t = step_reward(input({}, 0, true, 1.0), k);
  EXPECT_NEAR(t.total, terminal_bonus(1.0, k), 1e-15);
  const auto full = step_reward(input({cls(true, true, false), cls(false, false, false)}, 8, true, 0.3), k);
  EXPECT_DOUBLE_EQ(full.mean_frontier, 0.0);
  EXPECT_DOUBLE_EQ(full.mean_structure, 0.0);
  EXPECT_DOUBLE_EQ(full.penalty, 0.2);
  EXPECT_NEAR(full.total, full.timestep + full.bonus, 1e-15);
  EXPECT_NEAR(full.total, total_reward(input({cls(true, true, false), cls(false, false, false)}, 8, true, 0.3), k),
              1e-15);
}

TEST(RewardConstants, Validation) {
  RewardConstants k;
  k.discount = 1.0;
  EXPECT_THROW(k.validate(), std::invalid_argument);
  k = RewardConstants{};
  k.max_moves = 0;
  EXPECT_THROW(k.validate(), std::invalid_argument);
}
