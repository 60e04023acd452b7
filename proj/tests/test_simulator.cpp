#include <gtest/gtest.h>

#include <cmath>

#include "graphsparse/simulator.hpp"

using namespace graphsparse;

namespace {

SimConfig desk_sim() {
  SimConfig c;
  c.env.width = c.env.height = 100;
  c.env.fov_radius = 10;
  c.env.obstacle_size = {4, 20};
  return c;
}

}  // namespace

TEST(Simulator, FullCoverageOnTinyOpenMapPaysTheFullBonus) {
  SimConfig c;
  c.env.width = c.env.height = 10;
  c.env.obstacle_count = {0, 0};
  c.env.fov_radius = 20;
  c.patch_size = 5;
  Simulator sim(c, 1);
  const StepResult r = sim.step(PruneStrategy::kNone);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.cause, Termination::kFullCoverage);
  EXPECT_EQ(r.coverage, 1.0);
  EXPECT_NEAR(r.reward.total, 8.0 * (std::exp(1.0) - 1.0), 1e-12);
  EXPECT_THROW(sim.step(PruneStrategy::kNone), std::logic_error);
}

TEST(Simulator, MoveCapEndsTheEpisode) {
  SimConfig c = desk_sim();
  c.reward.max_moves = 3;
  Simulator sim(c, 7);
  StepResult r;
  int steps = 0;
  while (!sim.done()) {
    r = sim.step(PruneStrategy::kRandom);
    ++steps;
  }
  EXPECT_EQ(r.cause, Termination::kMoveCap);
  EXPECT_EQ(sim.robot().moves_taken, 3);
  EXPECT_GE(steps, 3);
  EXPECT_NEAR(r.reward.bonus, 8.0 * std::expm1(r.coverage), 1e-12);
}

TEST(Simulator, GrowthCapPreventsDeadlock) {
  SimConfig c = desk_sim();
  c.max_growth_calls = 2;
  Simulator sim(c, 3);
  EXPECT_FALSE(sim.step(PruneStrategy::kNone).done);
  const StepResult r = sim.step(PruneStrategy::kNone);
  EXPECT_TRUE(r.done);
  EXPECT_EQ(r.cause, Termination::kGrowthCap);
}

TEST(Simulator, SameSeedSameStream) {
  const SimConfig c = desk_sim();
  Simulator a(c, 99), b(c, 99);
  while (!a.done()) {
    const StepResult x = a.step(PruneStrategy::kRandom), y = b.step(PruneStrategy::kRandom);
    ASSERT_EQ(x.reward.total, y.reward.total);
    ASSERT_EQ(x.coverage, y.coverage);
    ASSERT_EQ(x.tree_size, y.tree_size);
    ASSERT_EQ(x.attempts, y.attempts);
    ASSERT_EQ(a.image(), b.image());
  }
  EXPECT_TRUE(b.done());
}

TEST(Simulator, NoPruneOnlyGrows) {
  Simulator sim(desk_sim(), 5);
  std::size_t prev = sim.tree().size();
  while (!sim.done()) {
    const StepResult r = sim.step(PruneStrategy::kNone);
    ASSERT_EQ(r.pruned, 0);
    ASSERT_GE(r.tree_size, prev);
    prev = sim.tree().size();
  }
}

TEST(Simulator, PrunedTreeRespectsTheGrowthReductionBound) {
  // final <= 1 + ceil((1 - lambda_f) * added) + rounds, where ids are never
  // reused so capacity() - 1 counts every node ever added.
  const SimConfig c = desk_sim();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Simulator sim(c, seed);
    int rounds = 0;
    while (!sim.done()) {
      const StepResult r = sim.step(PruneStrategy::kRandom);
      ASSERT_EQ(r.pruned, r.prune_target);
      ++rounds;
    }
    const double added = static_cast<double>(sim.tree().capacity() - 1);
    const double bound = 1.0 + std::ceil((1.0 - c.pruner.prune_fraction) * added) + rounds;
    EXPECT_LE(static_cast<double>(sim.tree().size()), bound) << "seed " << seed;
    EXPECT_FALSE(sim.tree().audit(sim.map()).has_value());
  }
}

TEST(Simulator, ResetDrawsAFreshMap) {
  Simulator sim(desk_sim(), 1);
  const auto first = sim.map().occupancy();
  sim.reset(2);
  EXPECT_NE(sim.map().occupancy(), first);
  EXPECT_EQ(sim.steps(), 0);
  EXPECT_FALSE(sim.done());
}

TEST(SimConfig, ValidationNamesTheKey) {
  SimConfig c = desk_sim();
  c.growth_step = 0.0;
  try {
    c.validate();
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("rrt_step"), std::string::npos);
  }
}
