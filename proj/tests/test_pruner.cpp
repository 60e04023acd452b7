#include <gtest/gtest.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "graphsparse/pruner.hpp"
#include "support.hpp"

using namespace graphsparse;
using graphsparse::testing::open_map;

namespace {

GmmAction single(Vec2 mean, Vec2 sd, double weight = 1.0) {
  GmmAction a;
  a.components.push_back({weight, mean, sd, true});
  return a;
}

// Root at (0,0) and a chain of nodes along y = 0.
ExplorationTree row_tree(const GridMap& m, int count) {
  ExplorationTree t(m, {0, 0});
  NodeId prev = t.root();
  for (int x = 1; x < count; ++x) prev = t.add_node(prev, {x, 0});
  return t;
}

}  // namespace

TEST(GmmDensity, PeakOfUnitGaussian) {
  EXPECT_NEAR(gmm_density(single({3.0, 4.0}, {1.0, 1.0}), {3.0, 4.0}), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(gmm_density(single({3.0, 4.0}, {1.0, 1.0}), {3.0, 4.0}), 0.159155, 1e-6);
}

TEST(GmmDensity, TenSigmaTail) {
  GmmAction a;
  a.components.push_back({0.5, {0.0, 0.0}, {1.0, 1.0}, true});
  a.components.push_back({0.5, {40.0, 0.0}, {1.0, 1.0}, true});
  // (20, 10) is more than 10 sigma from both means.
  EXPECT_LT(gmm_density(a, {20.0, 10.0}), 1e-20);
}

TEST(GmmDensity, GatedComponentsDropOutWithoutRenormalising) {
  GmmAction a;
  a.components.push_back({0.25, {0.0, 0.0}, {1.0, 1.0}, true});
  a.components.push_back({0.75, {0.0, 0.0}, {1.0, 1.0}, false});
  EXPECT_NEAR(gmm_density(a, {0.0, 0.0}), 0.25 / (2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(gmm_density_ungated(a, {0.0, 0.0}), 1.0 / (2.0 * std::numbers::pi), 1e-15);
}

TEST(GmmDensity, MonteCarloIntegralIsOne) {
  Rng rng(77);
  GmmAction a;
  const int k = 4;
  std::vector<double> w(k);
  double sum = 0.0;
  for (double& v : w) sum += (v = rng.uniform(0.1, 1.0));
  double lo_x = INFINITY, hi_x = -INFINITY, lo_y = INFINITY, hi_y = -INFINITY;
  for (int i = 0; i < k; ++i) {
    const Vec2 mu{rng.uniform(0, 60), rng.uniform(0, 60)}, sd{rng.uniform(1, 6), rng.uniform(1, 6)};
    a.components.push_back({w[i] / sum, mu, sd, true});
    lo_x = std::min(lo_x, mu[0] - 8 * sd[0]);
    hi_x = std::max(hi_x, mu[0] + 8 * sd[0]);
    lo_y = std::min(lo_y, mu[1] - 8 * sd[1]);
    hi_y = std::max(hi_y, mu[1] + 8 * sd[1]);
  }
  const int samples = 1000000;
  double acc = 0.0;
  for (int i = 0; i < samples; ++i) acc += gmm_density(a, {rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)});
  const double integral = acc / samples * (hi_x - lo_x) * (hi_y - lo_y);
  EXPECT_NEAR(integral, 1.0, 0.02);
}

TEST(GmmDensity, GridMaxMatchesBruteForce) {
  GmmAction a = single({7.3, 2.6}, {2.0, 3.0}, 0.6);
  a.components.push_back({0.4, {15.0, 11.0}, {1.0, 1.0}, false});
  double best = 0.0;
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) best = std::max(best, gmm_density_ungated(a, {double(x), double(y)}));
  EXPECT_DOUBLE_EQ(gmm_max_density(a, 20, 20), best);
}

TEST(Noise, BoundsAndDisabledScale) {
  Rng rng(4);
  const Vec2 f{2 * std::numbers::pi / 50, 2 * std::numbers::pi / 30};
  for (int i = 0; i < 10000; ++i) {
    const double eta = noise_pattern({rng.uniform(-100, 100), rng.uniform(-100, 100)}, f);
    ASSERT_GE(eta, 0.0);
    ASSERT_LE(eta, 1.0);
  }
  PrunerConfig cfg;
  cfg.noise_enabled = true;
  cfg.noise_scale = 0.0;
  EXPECT_EQ(apply_noise(cfg, f, {3, 4}, 0.42, 9.0), 0.42);
  cfg.noise_scale = 1e-3;
  EXPECT_GE(apply_noise(cfg, f, {3, 4}, 0.42, 9.0), 0.42);
  EXPECT_NEAR(apply_noise(cfg, f, {3, 4}, 0.42, 9.0), 0.42 + 1e-3 * 9.0 * noise_pattern({3, 4}, f), 1e-15);
}

TEST(Noise, DefaultFrequencyFollowsMapExtent) {
  const Vec2 f = resolved_noise_frequency(PrunerConfig{}, 100, 50);
  EXPECT_DOUBLE_EQ(f[0], 2 * std::numbers::pi / 100);
  EXPECT_DOUBLE_EQ(f[1], 2 * std::numbers::pi / 50);
}

TEST(PruneCount, Fixtures) {
  EXPECT_EQ(prune_count(50, 0.96, 1000), 48);
  EXPECT_EQ(prune_count(0, 0.96, 1000), 0);
  EXPECT_EQ(prune_count(100, 0.96, 1000), 96);
  // Clamped so that two nodes survive.
  EXPECT_EQ(prune_count(100, 0.96, 30), 28);
  EXPECT_EQ(prune_count(5, 0.96, 2), 0);
}

TEST(SelectPruneSet, TopKTiesAndEmpty) {
  const GridMap m = open_map(10, 1, true);
  const ExplorationTree t = row_tree(m, 4);  // ids 1,2,3 at x = 1,2,3
  PrunerConfig cfg;
  // Density decreasing in x: node 1 > node 2 > node 3.
  const GmmAction a = single({1.0, 0.0}, {1.0, 1.0});
  auto sel = select_prune_set(t, t.root(), a, 2, cfg, 10, 1);
  EXPECT_EQ(sel.ids, (std::vector<NodeId>{1, 2}));
  EXPECT_GT(sel.densities[0], sel.densities[1]);
  // Reversed peak: node 3 wins.
  sel = select_prune_set(t, t.root(), single({3.0, 0.0}, {1.0, 1.0}), 2, cfg, 10, 1);
  EXPECT_EQ(sel.ids, (std::vector<NodeId>{3, 2}));
  // Equal density everywhere (all gated off, noise off) falls back to ascending id.
  GmmAction off = a;
  off.components[0].active = false;
  sel = select_prune_set(t, t.root(), off, 2, cfg, 10, 1);
  EXPECT_EQ(sel.ids, (std::vector<NodeId>{1, 2}));
  EXPECT_TRUE(select_prune_set(t, t.root(), a, 0, cfg, 10, 1).ids.empty());
  // Anchor is never pruned even when it has the highest density.
  sel = select_prune_set(t, 1, a, 5, cfg, 10, 1);
  EXPECT_EQ(sel.ids, (std::vector<NodeId>{2, 3}));
}

TEST(SelectPruneSet, GatedOffWithNoiseFollowsNoisePattern) {
  const GridMap m = open_map(40, 40, true);
  Rng rng(8);
  ExplorationTree t(m, {20, 20});
  grow(t, m, 200, 8.0, rng);
  PrunerConfig cfg;
  cfg.noise_enabled = true;
  GmmAction a = single({5.0, 5.0}, {3.0, 3.0});
  a.components[0].active = false;
  const long n = static_cast<long>(t.size()) / 2;
  const auto sel = select_prune_set(t, t.root(), a, n, cfg, 40, 40);
  const Vec2 f = resolved_noise_frequency(cfg, 40, 40);
  const double peak = gmm_max_density(a, 40, 40);
  auto score = [&](NodeId id) {
    const Cell c = t.node(id).cell;
    return apply_noise(cfg, f, {double(c.x), double(c.y)}, 0.0, peak);
  };
  std::vector<NodeId> ids = prunable_nodes(t, t.root());
  std::sort(ids.begin(), ids.end(), [&](NodeId x, NodeId y) {
    return score(x) != score(y) ? score(x) > score(y) : x < y;
  });
  ids.resize(static_cast<std::size_t>(n));
  EXPECT_EQ(sel.ids, ids);
  // Pure function of its inputs.
  EXPECT_EQ(select_prune_set(t, t.root(), a, n, cfg, 40, 40).ids, sel.ids);
}

TEST(SelectPruneSet, ZeroNoiseScaleIsBitIdenticalToTheBasePruner) {
  const GridMap m = open_map(40, 40, true);
  Rng rng(12);
  ExplorationTree t(m, {20, 20});
  grow(t, m, 200, 8.0, rng);
  GmmAction a = single({10.0, 30.0}, {4.0, 6.0}, 0.7);
  a.components.push_back({0.3, {25.0, 5.0}, {2.0, 3.0}, false});
  PrunerConfig base, zero;
  zero.noise_enabled = true;
  zero.noise_scale = 0.0;
  const long n = static_cast<long>(t.size()) / 3;
  const auto x = select_prune_set(t, t.root(), a, n, base, 40, 40);
  const auto y = select_prune_set(t, t.root(), a, n, zero, 40, 40);
  EXPECT_EQ(x.ids, y.ids);
  EXPECT_EQ(x.densities, y.densities);
}

TEST(RandomPruneSet, ExhaustiveEmptyAndSeeded) {
  const GridMap m = open_map(30, 1, true);
  const ExplorationTree t = row_tree(m, 20);
  Rng rng(1);
  auto all = random_prune_set(t, 5, 18, rng);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, prunable_nodes(t, 5));
  EXPECT_TRUE(random_prune_set(t, 5, 0, rng).empty());
  Rng a(99), b(99);
  EXPECT_EQ(random_prune_set(t, 5, 7, a), random_prune_set(t, 5, 7, b));
}

TEST(RandomPruneSet, ChiSquareUniformity) {
  const GridMap m = open_map(30, 1, true);
  const ExplorationTree t = row_tree(m, 20);  // 18 prunable ids besides root and anchor
  const NodeId anchor = 10;
  const auto ids = prunable_nodes(t, anchor);
  Rng rng(2025);
  const int draws = 100000;
  std::map<NodeId, long> counts;
  for (int i = 0; i < draws; ++i) {
    const auto pick = random_prune_set(t, anchor, 1, rng);
    ASSERT_EQ(pick.size(), 1u);
    ASSERT_NE(pick[0], anchor);
    ASSERT_NE(pick[0], t.root());
    ++counts[pick[0]];
  }
  const double expected = static_cast<double>(draws) / ids.size();
  double stat = 0.0;
  for (NodeId id : ids) stat += std::pow(counts[id] - expected, 2) / expected;
  const boost::math::chi_squared dist(static_cast<double>(ids.size() - 1));
  EXPECT_LT(stat, boost::math::quantile(dist, 0.99));
}
