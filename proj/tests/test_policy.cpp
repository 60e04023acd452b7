#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gradcheck.hpp"
#include "graphsparse/policy.hpp"

using namespace graphsparse;
using graphsparse::testing::check_gradients;
using graphsparse::testing::random_tokens;
using graphsparse::testing::Readout;

namespace {

// Width-16 model on a 10x10 map with four 5x5 patches.
PolicyConfig small_config() {
  PolicyConfig c;
  c.map_width = c.map_height = 10;
  c.patch_size = 5;
  c.embed_width = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.head_size = 4;
  c.pwff_size = 8;
  c.layer_size = 16;
  c.memory_len = 3;
  c.gmm_components = 2;
  c.actor_hidden = {12, 8};
  c.critic_hidden = {12, 8};
  return c;
}

PolicyOutput output_with(const Eigen::VectorXd& mean, double log_std) {
  PolicyOutput o;
  o.action_mean = mean;
  o.action_log_std = Eigen::VectorXd::Constant(mean.size(), log_std);
  return o;
}

}  // namespace

TEST(ToGmm, ZeroVectorIsSymmetric) {
  PolicyConfig c;
  c.map_width = 100;
  c.map_height = 60;
  const GmmAction a = to_gmm(Eigen::VectorXd::Zero(c.action_dim()), c);
  ASSERT_EQ(a.size(), 8u);
  for (const auto& k : a.components) {
    EXPECT_DOUBLE_EQ(k.weight, 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(k.mean[0], 49.5);
    EXPECT_DOUBLE_EQ(k.mean[1], 29.5);
    EXPECT_NEAR(k.stddev[0], c.sigma_min + c.std_scale * 100 * std::numbers::ln2, 1e-12);
    EXPECT_NEAR(k.stddev[1], c.sigma_min + c.std_scale * 60 * std::numbers::ln2, 1e-12);
    EXPECT_TRUE(k.active);
  }
}

TEST(ToGmm, WeightLogitFixtureAndEdgeLimit) {
  PolicyConfig c;
  c.map_width = c.map_height = 50;
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(c.action_dim());
  raw(0) = std::log(2.0);
  raw(1) = 1e300;   // mean logit toward +inf
  raw(2) = -1e300;  // and toward -inf
  const GmmAction a = to_gmm(raw, c);
  EXPECT_NEAR(a.components[0].weight, 2.0 / 9.0, 1e-15);
  for (std::size_t k = 1; k < 8; ++k) EXPECT_NEAR(a.components[k].weight, 1.0 / 9.0, 1e-15);
  EXPECT_EQ(a.components[0].mean[0], 49.0);
  EXPECT_EQ(a.components[0].mean[1], 0.0);
}

TEST(ToGmm, ArbitraryRawVectorsDecodeToValidMixtures) {
  PolicyConfig c;
  c.map_width = 80;
  c.map_height = 40;
  c.component_gates = true;
  Rng rng(9);
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::VectorXd raw(c.action_dim());
    const double mag = std::pow(10.0, rng.uniform(-3, 300));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = rng.uniform(-1, 1) * (trial % 2 ? mag : 5.0);
    const GmmAction a = to_gmm(raw, c);
    double total = 0.0;
    for (const auto& k : a.components) {
      ASSERT_TRUE(std::isfinite(k.weight) && k.weight >= 0.0);
      total += k.weight;
      for (int ax = 0; ax < 2; ++ax) {
        ASSERT_TRUE(std::isfinite(k.mean[ax]) && std::isfinite(k.stddev[ax]));
        ASSERT_GE(k.mean[ax], 0.0);
        ASSERT_LE(k.mean[ax], (ax == 0 ? 80 : 40) - 1.0);
        ASSERT_GE(k.stddev[ax], c.sigma_min);
      }
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Gaussian, EntropyAndLogProbFormulas) {
  EXPECT_NEAR(gaussian_entropy(Eigen::VectorXd::Zero(1)), 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-15);
  EXPECT_NEAR(gaussian_entropy(Eigen::VectorXd::Zero(1)), 1.41894, 1e-5);
  Rng rng(1);
  Eigen::VectorXd ls(7);
  for (Eigen::Index i = 0; i < 7; ++i) ls(i) = rng.uniform(-2, 1);
  const Eigen::VectorXd doubled = (ls.array() + std::log(2.0)).matrix();
  EXPECT_NEAR(gaussian_entropy(doubled) - gaussian_entropy(ls), 7 * std::log(2.0), 1e-12);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(5, 0.3);
  EXPECT_NEAR(gaussian_log_prob(mean, Eigen::VectorXd::Zero(5), mean), -2.5 * std::log(2 * std::numbers::pi), 1e-12);
}

TEST(SampleAction, ZeroVarianceLimitReturnsTheMean) {
  Eigen::VectorXd mean(4);
  mean << 0.5, -1.0, 3.0, 2.0;
  Rng rng(3);
  EXPECT_EQ(sample_action(output_with(mean, -60.0), rng).raw, mean);
  EXPECT_EQ(sample_action(output_with(mean, 0.0), rng, true).raw, mean);
}

TEST(SampleAction, EmpiricalMeanWithinThreeStandardErrors) {
  Eigen::VectorXd mean(6);
  mean << 0.5, -1.0, 3.0, 2.0, 0.0, -7.5;
  const PolicyOutput out = output_with(mean, std::log(0.7));
  Rng rng(11);
  const int n = 100000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(6);
  for (int i = 0; i < n; ++i) {
    const auto s = sample_action(out, rng);
    acc += s.raw;
    if (i < 200) ASSERT_NEAR(s.log_prob, gaussian_log_prob(out.action_mean, out.action_log_std, s.raw), 1e-12);
  }
  const double se = 0.7 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_LT(std::abs(acc(i) / n - mean(i)), 3 * se) << i;
}

TEST(Policy, SameSeedSameParamsAndPureForward) {
  const Policy p(small_config());
  EXPECT_TRUE(p.init_params(5) == p.init_params(5));
  EXPECT_FALSE(p.init_params(5) == p.init_params(6));
  Rng rng(2);
  const auto params = p.init_params(5);
  const auto tokens = random_tokens(p.config(), rng);
  const auto a = p.forward(params, tokens, {});
  const auto b = p.forward(params, tokens, {});
  EXPECT_EQ(a.action_mean, b.action_mean);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.new_memory, b.new_memory);
  EXPECT_EQ(a.action_mean.size(), p.config().action_dim());
  for (Eigen::Index i = 0; i < a.action_mean.size(); ++i) EXPECT_EQ(a.action_log_std(i), p.config().action_log_std_init);
}

TEST(Policy, ZeroMemoryLengthIsMemoryless) {
  PolicyConfig c = small_config();
  c.memory_len = 0;
  const Policy p(c);
  Rng rng(4);
  const auto params = p.init_params(1);
  const auto tokens = random_tokens(c, rng);
  const auto first = p.forward(params, tokens, {});
  EXPECT_TRUE(first.new_memory.empty());
  const auto second = p.forward(params, tokens, first.new_memory);
  EXPECT_EQ(first.action_mean, second.action_mean);
  EXPECT_EQ(first.value, second.value);
}

TEST(Policy, MemoryIsConsumedAndBounded) {
  const Policy p(small_config());
  Rng rng(5);
  const auto params = p.init_params(2);
  const auto tokens = random_tokens(p.config(), rng);
  auto out = p.forward(params, tokens, {});
  const auto next = p.forward(params, tokens, out.new_memory);
  EXPECT_NE(out.action_mean, next.action_mean);
  EpisodicMemory mem;
  for (int i = 0; i < 5; ++i) {
    mem = p.forward(params, random_tokens(p.config(), rng), mem).new_memory;
    ASSERT_EQ(mem.layers.size(), static_cast<std::size_t>(p.config().n_layers));
    ASSERT_LE(mem.length(), p.config().memory_len);
    ASSERT_EQ(mem.layers[0].cols(), p.config().layer_size);
  }
}

TEST(Policy, StrongGateBiasMakesBlocksNearIdentity) {
  PolicyConfig c = small_config();
  c.gate_bias_init = 20.0;
  const Policy p(c);
  Rng rng(6);
  const auto params = p.init_params(3);
  const auto tokens = random_tokens(c, rng);
  ad::Tape tape(false);
  std::vector<ad::Matrix> trace;
  p.build(tape, params, nullptr, tokens, {}, nullptr, &trace);
  ASSERT_EQ(trace.size(), static_cast<std::size_t>(c.n_layers) + 1);
  for (std::size_t l = 1; l < trace.size(); ++l)
    EXPECT_LT((trace[l] - trace[l - 1]).cwiseAbs().maxCoeff(), 1e-6) << "block " << l;
  // Default bias leaves room to move.
  const Policy q(small_config());
  std::vector<ad::Matrix> loose;
  ad::Tape t2(false);
  q.build(t2, q.init_params(3), nullptr, tokens, {}, nullptr, &loose);
  EXPECT_GT((loose[1] - loose[0]).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Policy, CriticBiasGradientIsValueResidual) {
  const Policy p(small_config());
  Rng rng(7);
  const auto params = p.init_params(4);
  const auto tokens = random_tokens(p.config(), rng);
  const double y = 0.75;
  ParameterSet grads = params.zeros_like();
  ad::Tape tape(true);
  const auto g = p.build(tape, params, &grads, tokens, {});
  const ad::Var loss = ad::scale(ad::square(ad::add_scalar(g.value, -y)), 0.5);
  tape.backward(loss);
  const std::size_t bias = p.critic_index().biases.back();
  ASSERT_EQ(grads.tensors[bias].size(), 1);
  EXPECT_NEAR(grads.tensors[bias](0, 0), g.value.scalar() - y, 1e-14);
}

TEST(Policy, GradientsMatchFiniteDifferences) {
  const Policy p(small_config());
  Rng rng(8);
  const auto params = p.init_params(9);
  const auto tokens = random_tokens(p.config(), rng);
  const auto memory = p.forward(params, random_tokens(p.config(), rng), {}).new_memory;
  const Readout r(p.config().action_dim(), rng);
  const auto result = check_gradients(p, params, tokens, memory, r, 3);
  EXPECT_GT(result.checked, 500u);
  EXPECT_LT(result.max_rel_error, 1e-4) << result.worst;
}

TEST(Policy, RejectsMismatchedParameters) {
  const Policy p(small_config());
  PolicyConfig other = small_config();
  other.embed_width = 8;
  EXPECT_THROW(p.check_params(Policy(other).init_params(1)), std::invalid_argument);
}

TEST(PolicyConfig, ScalingKeepsStructure) {
  PolicyConfig base;
  base.map_width = base.map_height = 50;
  for (double f : {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}) {
    const PolicyConfig c = base.scaled(f);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.n_layers, base.n_layers);
    EXPECT_EQ(c.n_heads, base.n_heads);
    EXPECT_EQ(c.gmm_components, base.gmm_components);
    EXPECT_EQ(c.actor_hidden.size(), base.actor_hidden.size());
    EXPECT_DOUBLE_EQ(c.scale_factor, f);
    EXPECT_EQ(c.embed_width, static_cast<int>(std::max(1.0, std::round(1024 * f))));
  }
  EXPECT_EQ(base.scaled(1.0 / 64).embed_width, 16);
  EXPECT_THROW(base.scaled(0.0), std::invalid_argument);
}

TEST(PolicyConfig, ForwardRunsAcrossScales) {
  PolicyConfig base;
  base.map_width = base.map_height = 50;  // four 25x25 patches
  Rng rng(10);
  // Full width (1.0) allocates ~10^8 parameters; the structural test above covers it.
  for (double f : {1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4}) {
    const Policy p(base.scaled(f));
    const auto params = p.init_params(1);
    const auto out = p.forward(params, random_tokens(p.config(), rng), {});
    ASSERT_TRUE(out.action_mean.allFinite()) << f;
    ASSERT_TRUE(std::isfinite(out.value)) << f;
  }
}
