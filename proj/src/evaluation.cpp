#include "graphsparse/evaluation.hpp"

#include <cmath>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <unordered_set>

namespace graphsparse {

using nlohmann::json;

const char* strategy_name(EvalStrategy s) {
  switch (s) {
    case EvalStrategy::kNone:
      return "none";
    case EvalStrategy::kRandom:
      return "random";
    case EvalStrategy::kLearned:
      return "learned";
    case EvalStrategy::kLearnedNoisy:
      return "learned-noisy";
  }
  return "unknown";
}

EvalStrategy parse_strategy(const std::string& name) {
  for (auto s : {EvalStrategy::kNone, EvalStrategy::kRandom, EvalStrategy::kLearned, EvalStrategy::kLearnedNoisy})
    if (name == strategy_name(s)) return s;
  throw std::invalid_argument("unknown strategy '" + name + "' (expected none, random, learned or learned-noisy)");
}

bool EvalSpec::needs_policy() const {
  for (auto s : strategies)
    if (s == EvalStrategy::kLearned || s == EvalStrategy::kLearnedNoisy) return true;
  return false;
}

std::uint64_t eval_episode_seed(std::uint64_t eval_seed, long episode) {
  return derive_seed(eval_seed, {0x6576616cULL, static_cast<std::uint64_t>(episode)});
}

Summary aggregate(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate: empty record set");
  Summary s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n == 1) {
    s.warning = "single record: std reported as 0";
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

namespace {

struct LearnedSetup {
  PolicyConfig policy_config;
  std::optional<Policy> policy;
  ParameterSet params;
};

LearnedSetup make_policy(const RunConfig& config, const EvalSpec& spec, bool noisy) {
  LearnedSetup s;
  s.policy_config = config.train.policy;
  // An untrained noisy policy gets gate outputs; a checkpoint keeps its own layout.
  if (noisy && spec.untrained) s.policy_config.component_gates = true;
  s.policy.emplace(s.policy_config);
  if (spec.untrained) {
    s.params = s.policy->init_params(derive_seed(config.train.seed, {0x696e6974ULL}));
  } else {
    s.params = load_policy_params(spec.checkpoint, *s.policy);
  }
  return s;
}

void check_seeds(const RunConfig& config, const EvalSpec& spec) {
  if (spec.needs_policy() && spec.seed == config.train.seed)
    throw std::invalid_argument("seed collision: eval seed " + std::to_string(spec.seed) +
                                " equals the training seed; evaluation maps must be held out");
  std::unordered_set<std::uint64_t> seen;
  for (long i = 0; i < spec.n_simulations; ++i)
    if (!seen.insert(eval_episode_seed(spec.seed, i)).second)
      throw std::invalid_argument("seed collision: two evaluation episodes share a seed");
}

StrategyReport run_strategy(const RunConfig& config, const EvalSpec& spec, EvalStrategy strategy, int budget,
                            EvalObserver* observer) {
  SimConfig sim = config.train.sim;
  const bool learned = strategy == EvalStrategy::kLearned || strategy == EvalStrategy::kLearnedNoisy;
  const bool noisy = strategy == EvalStrategy::kLearnedNoisy;
  if (noisy) sim.pruner.noise_enabled = true;
  LearnedSetup setup;
  if (learned) setup = make_policy(config, spec, noisy);

  StrategyReport rep;
  rep.strategy = strategy;
  const PruneStrategy prune = strategy == EvalStrategy::kNone     ? PruneStrategy::kNone
                              : strategy == EvalStrategy::kRandom ? PruneStrategy::kRandom
                                                                  : PruneStrategy::kMixture;
  for (long i = 0; i < spec.n_simulations; ++i) {
    EpisodeRecord rec;
    rec.episode = i;
    rec.seed = eval_episode_seed(spec.seed, i);
    Simulator env(sim, rec.seed);
    EpisodicMemory memory;
    StepResult last;
    while (!env.done() && env.steps() < budget) {
      GmmAction action;
      if (learned) {
        PolicyOutput out = setup.policy->forward(setup.params, env.observation(), memory);
        action = to_gmm(out.action_mean, setup.policy_config);
        memory = std::move(out.new_memory);
      }
      const int step = env.steps();
      last = env.step(prune, learned ? &action : nullptr);
      rec.reward_sum += last.reward.total;
      rec.pruned_total += last.pruned;
      if (observer) observer->on_step(strategy, i, step, last);
    }
    rec.steps = env.steps();
    rec.coverage = rec.steps ? last.coverage : coverage(env.map());
    rec.tree_size = rec.steps ? last.tree_size : env.tree().size();
    rec.reward_mean = rec.steps ? rec.reward_sum / rec.steps : 0.0;
    rec.cause = last.cause;
    if (observer) observer->on_episode(strategy, rec);
    rep.episodes.push_back(rec);
  }
  return rep;
}

json summary_json(const Summary& s) {
  json j{{"n", s.n}, {"mean", s.mean}, {"std", s.std}};
  if (!s.warning.empty()) j["warning"] = s.warning;
  return j;
}

}  // namespace

void summarize(EvalReport& report) {
  const StrategyReport* none = nullptr;
  for (const auto& r : report.strategies)
    if (r.strategy == EvalStrategy::kNone) none = &r;
  for (auto& r : report.strategies) {
    std::vector<double> cov, tree, rew;
    for (const auto& e : r.episodes) {
      cov.push_back(e.coverage);
      tree.push_back(static_cast<double>(e.tree_size));
      rew.push_back(e.reward_mean);
    }
    r.coverage = aggregate(cov);
    r.tree_size = aggregate(tree);
    r.reward_mean = aggregate(rew);
    r.has_reduction = false;
    if (none && r.strategy != EvalStrategy::kNone && none->episodes.size() == r.episodes.size()) {
      double ratio_sum = 0.0;
      for (std::size_t i = 0; i < r.episodes.size(); ++i)
        ratio_sum += static_cast<double>(r.episodes[i].tree_size) /
                     static_cast<double>(std::max<std::size_t>(1, none->episodes[i].tree_size));
      r.has_reduction = true;
      r.tree_reduction = 1.0 - ratio_sum / static_cast<double>(r.episodes.size());
    }
  }
}

EvalReport run_eval(const RunConfig& config, const EvalSpec& spec, EvalObserver* observer) {
  if (spec.strategies.empty()) throw std::invalid_argument("eval: no strategy given");
  if (spec.n_simulations < 1) throw std::invalid_argument("eval: n_simulations must be >= 1");
  if (spec.step_budget < 0) throw std::invalid_argument("eval: step budget must be >= 0");
  if (spec.needs_policy() && !spec.untrained) {
    if (spec.checkpoint.empty())
      throw std::invalid_argument("eval: the learned strategies need --checkpoint (or --untrained)");
    if (!std::filesystem::exists(spec.checkpoint))
      throw std::invalid_argument("eval: checkpoint not found: " + spec.checkpoint);
  }
  check_seeds(config, spec);

  EvalReport report;
  report.spec = spec;
  report.step_budget = spec.step_budget > 0 ? spec.step_budget : config.train.sim.reward.max_moves;
  report.prune_fraction = config.train.sim.pruner.prune_fraction;
  for (auto s : spec.strategies) report.strategies.push_back(run_strategy(config, spec, s, report.step_budget, observer));
  summarize(report);
  return report;
}

json report_to_json(const EvalReport& report) {
  json strategies = json::array();
  for (const auto& r : report.strategies) {
    json eps = json::array();
    for (const auto& e : r.episodes)
      eps.push_back({{"episode", e.episode},
                     {"seed", e.seed},
                     {"steps", e.steps},
                     {"coverage", e.coverage},
                     {"tree_size", e.tree_size},
                     {"pruned_total", e.pruned_total},
                     {"reward_sum", e.reward_sum},
                     {"reward_mean", e.reward_mean},
                     {"termination", termination_name(e.cause)}});
    json s{{"strategy", strategy_name(r.strategy)},
           {"coverage", summary_json(r.coverage)},
           {"tree_size", summary_json(r.tree_size)},
           {"reward_mean", summary_json(r.reward_mean)},
           {"episodes", eps}};
    if (r.has_reduction) s["tree_reduction_vs_none"] = r.tree_reduction;
    strategies.push_back(s);
  }
  json names = json::array();
  for (auto s : report.spec.strategies) names.push_back(strategy_name(s));
  return json{{"n_simulations", report.spec.n_simulations},
              {"step_budget", report.step_budget},
              {"seed", report.spec.seed},
              {"checkpoint", report.spec.checkpoint},
              {"untrained", report.spec.untrained},
              {"prune_fraction", report.prune_fraction},
              {"strategy_names", names},
              {"strategies", strategies}};
}

NoiseRatios noise_variant_ratios(const RunConfig& config, int n_simulations, std::uint64_t seed) {
  EvalSpec spec;
  spec.n_simulations = n_simulations;
  spec.seed = seed;
  spec.untrained = true;
  NoiseRatios out;
  spec.strategies = {EvalStrategy::kLearned};
  out.base = run_eval(config, spec);
  spec.strategies = {EvalStrategy::kLearnedNoisy};
  out.noisy = run_eval(config, spec);
  const auto& b = out.base.strategies[0];
  const auto& n = out.noisy.strategies[0];
  out.reward_ratio = n.reward_mean.mean / b.reward_mean.mean;
  out.coverage_ratio = n.coverage.mean / b.coverage.mean;
  return out;
}

}  // namespace graphsparse
