#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphsparse/config.hpp"

namespace graphsparse {

enum class EvalStrategy { kNone, kRandom, kLearned, kLearnedNoisy };

const char* strategy_name(EvalStrategy s);
/// Throws std::invalid_argument for anything but none/random/learned/learned-noisy.
EvalStrategy parse_strategy(const std::string& name);

struct EvalSpec {
  std::vector<EvalStrategy> strategies{EvalStrategy::kNone};
  int n_simulations = 600;
  int step_budget = 0;  // pruning rounds per episode; 0 means max_robot_moves
  std::uint64_t seed = 1000;
  std::string checkpoint;  // required by the learned strategies unless untrained
  bool untrained = false;  // learned strategies use freshly initialised weights

  bool needs_policy() const;
};

/// Seed of evaluation episode `i`; identical for every strategy.
std::uint64_t eval_episode_seed(std::uint64_t eval_seed, long episode);

struct EpisodeRecord {
  long episode = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double coverage = 0.0;
  std::size_t tree_size = 0;  // at episode end
  long pruned_total = 0;
  double reward_sum = 0.0;
  double reward_mean = 0.0;  // per step
  Termination cause = Termination::kNone;
};

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample std, n - 1 denominator
  std::string warning;
};

/// Mean and sample std. A single value gives std 0 and sets `warning`;
/// an empty set throws std::invalid_argument.
Summary aggregate(const std::vector<double>& values);

struct StrategyReport {
  EvalStrategy strategy = EvalStrategy::kNone;
  std::vector<EpisodeRecord> episodes;
  Summary coverage;
  Summary tree_size;
  Summary reward_mean;
  /// 1 - mean(tree / unpruned twin tree), paired per episode. Present when the
  /// "none" strategy ran in the same evaluation and this one prunes.
  bool has_reduction = false;
  double tree_reduction = 0.0;
};

struct EvalReport {
  EvalSpec spec;
  int step_budget = 0;  // resolved
  double prune_fraction = 0.0;
  std::vector<StrategyReport> strategies;
};

class EvalObserver {
 public:
  virtual ~EvalObserver() = default;
  virtual void on_step(EvalStrategy, long /*episode*/, int /*step*/, const StepResult&) {}
  virtual void on_episode(EvalStrategy, const EpisodeRecord&) {}
};

/// Runs every strategy on the same episode seeds. Throws std::invalid_argument
/// on a missing checkpoint or a seed collision with the training run.
EvalReport run_eval(const RunConfig& config, const EvalSpec& spec, EvalObserver* observer = nullptr);

/// Recomputes the summaries and reductions from the per-episode records.
void summarize(EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);

struct NoiseRatios {
  double reward_ratio = 0.0;    // noisy / base, mean per-step reward
  double coverage_ratio = 0.0;  // noisy / base, mean final coverage
  EvalReport base, noisy;
};

/// Untrained policy with and without gates plus noise on shared seeds.
NoiseRatios noise_variant_ratios(const RunConfig& config, int n_simulations, std::uint64_t seed);

}  // namespace graphsparse
