#include "graphsparse/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace graphsparse {

void RewardConstants::validate() const {
  if (!(attempt_penalty > 0.0)) throw std::invalid_argument("invalid reward config 'attempt_penalty': must be > 0");
  if (!(terminal_scale > 0.0)) throw std::invalid_argument("invalid reward config 'terminal_bonus_scale': must be > 0");
  if (max_moves < 1) throw std::invalid_argument("invalid reward config 'max_robot_moves': must be >= 1");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("invalid reward config 'discount_factor': must lie in [0,1)");
}

NodeReward node_reward(const NodeClass& c) {
  return {c.is_frontier ? -1.0 : 1.0, (c.is_leaf || c.is_split) ? -1.0 : 1.0};
}

double timestep_reward(const StepRewardInput& in, const RewardConstants& k) {
  if (in.pruned.empty()) throw std::invalid_argument("timestep_reward: prune set must be non-empty");
  double sum = 0.0;
  for (const auto& c : in.pruned) {
    const auto r = node_reward(c);
    sum += r.frontier + r.structure;
  }
  return sum / static_cast<double>(in.pruned.size()) - k.attempt_penalty * in.attempts / (2.0 * k.max_moves);
}

double terminal_bonus(double coverage, const RewardConstants& k) { return k.terminal_scale * std::expm1(coverage); }

double total_reward(const StepRewardInput& in, const RewardConstants& k) {
  return timestep_reward(in, k) + (in.terminal ? terminal_bonus(in.coverage, k) : 0.0);
}

RewardBreakdown step_reward(const StepRewardInput& in, const RewardConstants& k) {
  RewardBreakdown b;
  if (!in.pruned.empty()) {
    for (const auto& c : in.pruned) {
      const auto r = node_reward(c);
      b.mean_frontier += r.frontier;
      b.mean_structure += r.structure;
    }
    b.mean_frontier /= static_cast<double>(in.pruned.size());
    b.mean_structure /= static_cast<double>(in.pruned.size());
    b.penalty = k.attempt_penalty * in.attempts / (2.0 * k.max_moves);
    b.timestep = timestep_reward(in, k);
  }
  b.bonus = in.terminal ? terminal_bonus(in.coverage, k) : 0.0;
  b.total = b.timestep + b.bonus;
  return b;
}

}  // namespace graphsparse
