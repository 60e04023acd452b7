#pragma once

#include <vector>

#include "graphsparse/tree.hpp"

namespace graphsparse {

struct RewardConstants {
  double attempt_penalty = 5.0;  // lambda_A
  int max_moves = 100;           // lambda_M
  double terminal_scale = 8.0;   // lambda_B
  double discount = 0.99;        // gamma

  void validate() const;
};

struct NodeReward {
  double frontier = 0.0;   // r_f
  double structure = 0.0;  // r_c
};

struct StepRewardInput {
  std::vector<NodeClass> pruned;  // classes captured before the prune round
  int attempts = 0;               // N_a
  bool terminal = false;
  double coverage = 0.0;          // C, read only when terminal
};

struct RewardBreakdown {
  double mean_frontier = 0.0;
  double mean_structure = 0.0;
  double penalty = 0.0;
  double bonus = 0.0;
  double timestep = 0.0;  // R_t (0 for an empty prune set)
  double total = 0.0;     // R
};

NodeReward node_reward(const NodeClass& c);

/// R_t = mean over P of (r_f + r_c) - lambda_A * N_a / (2 lambda_M).
/// Throws std::invalid_argument for an empty prune set.
double timestep_reward(const StepRewardInput& in, const RewardConstants& k);

/// B = lambda_B * (e^C - 1).
double terminal_bonus(double coverage, const RewardConstants& k);

/// R = R_t + [terminal] * B. Propagates the empty-set error of timestep_reward.
double total_reward(const StepRewardInput& in, const RewardConstants& k);

/// Environment-facing variant: an empty prune set contributes R_t = 0 instead
/// of an error, and every component is reported for logging.
RewardBreakdown step_reward(const StepRewardInput& in, const RewardConstants& k);

}  // namespace graphsparse
