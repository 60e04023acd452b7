#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphsparse/policy.hpp"
#include "graphsparse/rng.hpp"
#include "graphsparse/simulator.hpp"

namespace graphsparse {

struct PpoConfig {
  double learning_rate = 3e-4;
  double discount = 0.99;  // gamma
  double gae_lambda = 0.95;
  double clip = 0.1;
  double value_coeff = 0.5;
  double entropy_coeff = 0.01;
  int update_every = 512;  // environment steps per update window
  int k_epochs = 4;
  int n_minibatch = 4;
  double target_kl = 0.03;
  long total_timesteps = 1'000'000;
  std::string optimizer = "adam";  // or "rmsprop"
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double optimizer_eps = 1e-8;

  void validate() const;
};

struct Transition {
  TokenSequence observation;
  std::size_t memory_index = 0;  // into RolloutBuffer::memories
  Eigen::VectorXd raw_action;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  Termination cause = Termination::kNone;
  int env = 0;
};

/// One update window, interleaved round-robin across environments.
struct RolloutBuffer {
  std::vector<Transition> steps;
  std::vector<EpisodicMemory> memories;  // memory each step was conditioned on
  std::vector<double> bootstrap;         // per env: V(s) after its last step, 0 if that step ended an episode

  void clear() {
    steps.clear();
    memories.clear();
    bootstrap.clear();
  }
};

struct Advantages {
  std::vector<double> advantages;  // raw, as used for the returns
  std::vector<double> returns;
};

/// Single trajectory: delta_t = r_t + gamma V_{t+1} (1 - d_t) - V_t and
/// A_t = delta_t + gamma lambda (1 - d_t) A_{t+1}, with V_T = bootstrap.
Advantages compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                       const std::vector<bool>& dones, double bootstrap, double gamma, double lambda);

/// Per-environment GAE over an interleaved buffer; results in buffer order.
Advantages compute_gae(const RolloutBuffer& buffer, double gamma, double lambda);

/// Mean 0, std 1 (population std; a constant vector maps to zeros).
std::vector<double> normalize(const std::vector<double>& v);

/// min(rho A, clip(rho, 1-eps, 1+eps) A). Gradient w.r.t. rho is A when the
/// unclipped term is selected and 0 otherwise.
ad::Var clipped_surrogate(ad::Var ratio, double advantage, double eps);

class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(const PpoConfig& config, const ParameterSet& like);

  void step(ParameterSet& params, const ParameterSet& grads, double lr);

  const std::string& kind() const { return kind_; }
  long steps() const { return t_; }
  const ParameterSet& first_moment() const { return m_; }
  const ParameterSet& second_moment() const { return v_; }
  void restore(long t, ParameterSet m, ParameterSet v);

 private:
  std::string kind_ = "adam";
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  ParameterSet m_, v_;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;      // mean over evaluated minibatches
  double clip_fraction = 0.0;
  double first_approx_kl = 0.0;  // first minibatch of the first epoch
  double first_max_ratio_error = 0.0;  // max |rho - 1| there
  int minibatches = 0;          // evaluated, including one that triggered the stop
  int steps_applied = 0;
  bool early_stopped = false;
};

/// PPO-clip over the buffer. Never mutates the buffer. Throws
/// std::runtime_error on a non-finite loss.
UpdateStats ppo_update(const Policy& policy, ParameterSet& params, Optimizer& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& config, Rng& shuffle_rng);

struct TrainConfig {
  SimConfig sim;
  PolicyConfig policy;
  PpoConfig ppo;
  std::uint64_t seed = 0;
  int n_envs = 1;
  int checkpoint_every = 0;  // updates; 0 disables periodic checkpoints
  std::string checkpoint_dir;

  void validate() const;
  /// Hash of everything that affects the trajectory of a run.
  std::uint64_t run_hash() const;
};

struct StepLog {
  long global_step = 0;
  int env = 0;
  long episode = 0;
  int episode_step = 0;
  double value = 0.0;
  double log_prob = 0.0;
  StepResult result;
};

struct EpisodeLog {
  int env = 0;
  long episode = 0;
  std::uint64_t seed = 0;
  int steps = 0;
  double reward_sum = 0.0;
  double reward_mean = 0.0;
  double coverage = 0.0;
  std::size_t tree_size = 0;
  long pruned_total = 0;
  Termination cause = Termination::kNone;
};

struct UpdateLog {
  long global_step = 0;
  long update_idx = 0;
  UpdateStats stats;
  int episodes = 0;               // finished inside this window
  double mean_episode_reward = 0.0;  // mean over those episodes of their per-step mean reward (NaN if none)
  double mean_coverage = 0.0;        // mean final coverage of those episodes (NaN if none)
  double tree_size_mean = 0.0;       // over every step of the window
  double prune_count_mean = 0.0;     // nodes pruned per step over the window
};

class TrainObserver {
 public:
  virtual ~TrainObserver() = default;
  virtual void on_step(const StepLog&) {}
  virtual void on_episode(const EpisodeLog&) {}
  virtual void on_update(const UpdateLog&) {}
  virtual void on_checkpoint(const std::string& /*path*/, long /*global_step*/) {}
};

std::uint64_t training_episode_seed(std::uint64_t run_seed, int env, long episode);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  /// Collects one window and updates. Returns the window summary.
  UpdateLog run_update(TrainObserver* observer = nullptr);

  /// Runs updates until global_step reaches `until` (or total_timesteps when
  /// negative), writing periodic checkpoints.
  void train(TrainObserver* observer = nullptr, long until = -1);

  void save_checkpoint(const std::string& path) const;
  /// Restores full trainer state. Throws std::runtime_error when the file was
  /// written by a different configuration.
  void load_checkpoint(const std::string& path);

  const TrainConfig& config() const { return config_; }
  const Policy& policy() const { return policy_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }
  const Optimizer& optimizer() const { return optimizer_; }
  long global_step() const { return global_step_; }
  long update_idx() const { return update_idx_; }
  const RolloutBuffer& last_buffer() const { return buffer_; }

 private:
  struct EnvSlot {
    Simulator sim;
    EpisodicMemory memory;
    Rng action_rng;
    long episode = 0;
    double reward_sum = 0.0;
    long pruned_total = 0;
  };

  void collect(TrainObserver* observer, UpdateLog& log);

  TrainConfig config_;
  Policy policy_;
  ParameterSet params_;
  Optimizer optimizer_;
  std::vector<EnvSlot> envs_;
  Rng shuffle_rng_;
  long global_step_ = 0;
  long update_idx_ = 0;
  RolloutBuffer buffer_;
};

/// Policy-only checkpoint access for evaluation. Throws std::runtime_error on
/// a config-hash mismatch or a corrupt file.
ParameterSet load_policy_params(const std::string& path, const Policy& policy);

}  // namespace graphsparse
