#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "graphsparse/autodiff.hpp"
#include "graphsparse/observation.hpp"
#include "graphsparse/pruner.hpp"
#include "graphsparse/rng.hpp"

namespace graphsparse {

/// Architecture of the gated transformer actor-critic. Widths are the
/// effective (already scaled) values; see scaled().
struct PolicyConfig {
  // Observation geometry.
  int map_width = 250;
  int map_height = 250;
  int patch_size = 25;
  int channels = kObservationChannels;

  int embed_width = 1024;
  int n_layers = 3;
  int n_heads = 8;
  int head_size = 512;
  int pwff_size = 512;
  int layer_size = 1024;
  int memory_len = 400;
  int gmm_components = 8;
  std::vector<int> actor_hidden{6400, 1600, 512, 512, 512, 512};
  std::vector<int> critic_hidden{6400, 1600, 512, 512, 512, 512};
  double gate_bias_init = 2.0;
  double action_log_std_init = -0.5;
  /// Adds one gate logit per mixture component to the action vector.
  bool component_gates = false;
  /// Recorded for provenance; widths above are already multiplied by it.
  double scale_factor = 1.0;

  // Action decoding.
  double sigma_min = 1.0;
  /// Std of a component at raw value 0 is sigma_min + std_scale * extent * ln 2.
  double std_scale = 0.1;

  int n_tokens() const { return (map_width / patch_size) * (map_height / patch_size); }
  int token_dim() const { return patch_size * patch_size * channels; }
  int action_dim() const { return gmm_components * (component_gates ? 6 : 5); }

  /// Shrinks every width and the memory length by `factor`, keeping layer,
  /// head and component counts. Widths never drop below 1.
  PolicyConfig scaled(double factor) const;

  /// Throws std::invalid_argument naming the offending key.
  void validate() const;

  /// Stable text form used for checkpoint hashing.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Named dense tensors; gradients and optimizer moments share the layout.
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<ad::Matrix> tensors;

  std::size_t scalar_count() const;
  std::size_t index_of(const std::string& name) const;
  ParameterSet zeros_like() const;
  void set_zero();
  bool same_layout(const ParameterSet& other) const;
  friend bool operator==(const ParameterSet& a, const ParameterSet& b);
};

/// Per-layer cache of past layer inputs, at most memory_len rows each.
/// Stored as plain values: nothing upstream of the cache receives gradient.
struct EpisodicMemory {
  std::vector<ad::Matrix> layers;

  bool empty() const { return layers.empty() || layers[0].rows() == 0; }
  Eigen::Index length() const { return layers.empty() ? 0 : layers[0].rows(); }
  void clear() { layers.clear(); }
  friend bool operator==(const EpisodicMemory&, const EpisodicMemory&) = default;
};

struct PolicyOutput {
  Eigen::VectorXd action_mean;
  Eigen::VectorXd action_log_std;
  double value = 0.0;
  EpisodicMemory new_memory;
};

struct ActionSample {
  Eigen::VectorXd raw;
  double log_prob = 0.0;
};

class Policy {
 public:
  explicit Policy(PolicyConfig config);

  const PolicyConfig& config() const { return config_; }

  /// Seeded, deterministic initialization.
  ParameterSet init_params(std::uint64_t seed) const;

  struct Graph {
    ad::Var action_mean;  // 1 x action_dim
    ad::Var log_std;      // 1 x action_dim
    ad::Var value;        // 1 x 1
  };

  /// Records the forward pass on `tape`. Gradients flow into `grads` when it
  /// is non-null and the tape has gradients enabled. `next_memory`, when
  /// given, receives the updated cache. `layer_trace`, when given, receives
  /// the token features entering the first block and leaving every block.
  Graph build(ad::Tape& tape, const ParameterSet& params, ParameterSet* grads, const TokenSequence& tokens,
              const EpisodicMemory& memory, EpisodicMemory* next_memory = nullptr,
              std::vector<ad::Matrix>* layer_trace = nullptr) const;

  PolicyOutput forward(const ParameterSet& params, const TokenSequence& tokens, const EpisodicMemory& memory) const;

  /// Throws std::invalid_argument when params do not match this architecture.
  void check_params(const ParameterSet& params) const;

  struct GateIndex {
    std::size_t w_r, u_r, w_z, u_z, b_z, w_g, u_g;
  };
  struct LayerIndex {
    std::size_t ln1_gain, ln1_bias, w_q, w_k, w_v, w_rel, u_bias, v_bias, w_o, b_o;
    GateIndex gate1;
    std::size_t ln2_gain, ln2_bias, w_ff1, b_ff1, w_ff2, b_ff2;
    GateIndex gate2;
  };
  struct MlpIndex {
    std::vector<std::size_t> weights, biases;
  };

  const MlpIndex& critic_index() const { return critic_; }
  const MlpIndex& actor_index() const { return actor_; }

 private:
  struct Shape {
    std::string name;
    Eigen::Index rows, cols;
    enum class Init { kFanIn, kConst, kPosition } init;
    double value = 1.0;  // gain for kFanIn, fill value for kConst
  };

  std::size_t declare(std::string name, Eigen::Index rows, Eigen::Index cols, Shape::Init init, double value = 1.0);
  GateIndex declare_gate(const std::string& prefix);
  MlpIndex declare_mlp(const std::string& prefix, int input, const std::vector<int>& hidden, int output,
                       double output_gain);
  ad::Var gru_gate(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const GateIndex& idx, ad::Var x,
                   ad::Var y) const;
  ad::Var mlp(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const MlpIndex& idx, ad::Var x) const;
  ad::Var relative_attention(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const LayerIndex& li,
                             ad::Var normed, Eigen::Index mem_rows) const;

  PolicyConfig config_;
  std::vector<Shape> layout_;
  std::size_t embed_w_, embed_b_, pos_, in_proj_w_ = 0, in_proj_b_ = 0, final_gain_, final_bias_, log_std_;
  bool has_in_proj_ = false;
  std::vector<LayerIndex> layers_;
  MlpIndex actor_, critic_;
  ad::Matrix relative_table_;  // row k: sinusoid of signed distance k - (n_tokens - 1)
};

/// Maps an unconstrained action vector onto a valid mixture: softmax weights,
/// sigmoid-squashed means on [0, extent-1], softplus stds above sigma_min,
/// and gates open iff sigmoid(logit) >= 0.5.
GmmAction to_gmm(const Eigen::VectorXd& raw, const PolicyConfig& config);

double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& raw);
double gaussian_entropy(const Eigen::VectorXd& log_std);

/// Diagonal Gaussian log density recorded on a tape (raw is a constant row).
ad::Var gaussian_log_prob(ad::Var mean, ad::Var log_std, const Eigen::VectorXd& raw);
ad::Var gaussian_entropy(ad::Var log_std);

/// raw ~ N(mean, exp(log_std)^2) per coordinate; `deterministic` returns the mean.
ActionSample sample_action(const PolicyOutput& out, Rng& rng, bool deterministic = false);

}  // namespace graphsparse
