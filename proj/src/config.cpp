#include "graphsparse/config.hpp"

#include <fstream>

namespace graphsparse {

using nlohmann::json;

namespace {

json paper_profile() {
  return json{
      {"profile", "paper"},
      {"seed", 0},
      // PPO
      {"learning_rate", 3e-4},
      {"discount_factor", 0.99},
      {"gae_lambda", 0.95},
      {"clip_parameter", 0.1},
      {"value_function_coeff", 0.5},
      {"entropy_coeff", 0.01},
      {"update_frequency", 512},
      {"k_epochs", 4},
      {"num_minibatch", 4},
      {"target_kl", 0.03},
      {"total_timesteps", 1000000},
      {"optimizer", "adam"},
      {"adam_beta1", 0.9},
      {"adam_beta2", 0.999},
      {"optimizer_eps", 1e-8},
      // Policy, full widths
      {"gtrxl_layer_size", 1024},
      {"gtrxl_layers", 3},
      {"attn_heads", 8},
      {"attn_head_size", 512},
      {"pwff_size", 512},
      {"gtrxl_mem_len", 400},
      {"num_gmm_components", 8},
      {"hidden_layers_actor", {6400, 1600, 512, 512, 512, 512}},
      {"hidden_layers_critic", {6400, 1600, 512, 512, 512, 512}},
      {"embed_width", 1024},
      {"gate_bias_init", 2.0},
      {"action_log_std_init", -0.5},
      {"component_gates", false},
      {"scale_factor", 1.0},
      {"std_scale", 0.1},
      // Simulation
      {"env_dimensions", {250, 250}},
      {"max_robot_moves", 100},
      {"max_rrt_growth_attempts", 100},
      // Simulation design defaults
      {"obstacle_count_range", {8, 16}},
      {"obstacle_size_range", {10, 50}},
      {"fov_radius", 25},
      {"min_reachable_fraction", 0.25},
      {"max_generation_attempts", 64},
      {"rrt_attempts_per_growth", 25},
      {"rrt_step", 10.0},
      {"frontier_distance", 0.0},
      {"patch_size", 25},
      // Pruning and reward
      {"prune_fraction", 0.96},
      {"sigma_min", 1.0},
      {"attempt_penalty", 5.0},
      {"terminal_bonus_scale", 8.0},
      {"noise_enabled", false},
      {"noise_scale", 1e-3},
      {"noise_frequency", {0.0, 0.0}},
      // Run plumbing
      {"n_envs", 1},
      {"checkpoint_every", 0},
      {"checkpoint_dir", ""},
      // Evaluation
      {"n_simulations", 600},
      {"eval_step_budget", 0},
      {"eval_seed", 1000},
  };
}

template <typename T>
T read(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "has the wrong type (got " + j.at(key).dump() + ")");
  }
}

IntRange read_range(const json& j, const std::string& key) {
  const auto v = read<std::vector<int>>(j, key);
  if (v.size() != 2) throw ConfigError(key, "expects [lo, hi]");
  return {v[0], v[1]};
}

std::vector<int> read_widths(const json& j, const std::string& key) {
  auto v = read<std::vector<int>>(j, key);
  for (int w : v)
    if (w < 1) throw ConfigError(key, "widths must be >= 1");
  return v;
}

// Re-raises validation errors from the typed configs against the key that
// caused them.
[[noreturn]] void rekey(const std::invalid_argument& e) {
  const std::string msg = e.what();
  const auto a = msg.find('\'');
  const auto b = a == std::string::npos ? a : msg.find('\'', a + 1);
  if (b != std::string::npos) {
    const auto why = msg.compare(b + 1, 2, ": ") == 0 ? msg.substr(b + 3) : msg;
    throw ConfigError(msg.substr(a + 1, b - a - 1), why);
  }
  throw ConfigError("(config)", msg);
}

void validate_with_keys(const RunConfig& rc) {
  try {
    rc.train.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    rekey(e);
  }
}

}  // namespace

std::vector<std::string> profile_names() { return {"paper", "desk", "tiny"}; }

json profile_defaults(const std::string& profile) {
  json j = paper_profile();
  if (profile == "paper") return j;
  if (profile == "desk") {
    j["profile"] = "desk";
    j["env_dimensions"] = {100, 100};
    j["fov_radius"] = 10;
    j["obstacle_size_range"] = {4, 20};
    j["scale_factor"] = 0.125;
    j["total_timesteps"] = 50000;
    j["n_simulations"] = 100;
    return j;
  }
  if (profile == "tiny") {
    j["profile"] = "tiny";
    j["env_dimensions"] = {20, 20};
    j["patch_size"] = 5;
    j["fov_radius"] = 4;
    j["obstacle_count_range"] = {1, 3};
    j["obstacle_size_range"] = {2, 5};
    j["rrt_step"] = 4.0;
    j["scale_factor"] = 1.0 / 64.0;
    j["update_frequency"] = 64;
    j["total_timesteps"] = 512;
    j["n_simulations"] = 10;
    return j;
  }
  throw ConfigError("profile", "unknown profile '" + profile + "' (expected paper, desk or tiny)");
}

RunConfig config_from_json(const json& overrides) {
  if (!overrides.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  std::string profile = "paper";
  if (overrides.contains("profile")) profile = read<std::string>(overrides, "profile");
  json j = profile_defaults(profile);
  for (const auto& [key, value] : overrides.items()) {
    if (!j.contains(key)) throw ConfigError(key, "unknown key");
    j[key] = value;
  }

  RunConfig rc;
  rc.profile = profile;
  TrainConfig& t = rc.train;
  t.seed = read<std::uint64_t>(j, "seed");

  PpoConfig& p = t.ppo;
  p.learning_rate = read<double>(j, "learning_rate");
  p.discount = read<double>(j, "discount_factor");
  p.gae_lambda = read<double>(j, "gae_lambda");
  p.clip = read<double>(j, "clip_parameter");
  p.value_coeff = read<double>(j, "value_function_coeff");
  p.entropy_coeff = read<double>(j, "entropy_coeff");
  p.update_every = read<int>(j, "update_frequency");
  p.k_epochs = read<int>(j, "k_epochs");
  p.n_minibatch = read<int>(j, "num_minibatch");
  p.target_kl = read<double>(j, "target_kl");
  p.total_timesteps = read<long>(j, "total_timesteps");
  p.optimizer = read<std::string>(j, "optimizer");
  p.adam_beta1 = read<double>(j, "adam_beta1");
  p.adam_beta2 = read<double>(j, "adam_beta2");
  p.optimizer_eps = read<double>(j, "optimizer_eps");

  SimConfig& s = t.sim;
  const auto dims = read<std::vector<int>>(j, "env_dimensions");
  if (dims.size() != 2) throw ConfigError("env_dimensions", "expects [width, height]");
  s.env.width = dims[0];
  s.env.height = dims[1];
  s.reward.max_moves = read<int>(j, "max_robot_moves");
  s.max_growth_calls = read<int>(j, "max_rrt_growth_attempts");
  s.env.obstacle_count = read_range(j, "obstacle_count_range");
  s.env.obstacle_size = read_range(j, "obstacle_size_range");
  s.env.fov_radius = read<int>(j, "fov_radius");
  s.env.min_reachable_fraction = read<double>(j, "min_reachable_fraction");
  s.env.max_generation_attempts = read<int>(j, "max_generation_attempts");
  s.growth_attempts = read<int>(j, "rrt_attempts_per_growth");
  s.growth_step = read<double>(j, "rrt_step");
  s.frontier_distance = read<double>(j, "frontier_distance");
  s.patch_size = read<int>(j, "patch_size");
  s.pruner.prune_fraction = read<double>(j, "prune_fraction");
  s.pruner.sigma_min = read<double>(j, "sigma_min");
  s.reward.attempt_penalty = read<double>(j, "attempt_penalty");
  s.reward.terminal_scale = read<double>(j, "terminal_bonus_scale");
  s.reward.discount = p.discount;
  s.pruner.noise_enabled = read<bool>(j, "noise_enabled");
  s.pruner.noise_scale = read<double>(j, "noise_scale");
  const auto freq = read<std::vector<double>>(j, "noise_frequency");
  if (freq.size() != 2) throw ConfigError("noise_frequency", "expects [wx, wy]");
  s.pruner.noise_frequency = {freq[0], freq[1]};

  PolicyConfig& b = rc.base_policy;
  b.map_width = s.env.width;
  b.map_height = s.env.height;
  b.patch_size = s.patch_size;
  b.layer_size = read<int>(j, "gtrxl_layer_size");
  b.n_layers = read<int>(j, "gtrxl_layers");
  b.n_heads = read<int>(j, "attn_heads");
  b.head_size = read<int>(j, "attn_head_size");
  b.pwff_size = read<int>(j, "pwff_size");
  b.memory_len = read<int>(j, "gtrxl_mem_len");
  b.gmm_components = read<int>(j, "num_gmm_components");
  b.actor_hidden = read_widths(j, "hidden_layers_actor");
  b.critic_hidden = read_widths(j, "hidden_layers_critic");
  b.embed_width = read<int>(j, "embed_width");
  b.gate_bias_init = read<double>(j, "gate_bias_init");
  b.action_log_std_init = read<double>(j, "action_log_std_init");
  b.component_gates = read<bool>(j, "component_gates");
  b.std_scale = read<double>(j, "std_scale");
  b.sigma_min = s.pruner.sigma_min;
  const double scale = read<double>(j, "scale_factor");
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("scale_factor", "must lie in (0, 1]");
  try {
    b.validate();
    t.policy = b.scaled(scale);
  } catch (const std::invalid_argument& e) {
    rekey(e);
  }

  t.n_envs = read<int>(j, "n_envs");
  t.checkpoint_every = read<int>(j, "checkpoint_every");
  t.checkpoint_dir = read<std::string>(j, "checkpoint_dir");

  rc.eval.n_simulations = read<int>(j, "n_simulations");
  rc.eval.step_budget = read<int>(j, "eval_step_budget");
  rc.eval.seed = read<std::uint64_t>(j, "eval_seed");
  if (rc.eval.n_simulations < 1) throw ConfigError("n_simulations", "must be >= 1");
  if (rc.eval.step_budget < 0) throw ConfigError("eval_step_budget", "must be >= 0");

  validate_with_keys(rc);
  return rc;
}

json config_to_json(const RunConfig& rc) {
  const TrainConfig& t = rc.train;
  const PpoConfig& p = t.ppo;
  const SimConfig& s = t.sim;
  const PolicyConfig& b = rc.base_policy;
  return json{
      {"profile", rc.profile},
      {"seed", t.seed},
      {"learning_rate", p.learning_rate},
      {"discount_factor", p.discount},
      {"gae_lambda", p.gae_lambda},
      {"clip_parameter", p.clip},
      {"value_function_coeff", p.value_coeff},
      {"entropy_coeff", p.entropy_coeff},
      {"update_frequency", p.update_every},
      {"k_epochs", p.k_epochs},
      {"num_minibatch", p.n_minibatch},
      {"target_kl", p.target_kl},
      {"total_timesteps", p.total_timesteps},
      {"optimizer", p.optimizer},
      {"adam_beta1", p.adam_beta1},
      {"adam_beta2", p.adam_beta2},
      {"optimizer_eps", p.optimizer_eps},
      {"gtrxl_layer_size", b.layer_size},
      {"gtrxl_layers", b.n_layers},
      {"attn_heads", b.n_heads},
      {"attn_head_size", b.head_size},
      {"pwff_size", b.pwff_size},
      {"gtrxl_mem_len", b.memory_len},
      {"num_gmm_components", b.gmm_components},
      {"hidden_layers_actor", b.actor_hidden},
      {"hidden_layers_critic", b.critic_hidden},
      {"embed_width", b.embed_width},
      {"gate_bias_init", b.gate_bias_init},
      {"action_log_std_init", b.action_log_std_init},
      {"component_gates", b.component_gates},
      {"scale_factor", t.policy.scale_factor / b.scale_factor},
      {"std_scale", b.std_scale},
      {"env_dimensions", {s.env.width, s.env.height}},
      {"max_robot_moves", s.reward.max_moves},
      {"max_rrt_growth_attempts", s.max_growth_calls},
      {"obstacle_count_range", {s.env.obstacle_count.lo, s.env.obstacle_count.hi}},
      {"obstacle_size_range", {s.env.obstacle_size.lo, s.env.obstacle_size.hi}},
      {"fov_radius", s.env.fov_radius},
      {"min_reachable_fraction", s.env.min_reachable_fraction},
      {"max_generation_attempts", s.env.max_generation_attempts},
      {"rrt_attempts_per_growth", s.growth_attempts},
      {"rrt_step", s.growth_step},
      {"frontier_distance", s.frontier_distance},
      {"patch_size", s.patch_size},
      {"prune_fraction", s.pruner.prune_fraction},
      {"sigma_min", s.pruner.sigma_min},
      {"attempt_penalty", s.reward.attempt_penalty},
      {"terminal_bonus_scale", s.reward.terminal_scale},
      {"noise_enabled", s.pruner.noise_enabled},
      {"noise_scale", s.pruner.noise_scale},
      {"noise_frequency", {s.pruner.noise_frequency[0], s.pruner.noise_frequency[1]}},
      {"n_envs", t.n_envs},
      {"checkpoint_every", t.checkpoint_every},
      {"checkpoint_dir", t.checkpoint_dir},
      {"n_simulations", rc.eval.n_simulations},
      {"eval_step_budget", rc.eval.step_budget},
      {"eval_seed", rc.eval.seed},
  };
}

RunConfig load_config(const std::string& path, const json& overrides) {
  json j = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    try {
      is >> j;
    } catch (const json::parse_error& e) {
      throw std::runtime_error("config file " + path + " is not valid JSON: " + e.what());
    }
  }
  if (!j.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  for (const auto& [key, value] : overrides.items()) j[key] = value;
  return config_from_json(j);
}

}  // namespace graphsparse
