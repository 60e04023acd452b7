#include "graphsparse/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "graphsparse/serialize.hpp"

namespace graphsparse {

namespace {

constexpr const char* kCheckpointTag = "graphsparse-checkpoint";
constexpr std::uint32_t kCheckpointVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical(const SimConfig& s) {
  std::string o;
  auto put = [&](const char* k, const std::string& v) { o += std::string(k) + "=" + v + "\n"; };
  put("width", std::to_string(s.env.width));
  put("height", std::to_string(s.env.height));
  put("obstacle_count", std::to_string(s.env.obstacle_count.lo) + "," + std::to_string(s.env.obstacle_count.hi));
  put("obstacle_size", std::to_string(s.env.obstacle_size.lo) + "," + std::to_string(s.env.obstacle_size.hi));
  put("fov_radius", std::to_string(s.env.fov_radius));
  put("min_reachable_fraction", fmt_double(s.env.min_reachable_fraction));
  put("max_generation_attempts", std::to_string(s.env.max_generation_attempts));
  put("growth_attempts", std::to_string(s.growth_attempts));
  put("growth_step", fmt_double(s.growth_step));
  put("frontier_distance", fmt_double(s.resolved_frontier_distance()));
  put("max_growth_calls", std::to_string(s.max_growth_calls));
  put("attempt_penalty", fmt_double(s.reward.attempt_penalty));
  put("max_moves", std::to_string(s.reward.max_moves));
  put("terminal_scale", fmt_double(s.reward.terminal_scale));
  put("prune_fraction", fmt_double(s.pruner.prune_fraction));
  put("sigma_min", fmt_double(s.pruner.sigma_min));
  put("noise_enabled", s.pruner.noise_enabled ? "1" : "0");
  put("noise_scale", fmt_double(s.pruner.noise_scale));
  put("noise_frequency", fmt_double(s.pruner.noise_frequency[0]) + "," + fmt_double(s.pruner.noise_frequency[1]));
  put("patch_size", std::to_string(s.patch_size));
  return o;
}

std::string canonical(const PpoConfig& p) {
  std::string o;
  auto put = [&](const char* k, const std::string& v) { o += std::string(k) + "=" + v + "\n"; };
  put("learning_rate", fmt_double(p.learning_rate));
  put("discount", fmt_double(p.discount));
  put("gae_lambda", fmt_double(p.gae_lambda));
  put("clip", fmt_double(p.clip));
  put("value_coeff", fmt_double(p.value_coeff));
  put("entropy_coeff", fmt_double(p.entropy_coeff));
  put("update_every", std::to_string(p.update_every));
  put("k_epochs", std::to_string(p.k_epochs));
  put("n_minibatch", std::to_string(p.n_minibatch));
  put("target_kl", fmt_double(p.target_kl));
  put("optimizer", p.optimizer);
  put("adam_beta1", fmt_double(p.adam_beta1));
  put("adam_beta2", fmt_double(p.adam_beta2));
  put("optimizer_eps", fmt_double(p.optimizer_eps));
  return o;
}

void write_params(BinaryWriter& w, const ParameterSet& p) {
  w.put<std::uint64_t>(p.tensors.size());
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    w.put_string(p.names[i]);
    w.put_matrix(p.tensors[i]);
  }
}

ParameterSet read_params(BinaryReader& r) {
  ParameterSet p;
  const auto n = r.get<std::uint64_t>();
  if (n > 100000) throw std::runtime_error("checkpoint is truncated or corrupt");
  for (std::uint64_t i = 0; i < n; ++i) {
    p.names.push_back(r.get_string());
    p.tensors.push_back(r.get_matrix<ad::Matrix>());
  }
  return p;
}

void write_memory(BinaryWriter& w, const EpisodicMemory& m) {
  w.put<std::uint64_t>(m.layers.size());
  for (const auto& l : m.layers) w.put_matrix(l);
}

EpisodicMemory read_memory(BinaryReader& r) {
  EpisodicMemory m;
  const auto n = r.get<std::uint64_t>();
  if (n > 4096) throw std::runtime_error("checkpoint is truncated or corrupt");
  for (std::uint64_t i = 0; i < n; ++i) m.layers.push_back(r.get_matrix<ad::Matrix>());
  return m;
}

struct CheckpointHeader {
  std::uint64_t policy_hash = 0;
  std::string policy_text;
  bool has_trainer = false;
};

CheckpointHeader read_header(BinaryReader& r) {
  if (r.get_string() != kCheckpointTag) throw std::runtime_error("not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  CheckpointHeader h;
  h.policy_hash = r.get<std::uint64_t>();
  h.policy_text = r.get_string();
  h.has_trainer = r.get<std::uint8_t>() != 0;
  return h;
}

void require_policy_match(const CheckpointHeader& h, const Policy& policy) {
  if (h.policy_hash != policy.config().hash())
    throw std::runtime_error("checkpoint was written for a different policy configuration (checkpoint hash " +
                             std::to_string(h.policy_hash) + ", current " + std::to_string(policy.config().hash()) +
                             "); refusing to load");
}

std::ifstream open_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  return is;
}

}  // namespace

void PpoConfig::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw std::invalid_argument(std::string("invalid ppo config '") + key + "': " + why);
  };
  if (!(learning_rate >= 0.0)) fail("learning_rate", "must be >= 0");
  if (!(discount > 0.0 && discount < 1.0)) fail("discount_factor", "must lie in (0,1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda", "must lie in [0,1]");
  if (!(clip > 0.0)) fail("clip_parameter", "must be > 0");
  if (!(value_coeff >= 0.0)) fail("value_function_coeff", "must be >= 0");
  if (!(entropy_coeff >= 0.0)) fail("entropy_coeff", "must be >= 0");
  if (update_every < 1) fail("update_frequency", "must be >= 1");
  if (k_epochs < 1) fail("k_epochs", "must be >= 1");
  if (n_minibatch < 1 || n_minibatch > update_every) fail("num_minibatch", "must lie in [1, update_frequency]");
  if (!(target_kl > 0.0)) fail("target_kl", "must be > 0");
  if (total_timesteps < 1) fail("total_timesteps", "must be >= 1");
  if (optimizer != "adam" && optimizer != "rmsprop") fail("optimizer", "must be \"adam\" or \"rmsprop\"");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1", "must lie in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2", "must lie in [0,1)");
  if (!(optimizer_eps > 0.0)) fail("optimizer_eps", "must be > 0");
}

Advantages compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                       const std::vector<bool>& dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("compute_gae: length mismatch");
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_value = bootstrap;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return out;
}

Advantages compute_gae(const RolloutBuffer& buffer, double gamma, double lambda) {
  Advantages out;
  out.advantages.assign(buffer.steps.size(), 0.0);
  out.returns.assign(buffer.steps.size(), 0.0);
  for (std::size_t e = 0; e < buffer.bootstrap.size(); ++e) {
    std::vector<std::size_t> idx;
    std::vector<double> r, v;
    std::vector<bool> d;
    for (std::size_t i = 0; i < buffer.steps.size(); ++i)
      if (buffer.steps[i].env == static_cast<int>(e)) {
        idx.push_back(i);
        r.push_back(buffer.steps[i].reward);
        v.push_back(buffer.steps[i].value);
        d.push_back(buffer.steps[i].done);
      }
    const Advantages a = compute_gae(r, v, d, buffer.bootstrap[e], gamma, lambda);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.advantages[idx[k]] = a.advantages[k];
      out.returns[idx[k]] = a.returns[k];
    }
  }
  return out;
}

std::vector<double> normalize(const std::vector<double>& v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  std::vector<double> out(v.size(), 0.0);
  if (sd > 0.0)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean) / (sd + 1e-8);
  return out;
}

ad::Var clipped_surrogate(ad::Var ratio, double advantage, double eps) {
  const double rho = ratio.scalar();
  const double unclipped = rho * advantage;
  const double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps) * advantage;
  const bool take_unclipped = unclipped <= clipped;
  const double slope = take_unclipped ? advantage : 0.0;
  return ratio.tape->push(ad::Matrix::Constant(1, 1, take_unclipped ? unclipped : clipped), {ratio},
                          [ratio, slope](ad::Tape& t, const ad::Matrix& g) { t.accumulate(ratio.id, g * slope); });
}

Optimizer::Optimizer(const PpoConfig& config, const ParameterSet& like)
    : kind_(config.optimizer),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.optimizer_eps),
      m_(like.zeros_like()),
      v_(like.zeros_like()) {}

void Optimizer::step(ParameterSet& params, const ParameterSet& grads, double lr) {
  if (!params.same_layout(grads) || !params.same_layout(v_)) throw std::invalid_argument("Optimizer: layout mismatch");
  ++t_;
  if (kind_ == "adam") {
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
      auto& m = m_.tensors[i];
      auto& v = v_.tensors[i];
      const auto& g = grads.tensors[i];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
      params.tensors[i].array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
    }
  } else {
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
      auto& v = v_.tensors[i];
      const auto& g = grads.tensors[i];
      v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
      params.tensors[i].array() -= lr * g.array() / (v.array().sqrt() + eps_);
    }
  }
}

void Optimizer::restore(long t, ParameterSet m, ParameterSet v) {
  if (!m.same_layout(m_) || !v.same_layout(v_)) throw std::runtime_error("checkpoint: optimizer state layout mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

UpdateStats ppo_update(const Policy& policy, ParameterSet& params, Optimizer& optimizer, const RolloutBuffer& buffer,
                       const PpoConfig& config, Rng& shuffle_rng) {
  const std::size_t n = buffer.steps.size();
  if (n == 0) throw std::invalid_argument("ppo_update: empty buffer");
  const Advantages gae = compute_gae(buffer, config.discount, config.gae_lambda);
  const std::vector<double> adv = normalize(gae.advantages);

  UpdateStats stats;
  ParameterSet grads = params.zeros_like();
  std::vector<std::size_t> order(n);
  const std::size_t n_mb = static_cast<std::size_t>(config.n_minibatch);
  double kl_sum = 0.0;
  std::size_t samples = 0;
  bool first = true;

  for (int epoch = 0; epoch < config.k_epochs && !stats.early_stopped; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    for (std::size_t mb = 0; mb < n_mb; ++mb) {
      const std::size_t lo = mb * n / n_mb;
      const std::size_t hi = (mb + 1) * n / n_mb;
      if (hi == lo) continue;
      const double inv_b = 1.0 / static_cast<double>(hi - lo);
      grads.set_zero();
      double mb_kl = 0.0, max_ratio_err = 0.0;
      for (std::size_t s = lo; s < hi; ++s) {
        const std::size_t i = order[s];
        const Transition& tr = buffer.steps[i];
        ad::Tape tape;
        const auto g = policy.build(tape, params, &grads, tr.observation, buffer.memories[tr.memory_index]);
        const ad::Var logp = gaussian_log_prob(g.action_mean, g.log_std, tr.raw_action);
        const ad::Var ratio = ad::exp(ad::add_scalar(logp, -tr.log_prob));
        const ad::Var surrogate = clipped_surrogate(ratio, adv[i], config.clip);
        const ad::Var value_err = ad::square(ad::add_scalar(g.value, -gae.returns[i]));
        const ad::Var entropy = gaussian_entropy(g.log_std);
        ad::Var loss = ad::sub(ad::scale(value_err, config.value_coeff), surrogate);
        loss = ad::sub(loss, ad::scale(entropy, config.entropy_coeff));
        loss = ad::scale(loss, inv_b);
        if (!std::isfinite(loss.scalar()))
          throw std::runtime_error("ppo_update: non-finite loss at sample " + std::to_string(i) + " (ratio " +
                                   fmt_double(ratio.scalar()) + ", value " + fmt_double(g.value.scalar()) +
                                   ", return " + fmt_double(gae.returns[i]) + ")");
        tape.backward(loss);

        const double rho = ratio.scalar();
        stats.policy_loss -= surrogate.scalar();
        stats.value_loss += value_err.scalar();
        stats.entropy += entropy.scalar();
        if (std::abs(rho - 1.0) > config.clip) stats.clip_fraction += 1.0;
        mb_kl += tr.log_prob - logp.scalar();
        max_ratio_err = std::max(max_ratio_err, std::abs(rho - 1.0));
        ++samples;
      }
      mb_kl *= inv_b;
      kl_sum += mb_kl;
      ++stats.minibatches;
      if (first) {
        stats.first_approx_kl = mb_kl;
        stats.first_max_ratio_error = max_ratio_err;
        first = false;
      }
      if (mb_kl > config.target_kl) {
        stats.early_stopped = true;
        break;
      }
      optimizer.step(params, grads, config.learning_rate);
      ++stats.steps_applied;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(samples);
  stats.policy_loss *= inv_n;
  stats.value_loss *= inv_n;
  stats.entropy *= inv_n;
  stats.clip_fraction *= inv_n;
  stats.approx_kl = kl_sum / stats.minibatches;
  return stats;
}

void TrainConfig::validate() const {
  sim.validate();
  policy.validate();
  ppo.validate();
  if (n_envs < 1) throw std::invalid_argument("invalid config 'n_envs': must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("invalid config 'checkpoint_every': must be >= 0");
  if (policy.map_width != sim.env.width || policy.map_height != sim.env.height || policy.patch_size != sim.patch_size)
    throw std::invalid_argument("invalid config 'patch_size': policy geometry does not match env_dimensions");
  if (sim.pruner.sigma_min != policy.sigma_min)
    throw std::invalid_argument("invalid config 'sigma_min': pruner and policy disagree");
}

std::uint64_t TrainConfig::run_hash() const {
  return fnv1a(canonical(sim) + canonical(ppo) + policy.canonical() + "seed=" + std::to_string(seed) +
               "\nn_envs=" + std::to_string(n_envs) + "\n");
}

std::uint64_t training_episode_seed(std::uint64_t run_seed, int env, long episode) {
  return derive_seed(run_seed, {0x747261696eULL, static_cast<std::uint64_t>(env), static_cast<std::uint64_t>(episode)});
}

Trainer::Trainer(TrainConfig config) : config_(std::move(config)), policy_((config_.validate(), config_.policy)) {
  params_ = policy_.init_params(derive_seed(config_.seed, {0x696e6974ULL}));
  optimizer_ = Optimizer(config_.ppo, params_);
  shuffle_rng_ = Rng(derive_seed(config_.seed, {0x73687566ULL}));
  envs_.reserve(config_.n_envs);
  for (int e = 0; e < config_.n_envs; ++e)
    envs_.push_back(EnvSlot{Simulator(config_.sim, training_episode_seed(config_.seed, e, 0)), {},
                            Rng(derive_seed(config_.seed, {0x616374ULL, static_cast<std::uint64_t>(e)})), 0, 0.0, 0});
}

void Trainer::collect(TrainObserver* observer, UpdateLog& log) {
  buffer_.clear();
  buffer_.steps.reserve(config_.ppo.update_every);
  buffer_.memories.reserve(config_.ppo.update_every);
  buffer_.bootstrap.assign(config_.n_envs, 0.0);
  double reward_mean_sum = 0.0, coverage_sum = 0.0, tree_sum = 0.0, pruned_sum = 0.0;

  for (int k = 0; k < config_.ppo.update_every; ++k) {
    const int e = k % config_.n_envs;
    EnvSlot& slot = envs_[e];
    Transition tr;
    tr.env = e;
    tr.observation = slot.sim.observation();
    const PolicyOutput out = policy_.forward(params_, tr.observation, slot.memory);
    const ActionSample sample = sample_action(out, slot.action_rng);
    const GmmAction action = to_gmm(sample.raw, config_.policy);
    const int episode_step = slot.sim.steps();
    const StepResult res = slot.sim.step(PruneStrategy::kMixture, &action);

    tr.memory_index = buffer_.memories.size();
    buffer_.memories.push_back(std::move(slot.memory));
    tr.raw_action = sample.raw;
    tr.log_prob = sample.log_prob;
    tr.value = out.value;
    tr.reward = res.reward.total;
    tr.done = res.done;
    tr.cause = res.cause;
    buffer_.steps.push_back(std::move(tr));
    slot.memory = out.new_memory;
    slot.reward_sum += res.reward.total;
    slot.pruned_total += res.pruned;
    ++global_step_;
    tree_sum += static_cast<double>(res.tree_size);
    pruned_sum += static_cast<double>(res.pruned);

    if (observer) {
      StepLog sl;
      sl.global_step = global_step_;
      sl.env = e;
      sl.episode = slot.episode;
      sl.episode_step = episode_step;
      sl.value = out.value;
      sl.log_prob = sample.log_prob;
      sl.result = res;
      observer->on_step(sl);
    }
    if (res.done) {
      EpisodeLog el;
      el.env = e;
      el.episode = slot.episode;
      el.seed = slot.sim.episode_seed();
      el.steps = slot.sim.steps();
      el.reward_sum = slot.reward_sum;
      el.reward_mean = slot.reward_sum / el.steps;
      el.coverage = res.coverage;
      el.tree_size = res.tree_size;
      el.pruned_total = slot.pruned_total;
      el.cause = res.cause;
      if (observer) observer->on_episode(el);
      ++log.episodes;
      reward_mean_sum += el.reward_mean;
      coverage_sum += el.coverage;
      ++slot.episode;
      slot.sim.reset(training_episode_seed(config_.seed, e, slot.episode));
      slot.memory.clear();
      slot.reward_sum = 0.0;
      slot.pruned_total = 0;
    }
  }
  for (int e = 0; e < config_.n_envs; ++e) {
    EnvSlot& slot = envs_[e];
    const bool fresh = slot.sim.steps() == 0;  // last step ended an episode
    buffer_.bootstrap[e] = fresh ? 0.0 : policy_.forward(params_, slot.sim.observation(), slot.memory).value;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double steps = static_cast<double>(config_.ppo.update_every);
  log.mean_episode_reward = log.episodes ? reward_mean_sum / log.episodes : nan;
  log.mean_coverage = log.episodes ? coverage_sum / log.episodes : nan;
  log.tree_size_mean = tree_sum / steps;
  log.prune_count_mean = pruned_sum / steps;
}

UpdateLog Trainer::run_update(TrainObserver* observer) {
  UpdateLog log;
  collect(observer, log);
  log.stats = ppo_update(policy_, params_, optimizer_, buffer_, config_.ppo, shuffle_rng_);
  ++update_idx_;
  log.global_step = global_step_;
  log.update_idx = update_idx_;
  if (observer) observer->on_update(log);
  return log;
}

void Trainer::train(TrainObserver* observer, long until) {
  const long target = until < 0 ? config_.ppo.total_timesteps : until;
  while (global_step_ < target) {
    run_update(observer);
    if (config_.checkpoint_every > 0 && update_idx_ % config_.checkpoint_every == 0 &&
        !config_.checkpoint_dir.empty()) {
      std::filesystem::create_directories(config_.checkpoint_dir);
      const std::string path =
          (std::filesystem::path(config_.checkpoint_dir) / ("step_" + std::to_string(global_step_) + ".ckpt")).string();
      save_checkpoint(path);
      if (observer) observer->on_checkpoint(path, global_step_);
    }
  }
}

void Trainer::save_checkpoint(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    BinaryWriter w(os);
    w.put_string(kCheckpointTag);
    w.put(kCheckpointVersion);
    w.put(policy_.config().hash());
    w.put_string(policy_.config().canonical());
    w.put<std::uint8_t>(1);
    write_params(w, params_);
    w.put_string(optimizer_.kind());
    w.put<std::int64_t>(optimizer_.steps());
    write_params(w, optimizer_.first_moment());
    write_params(w, optimizer_.second_moment());

    w.put(config_.run_hash());
    w.put<std::int64_t>(global_step_);
    w.put<std::int64_t>(update_idx_);
    w.put_string(shuffle_rng_.state());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(envs_.size()));
    for (const EnvSlot& slot : envs_) {
      slot.sim.save(w);
      write_memory(w, slot.memory);
      w.put_string(slot.action_rng.state());
      w.put<std::int64_t>(slot.episode);
      w.put(slot.reward_sum);
      w.put<std::int64_t>(slot.pruned_total);
    }
    os.flush();
    if (!os) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot move checkpoint into place at " + path + ": " + ec.message());
}

void Trainer::load_checkpoint(const std::string& path) {
  std::ifstream is = open_checkpoint(path);
  BinaryReader r(is);
  const CheckpointHeader h = read_header(r);
  require_policy_match(h, policy_);
  if (!h.has_trainer) throw std::runtime_error("checkpoint " + path + " holds no trainer state");
  ParameterSet params = read_params(r);
  policy_.check_params(params);
  const std::string kind = r.get_string();
  if (kind != config_.ppo.optimizer) throw std::runtime_error("checkpoint optimizer '" + kind + "' does not match config");
  const long t = r.get<std::int64_t>();
  ParameterSet m = read_params(r);
  ParameterSet v = read_params(r);
  if (r.get<std::uint64_t>() != config_.run_hash())
    throw std::runtime_error("checkpoint was written by a run with a different configuration or seed; refusing to resume");
  const long global_step = r.get<std::int64_t>();
  const long update_idx = r.get<std::int64_t>();
  const std::string shuffle_state = r.get_string();
  if (r.get<std::uint32_t>() != envs_.size()) throw std::runtime_error("checkpoint environment count mismatch");
  for (EnvSlot& slot : envs_) {
    slot.sim.load(r);
    slot.memory = read_memory(r);
    slot.action_rng.set_state(r.get_string());
    slot.episode = r.get<std::int64_t>();
    slot.reward_sum = r.get<double>();
    slot.pruned_total = r.get<std::int64_t>();
  }
  params_ = std::move(params);
  optimizer_.restore(t, std::move(m), std::move(v));
  global_step_ = global_step;
  update_idx_ = update_idx;
  shuffle_rng_.set_state(shuffle_state);
  buffer_.clear();
}

ParameterSet load_policy_params(const std::string& path, const Policy& policy) {
  std::ifstream is = open_checkpoint(path);
  BinaryReader r(is);
  const CheckpointHeader h = read_header(r);
  require_policy_match(h, policy);
  ParameterSet params = read_params(r);
  policy.check_params(params);
  return params;
}

}  // namespace graphsparse
