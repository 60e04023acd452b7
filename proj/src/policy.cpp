#include "graphsparse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace graphsparse {

namespace {

int scale_width(int w, double factor) { return std::max(1, static_cast<int>(std::lround(w * factor))); }

void require_positive(int v, const char* key) {
  if (v < 1) throw std::invalid_argument(std::string("invalid policy config '") + key + "': must be >= 1");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ad::Matrix row_of(const Eigen::VectorXd& v) { return v.transpose(); }

}  // namespace

PolicyConfig PolicyConfig::scaled(double factor) const {
  if (!(factor > 0.0) || factor > 1.0) throw std::invalid_argument("invalid policy config 'scale_factor': must be in (0, 1]");
  PolicyConfig c = *this;
  c.embed_width = scale_width(embed_width, factor);
  c.head_size = scale_width(head_size, factor);
  c.pwff_size = scale_width(pwff_size, factor);
  c.layer_size = scale_width(layer_size, factor);
  c.memory_len = memory_len == 0 ? 0 : scale_width(memory_len, factor);
  for (int& w : c.actor_hidden) w = scale_width(w, factor);
  for (int& w : c.critic_hidden) w = scale_width(w, factor);
  c.scale_factor = scale_factor * factor;
  return c;
}

void PolicyConfig::validate() const {
  require_positive(map_width, "env_dimensions");
  require_positive(map_height, "env_dimensions");
  require_positive(patch_size, "patch_size");
  if (map_width % patch_size != 0 || map_height % patch_size != 0)
    throw std::invalid_argument("invalid policy config 'patch_size': must divide env_dimensions");
  require_positive(channels, "channels");
  require_positive(embed_width, "embed_width");
  require_positive(n_layers, "gtrxl_layers");
  require_positive(n_heads, "attn_heads");
  require_positive(head_size, "attn_head_size");
  require_positive(pwff_size, "pwff_size");
  require_positive(layer_size, "gtrxl_layer_size");
  if (memory_len < 0) throw std::invalid_argument("invalid policy config 'gtrxl_mem_len': must be >= 0");
  require_positive(gmm_components, "num_gmm_components");
  for (int w : actor_hidden) require_positive(w, "hidden_layers_actor");
  for (int w : critic_hidden) require_positive(w, "hidden_layers_critic");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("invalid policy config 'sigma_min': must be > 0");
  if (!(std_scale > 0.0)) throw std::invalid_argument("invalid policy config 'std_scale': must be > 0");
  if (!(scale_factor > 0.0) || scale_factor > 1.0)
    throw std::invalid_argument("invalid policy config 'scale_factor': must be in (0, 1]");
}

std::string PolicyConfig::canonical() const {
  std::string s;
  char buf[64];
  auto put = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += k;
    s += '=';
    s += buf;
    s += '\n';
  };
  auto put_list = [&](const char* k, const std::vector<int>& v) {
    s += k;
    s += '=';
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    s += '\n';
  };
  put("map_width", map_width);
  put("map_height", map_height);
  put("patch_size", patch_size);
  put("channels", channels);
  put("embed_width", embed_width);
  put("n_layers", n_layers);
  put("n_heads", n_heads);
  put("head_size", head_size);
  put("pwff_size", pwff_size);
  put("layer_size", layer_size);
  put("memory_len", memory_len);
  put("gmm_components", gmm_components);
  put_list("actor_hidden", actor_hidden);
  put_list("critic_hidden", critic_hidden);
  put("gate_bias_init", gate_bias_init);
  put("action_log_std_init", action_log_std_init);
  put("component_gates", component_gates ? 1 : 0);
  put("sigma_min", sigma_min);
  put("std_scale", std_scale);
  return s;
}

std::uint64_t PolicyConfig::hash() const { return fnv1a(canonical()); }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no parameter named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet z;
  z.names = names;
  z.tensors.reserve(tensors.size());
  for (const auto& t : tensors) z.tensors.push_back(ad::Matrix::Zero(t.rows(), t.cols()));
  return z;
}

void ParameterSet::set_zero() {
  for (auto& t : tensors) t.setZero();
}

bool ParameterSet::same_layout(const ParameterSet& o) const {
  if (names != o.names || tensors.size() != o.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i)
    if (tensors[i].rows() != o.tensors[i].rows() || tensors[i].cols() != o.tensors[i].cols()) return false;
  return true;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.tensors.size(); ++i)
    if (a.tensors[i] != b.tensors[i]) return false;
  return true;
}

std::size_t Policy::declare(std::string name, Eigen::Index rows, Eigen::Index cols, Shape::Init init, double value) {
  layout_.push_back({std::move(name), rows, cols, init, value});
  return layout_.size() - 1;
}

Policy::GateIndex Policy::declare_gate(const std::string& prefix) {
  const Eigen::Index d = config_.layer_size;
  GateIndex g{};
  g.w_r = declare(prefix + ".w_r", d, d, Shape::Init::kFanIn);
  g.u_r = declare(prefix + ".u_r", d, d, Shape::Init::kFanIn);
  g.w_z = declare(prefix + ".w_z", d, d, Shape::Init::kFanIn);
  g.u_z = declare(prefix + ".u_z", d, d, Shape::Init::kFanIn);
  g.b_z = declare(prefix + ".b_z", 1, d, Shape::Init::kConst, -config_.gate_bias_init);
  g.w_g = declare(prefix + ".w_g", d, d, Shape::Init::kFanIn);
  g.u_g = declare(prefix + ".u_g", d, d, Shape::Init::kFanIn);
  return g;
}

Policy::MlpIndex Policy::declare_mlp(const std::string& prefix, int input, const std::vector<int>& hidden, int output,
                                     double output_gain) {
  MlpIndex m;
  int in = input;
  for (std::size_t i = 0; i <= hidden.size(); ++i) {
    const bool last = i == hidden.size();
    const int out = last ? output : hidden[i];
    const std::string p = prefix + "." + std::to_string(i);
    m.weights.push_back(declare(p + ".w", in, out, Shape::Init::kFanIn, last ? output_gain : 1.0));
    m.biases.push_back(declare(p + ".b", 1, out, Shape::Init::kConst, 0.0));
    in = out;
  }
  return m;
}

Policy::Policy(PolicyConfig config) : config_(std::move(config)) {
  config_.validate();
  const int d = config_.layer_size;
  const int T = config_.n_tokens();
  const int hd = config_.n_heads * config_.head_size;

  embed_w_ = declare("embed.w", config_.token_dim(), config_.embed_width, Shape::Init::kFanIn);
  embed_b_ = declare("embed.b", 1, config_.embed_width, Shape::Init::kConst, 0.0);
  pos_ = declare("embed.position", T, config_.embed_width, Shape::Init::kPosition);
  if (config_.embed_width != d) {
    has_in_proj_ = true;
    in_proj_w_ = declare("embed.proj.w", config_.embed_width, d, Shape::Init::kFanIn);
    in_proj_b_ = declare("embed.proj.b", 1, d, Shape::Init::kConst, 0.0);
  }
  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l);
    LayerIndex li{};
    li.ln1_gain = declare(p + ".ln1.gain", 1, d, Shape::Init::kConst, 1.0);
    li.ln1_bias = declare(p + ".ln1.bias", 1, d, Shape::Init::kConst, 0.0);
    li.w_q = declare(p + ".attn.w_q", d, hd, Shape::Init::kFanIn);
    li.w_k = declare(p + ".attn.w_k", d, hd, Shape::Init::kFanIn);
    li.w_v = declare(p + ".attn.w_v", d, hd, Shape::Init::kFanIn);
    li.w_rel = declare(p + ".attn.w_rel", d, hd, Shape::Init::kFanIn);
    li.u_bias = declare(p + ".attn.u", 1, hd, Shape::Init::kConst, 0.0);
    li.v_bias = declare(p + ".attn.v", 1, hd, Shape::Init::kConst, 0.0);
    li.w_o = declare(p + ".attn.w_o", hd, d, Shape::Init::kFanIn);
    li.b_o = declare(p + ".attn.b_o", 1, d, Shape::Init::kConst, 0.0);
    li.gate1 = declare_gate(p + ".gate1");
    li.ln2_gain = declare(p + ".ln2.gain", 1, d, Shape::Init::kConst, 1.0);
    li.ln2_bias = declare(p + ".ln2.bias", 1, d, Shape::Init::kConst, 0.0);
    li.w_ff1 = declare(p + ".ff.w1", d, config_.pwff_size, Shape::Init::kFanIn);
    li.b_ff1 = declare(p + ".ff.b1", 1, config_.pwff_size, Shape::Init::kConst, 0.0);
    li.w_ff2 = declare(p + ".ff.w2", config_.pwff_size, d, Shape::Init::kFanIn);
    li.b_ff2 = declare(p + ".ff.b2", 1, d, Shape::Init::kConst, 0.0);
    li.gate2 = declare_gate(p + ".gate2");
    layers_.push_back(li);
  }
  final_gain_ = declare("final_ln.gain", 1, d, Shape::Init::kConst, 1.0);
  final_bias_ = declare("final_ln.bias", 1, d, Shape::Init::kConst, 0.0);
  actor_ = declare_mlp("actor", d, config_.actor_hidden, config_.action_dim(), 0.01);
  log_std_ = declare("actor.log_std", 1, config_.action_dim(), Shape::Init::kConst, config_.action_log_std_init);
  critic_ = declare_mlp("critic", d, config_.critic_hidden, 1, 1.0);

  // Signed distances from -(T-1) to memory_len + T - 1.
  const int rows = config_.memory_len + 2 * T - 1;
  relative_table_.resize(rows, d);
  for (int k = 0; k < rows; ++k) {
    const double dist = k - (T - 1);
    for (int i = 0; i < d; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / d);
      relative_table_(k, i) = std::sin(dist * freq);
      if (i + 1 < d) relative_table_(k, i + 1) = std::cos(dist * freq);
    }
  }
}

ParameterSet Policy::init_params(std::uint64_t seed) const {
  ParameterSet p;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const Shape& s = layout_[i];
    Rng rng(derive_seed(seed, {0x706172616dULL, i}));
    ad::Matrix m(s.rows, s.cols);
    switch (s.init) {
      case Shape::Init::kConst:
        m.setConstant(s.value);
        break;
      case Shape::Init::kFanIn: {
        const double sd = s.value / std::sqrt(static_cast<double>(s.rows));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.normal(0.0, sd);
        break;
      }
      case Shape::Init::kPosition:
        for (Eigen::Index c = 0; c < m.cols(); ++c)
          for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.normal(0.0, 0.02);
        break;
    }
    p.names.push_back(s.name);
    p.tensors.push_back(std::move(m));
  }
  return p;
}

void Policy::check_params(const ParameterSet& params) const {
  if (params.tensors.size() != layout_.size() || params.names.size() != layout_.size())
    throw std::invalid_argument("parameter count mismatch: expected " + std::to_string(layout_.size()) + ", got " +
                                std::to_string(params.tensors.size()));
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    const auto& t = params.tensors[i];
    if (params.names[i] != layout_[i].name || t.rows() != layout_[i].rows || t.cols() != layout_[i].cols)
      throw std::invalid_argument("parameter " + layout_[i].name + " does not match the architecture");
  }
}

ad::Var Policy::gru_gate(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const GateIndex& idx, ad::Var x,
                         ad::Var y) const {
  auto P = [&](std::size_t i) { return tape.parameter(p.tensors[i], g ? &g->tensors[i] : nullptr); };
  using namespace ad;
  const Var r = sigmoid(add(matmul(y, P(idx.w_r)), matmul(x, P(idx.u_r))));
  const Var z = sigmoid(add_row(add(matmul(y, P(idx.w_z)), matmul(x, P(idx.u_z))), P(idx.b_z)));
  const Var h = tanh(add(matmul(y, P(idx.w_g)), matmul(mul(r, x), P(idx.u_g))));
  return add(x, mul(z, sub(h, x)));
}

ad::Var Policy::mlp(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const MlpIndex& idx, ad::Var x) const {
  auto P = [&](std::size_t i) { return tape.parameter(p.tensors[i], g ? &g->tensors[i] : nullptr); };
  for (std::size_t i = 0; i < idx.weights.size(); ++i) {
    x = ad::add_row(ad::matmul(x, P(idx.weights[i])), P(idx.biases[i]));
    if (i + 1 < idx.weights.size()) x = ad::relu(x);
  }
  return x;
}

ad::Var Policy::relative_attention(ad::Tape& tape, const ParameterSet& p, ParameterSet* g, const LayerIndex& li,
                                   ad::Var normed, Eigen::Index mem_rows) const {
  using namespace ad;
  auto P = [&](std::size_t i) { return tape.parameter(p.tensors[i], g ? &g->tensors[i] : nullptr); };
  const Eigen::Index T = config_.n_tokens();
  const Eigen::Index m = mem_rows;
  const Eigen::Index keys = m + T;
  const Eigen::Index D = m + 2 * T - 1;
  const int hs = config_.head_size;

  const Var current = slice_rows(normed, m, T);
  const Var q = matmul(current, P(li.w_q));
  const Var k = matmul(normed, P(li.w_k));
  const Var v = matmul(normed, P(li.w_v));
  const Var rel = matmul(tape.constant(relative_table_.topRows(D)), P(li.w_rel));
  const Var qu = add_row(q, P(li.u_bias));
  const Var qv = add_row(q, P(li.v_bias));

  // Query i sits at absolute position m + i; key j at j.
  auto index = std::make_shared<IndexMatrix>(T, keys);
  for (Eigen::Index j = 0; j < keys; ++j)
    for (Eigen::Index i = 0; i < T; ++i) (*index)(i, j) = static_cast<int>(m + i - j + T - 1);

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hs));
  std::vector<Var> heads;
  heads.reserve(config_.n_heads);
  for (int h = 0; h < config_.n_heads; ++h) {
    const Eigen::Index c = static_cast<Eigen::Index>(h) * hs;
    const Var content = matmul_nt(slice_cols(qu, c, hs), slice_cols(k, c, hs));
    const Var position = gather_cols(matmul_nt(slice_cols(qv, c, hs), slice_cols(rel, c, hs)), index);
    const Var attn = softmax_rows(scale(add(content, position), inv_sqrt));
    heads.push_back(matmul(attn, slice_cols(v, c, hs)));
  }
  return add_row(matmul(concat_cols(heads), P(li.w_o)), P(li.b_o));
}

Policy::Graph Policy::build(ad::Tape& tape, const ParameterSet& params, ParameterSet* grads,
                            const TokenSequence& tokens, const EpisodicMemory& memory,
                            EpisodicMemory* next_memory, std::vector<ad::Matrix>* layer_trace) const {
  using namespace ad;
  const Eigen::Index T = config_.n_tokens();
  if (tokens.patches.rows() != T || tokens.patches.cols() != config_.token_dim())
    throw std::invalid_argument("policy: token sequence shape " + std::to_string(tokens.patches.rows()) + "x" +
                                std::to_string(tokens.patches.cols()) + " does not match configuration");
  if (!memory.layers.empty()) {
    if (static_cast<int>(memory.layers.size()) != config_.n_layers)
      throw std::invalid_argument("policy: memory has the wrong number of layers");
    for (const auto& m : memory.layers)
      if (m.cols() != config_.layer_size || m.rows() != memory.layers[0].rows() || m.rows() > config_.memory_len)
        throw std::invalid_argument("policy: memory shape does not match configuration");
  }
  if (grads && !grads->same_layout(params)) throw std::invalid_argument("policy: gradient layout mismatch");
  auto P = [&](std::size_t i) { return tape.parameter(params.tensors[i], grads ? &grads->tensors[i] : nullptr); };

  Var x = tape.constant(tokens.patches.cast<double>());
  x = add(add_row(matmul(x, P(embed_w_)), P(embed_b_)), P(pos_));
  if (has_in_proj_) x = add_row(matmul(x, P(in_proj_w_)), P(in_proj_b_));

  const Eigen::Index m = memory.length();
  if (layer_trace) layer_trace->assign(1, x.value());
  if (next_memory) next_memory->layers.assign(config_.n_layers, Matrix());
  for (int l = 0; l < config_.n_layers; ++l) {
    const LayerIndex& li = layers_[l];
    const Var full = m > 0 ? concat_rows(tape.constant(memory.layers[l]), x) : x;
    if (next_memory) {
      const Eigen::Index keep = std::min<Eigen::Index>(config_.memory_len, full.rows());
      next_memory->layers[l] = full.value().bottomRows(keep);
    }
    const Var normed = layer_norm_rows(full, P(li.ln1_gain), P(li.ln1_bias));
    const Var y = relative_attention(tape, params, grads, li, normed, m);
    const Var x1 = gru_gate(tape, params, grads, li.gate1, x, relu(y));
    const Var ff_in = layer_norm_rows(x1, P(li.ln2_gain), P(li.ln2_bias));
    const Var ff = add_row(matmul(relu(add_row(matmul(ff_in, P(li.w_ff1)), P(li.b_ff1))), P(li.w_ff2)), P(li.b_ff2));
    x = gru_gate(tape, params, grads, li.gate2, x1, relu(ff));
    if (layer_trace) layer_trace->push_back(x.value());
  }
  const Var pooled = mean_rows(layer_norm_rows(x, P(final_gain_), P(final_bias_)));
  Graph out;
  out.action_mean = mlp(tape, params, grads, actor_, pooled);
  out.log_std = P(log_std_);
  out.value = mlp(tape, params, grads, critic_, pooled);
  return out;
}

PolicyOutput Policy::forward(const ParameterSet& params, const TokenSequence& tokens,
                             const EpisodicMemory& memory) const {
  ad::Tape tape(false);
  PolicyOutput out;
  const Graph g = build(tape, params, nullptr, tokens, memory, &out.new_memory);
  out.action_mean = g.action_mean.value().row(0).transpose();
  out.action_log_std = g.log_std.value().row(0).transpose();
  out.value = g.value.scalar();
  return out;
}

GmmAction to_gmm(const Eigen::VectorXd& raw, const PolicyConfig& config) {
  const int K = config.gmm_components;
  const int stride = config.component_gates ? 6 : 5;
  if (raw.size() != K * stride)
    throw std::invalid_argument("to_gmm: expected " + std::to_string(K * stride) + " values, got " +
                                std::to_string(raw.size()));
  const double extent[2] = {static_cast<double>(config.map_width), static_cast<double>(config.map_height)};
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) max_logit = std::max(max_logit, raw(k * stride));
  GmmAction a;
  a.components.resize(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const double* r = raw.data() + k * stride;
    GmmComponent& c = a.components[k];
    c.weight = std::exp(r[0] - max_logit);
    total += c.weight;
    for (int axis = 0; axis < 2; ++axis) {
      c.mean[axis] = (extent[axis] - 1.0) * logistic(r[1 + axis]);
      c.stddev[axis] = config.sigma_min + softplus(r[3 + axis]) * config.std_scale * extent[axis];
    }
    c.active = config.component_gates ? r[5] >= 0.0 : true;
  }
  for (auto& c : a.components) c.weight /= total;
  return a;
}

ad::Var gaussian_log_prob(ad::Var mean, ad::Var log_std, const Eigen::VectorXd& raw) {
  using namespace ad;
  const double n = static_cast<double>(raw.size());
  const Var diff = sub(mean.tape->constant(row_of(raw)), mean);
  const Var z = mul(diff, exp(scale(log_std, -1.0)));
  const Var quad = scale(sum(square(z)), -0.5);
  return add_scalar(sub(quad, sum(log_std)), -0.5 * n * std::log(2.0 * std::numbers::pi));
}

ad::Var gaussian_entropy(ad::Var log_std) {
  const double n = static_cast<double>(log_std.cols());
  return ad::add_scalar(ad::sum(log_std), 0.5 * n * (1.0 + std::log(2.0 * std::numbers::pi)));
}

// The value-level versions run the same tape ops so that probabilities
// recorded at collection time match the training graph bit for bit.
double gaussian_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std, const Eigen::VectorXd& raw) {
  ad::Tape tape(false);
  return gaussian_log_prob(tape.constant(row_of(mean)), tape.constant(row_of(log_std)), raw).scalar();
}

double gaussian_entropy(const Eigen::VectorXd& log_std) {
  ad::Tape tape(false);
  return gaussian_entropy(tape.constant(row_of(log_std))).scalar();
}

ActionSample sample_action(const PolicyOutput& out, Rng& rng, bool deterministic) {
  ActionSample s;
  s.raw = out.action_mean;
  if (!deterministic)
    for (Eigen::Index i = 0; i < s.raw.size(); ++i) s.raw(i) += std::exp(out.action_log_std(i)) * rng.normal();
  s.log_prob = gaussian_log_prob(out.action_mean, out.action_log_std, s.raw);
  return s;
}

}  // namespace graphsparse
