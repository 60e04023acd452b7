#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "graphsparse/observation.hpp"
#include "graphsparse/policy.hpp"

namespace graphsparse::testing {

// Fixed random linear readout of every policy output, so every parameter
// that reaches an output gets a non-trivial gradient.
struct Readout {
  Eigen::VectorXd w_mean, w_log_std;
  double w_value = 0.0;

  Readout(int action_dim, Rng& rng) : w_mean(action_dim), w_log_std(action_dim) {
    for (int i = 0; i < action_dim; ++i) {
      w_mean(i) = rng.uniform(-1, 1);
      w_log_std(i) = rng.uniform(-1, 1);
    }
    w_value = rng.uniform(0.5, 1.5);
  }

  ad::Var loss(ad::Tape& tape, const Policy::Graph& g) const {
    const ad::Var a = ad::sum(ad::mul(g.action_mean, tape.constant(w_mean.transpose())));
    const ad::Var b = ad::sum(ad::mul(g.log_std, tape.constant(w_log_std.transpose())));
    return ad::add(ad::add(a, b), ad::scale(g.value, w_value));
  }
};

inline TokenSequence random_tokens(const PolicyConfig& c, Rng& rng) {
  ObservationImage img;
  img.width = c.map_width;
  img.height = c.map_height;
  img.channels = c.channels;
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform01());
  return tokenize(img, c.patch_size);
}

inline double readout_loss(const Policy& policy, const ParameterSet& params, const TokenSequence& tokens,
                           const EpisodicMemory& memory, const Readout& r) {
  ad::Tape tape(false);
  const auto g = policy.build(tape, params, nullptr, tokens, memory);
  return r.loss(tape, g).scalar();
}

inline ParameterSet readout_grads(const Policy& policy, const ParameterSet& params, const TokenSequence& tokens,
                                  const EpisodicMemory& memory, const Readout& r) {
  ParameterSet grads = params.zeros_like();
  ad::Tape tape(true);
  const auto g = policy.build(tape, params, &grads, tokens, memory);
  tape.backward(r.loss(tape, g));
  return grads;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // tensor name of the worst entry
};

// Central differences against the tape. `stride` > 1 checks every stride-th
// scalar of each tensor (first entry always included). Relative error is
// |a - n| / max(|a|, |n|, floor).
inline GradCheck check_gradients(const Policy& policy, const ParameterSet& params, const TokenSequence& tokens,
                                 const EpisodicMemory& memory, const Readout& r, std::size_t stride = 1,
                                 double eps = 1e-5, double floor = 1e-6) {
  const ParameterSet analytic = readout_grads(policy, params, tokens, memory, r);
  ParameterSet probe = params;
  GradCheck out;
  for (std::size_t t = 0; t < probe.tensors.size(); ++t) {
    ad::Matrix& m = probe.tensors[t];
    for (Eigen::Index i = 0; i < m.size(); i += static_cast<Eigen::Index>(stride)) {
      const double keep = m.data()[i];
      m.data()[i] = keep + eps;
      const double up = readout_loss(policy, probe, tokens, memory, r);
      m.data()[i] = keep - eps;
      const double down = readout_loss(policy, probe, tokens, memory, r);
      m.data()[i] = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.tensors[t].data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = probe.names[t];
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace graphsparse::testing
