#include "graphsparse/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace graphsparse {

void PrunerConfig::validate() const {
  if (!(prune_fraction >= 0.0 && prune_fraction < 1.0))
    throw std::invalid_argument("invalid pruner config 'prune_fraction': must lie in [0,1)");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("invalid pruner config 'sigma_min': must be > 0");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("invalid pruner config 'noise_scale': must be >= 0");
}

namespace {

double component_density(const GmmComponent& c, Vec2 x) {
  const double zx = (x[0] - c.mean[0]) / c.stddev[0];
  const double zy = (x[1] - c.mean[1]) / c.stddev[1];
  return c.weight * std::exp(-0.5 * (zx * zx + zy * zy)) / (2.0 * std::numbers::pi * c.stddev[0] * c.stddev[1]);
}

}  // namespace

double gmm_density(const GmmAction& action, Vec2 x) {
  double p = 0.0;
  for (const auto& c : action.components)
    if (c.active) p += component_density(c, x);
  return p;
}

double gmm_density_ungated(const GmmAction& action, Vec2 x) {
  double p = 0.0;
  for (const auto& c : action.components) p += component_density(c, x);
  return p;
}

double gmm_max_density(const GmmAction& action, int width, int height) {
  double best = 0.0;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      best = std::max(best, gmm_density_ungated(action, {static_cast<double>(x), static_cast<double>(y)}));
  return best;
}

double noise_pattern(Vec2 x, Vec2 frequency) {
  return (std::sin(frequency[0] * x[0]) * std::cos(frequency[1] * x[1]) + 1.0) / 2.0;
}

Vec2 resolved_noise_frequency(const PrunerConfig& config, int width, int height) {
  const double two_pi = 2.0 * std::numbers::pi;
  return {config.noise_frequency[0] > 0.0 ? config.noise_frequency[0] : two_pi / width,
          config.noise_frequency[1] > 0.0 ? config.noise_frequency[1] : two_pi / height};
}

double apply_noise(const PrunerConfig& config, Vec2 frequency, Vec2 x, double base_density,
                   double global_max_density) {
  return base_density + config.noise_scale * global_max_density * noise_pattern(x, frequency);
}

long prune_count(long nodes_added_since_prune, double prune_fraction, std::size_t tree_size) {
  if (nodes_added_since_prune <= 0) return 0;
  // The epsilon keeps exact products such as 0.96 * 50 from flooring to 47.
  auto n = static_cast<long>(std::floor(prune_fraction * static_cast<double>(nodes_added_since_prune) + 1e-9));
  const long keep_limit = static_cast<long>(tree_size) - 2;
  return std::clamp(n, 0L, std::max(0L, keep_limit));
}

std::vector<NodeId> prunable_nodes(const ExplorationTree& tree, NodeId anchor) {
  std::vector<NodeId> ids;
  for (NodeId id : tree.alive_ids())
    if (id != tree.root() && id != anchor) ids.push_back(id);
  return ids;
}

PruneSelection select_prune_set(const ExplorationTree& tree, NodeId anchor, const GmmAction& action, long n,
                                const PrunerConfig& config, int width, int height) {
  PruneSelection sel;
  const auto candidates = prunable_nodes(tree, anchor);
  const auto take = static_cast<std::size_t>(std::clamp<long>(n, 0, static_cast<long>(candidates.size())));
  if (take == 0) return sel;

  const bool noisy = config.noise_enabled && config.noise_scale > 0.0;
  const double global_max = noisy ? gmm_max_density(action, width, height) : 0.0;
  const Vec2 freq = resolved_noise_frequency(config, width, height);

  std::vector<std::pair<double, NodeId>> scored;
  scored.reserve(candidates.size());
  for (NodeId id : candidates) {
    const Cell c = tree.node(id).cell;
    const Vec2 x{static_cast<double>(c.x), static_cast<double>(c.y)};
    double d = gmm_density(action, x);
    if (noisy) d = apply_noise(config, freq, x, d, global_max);
    scored.emplace_back(d, id);
  }
  auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
  for (std::size_t i = 0; i < take; ++i) {
    sel.ids.push_back(scored[i].second);
    sel.densities.push_back(scored[i].first);
  }
  return sel;
}

std::vector<NodeId> random_prune_set(const ExplorationTree& tree, NodeId anchor, long n, Rng& rng) {
  auto ids = prunable_nodes(tree, anchor);
  const auto take = static_cast<std::size_t>(std::clamp<long>(n, 0, static_cast<long>(ids.size())));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(ids.size()) - 1));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(take);
  return ids;
}

}  // namespace graphsparse
