#pragma once

#include <array>
#include <vector>

#include "graphsparse/rng.hpp"
#include "graphsparse/tree.hpp"

namespace graphsparse {

using Vec2 = std::array<double, 2>;

struct GmmComponent {
  double weight = 0.0;
  Vec2 mean{0.0, 0.0};
  Vec2 stddev{1.0, 1.0};
  bool active = true;
};

/// Decoded mixture action: weights on the simplex, means inside the map,
/// per-axis standard deviations bounded below by sigma_min.
struct GmmAction {
  std::vector<GmmComponent> components;
  std::size_t size() const { return components.size(); }
};

struct PrunerConfig {
  double prune_fraction = 0.96;  // lambda_f
  double sigma_min = 1.0;
  bool noise_enabled = false;
  double noise_scale = 1e-3;
  /// Zero means "use 2*pi / map extent" for that axis.
  Vec2 noise_frequency{0.0, 0.0};

  void validate() const;
};

/// p(x) = sum over active k of pi_k N(x | mu_k, diag(sigma_k^2)).
double gmm_density(const GmmAction& action, Vec2 x);

/// Same mixture with every gate treated as open.
double gmm_density_ungated(const GmmAction& action, Vec2 x);

/// Max of the ungated mixture over all grid-cell coordinates.
double gmm_max_density(const GmmAction& action, int width, int height);

/// eta(x) = (sin(wx * x1) * cos(wy * x2) + 1) / 2, in [0, 1].
double noise_pattern(Vec2 x, Vec2 frequency);

Vec2 resolved_noise_frequency(const PrunerConfig& config, int width, int height);

/// base + noise_scale * global_max * eta(x).
double apply_noise(const PrunerConfig& config, Vec2 frequency, Vec2 x, double base_density, double global_max_density);

/// floor(lambda_f * added), clamped so that at least two nodes remain.
long prune_count(long nodes_added_since_prune, double prune_fraction, std::size_t tree_size);

/// Every live node except the root and the anchor, ascending id.
std::vector<NodeId> prunable_nodes(const ExplorationTree& tree, NodeId anchor);

struct PruneSelection {
  std::vector<NodeId> ids;         // prune order
  std::vector<double> densities;   // score of each selected node
};

/// Top-n prunable nodes by (optionally noised) density; ties on ascending id.
PruneSelection select_prune_set(const ExplorationTree& tree, NodeId anchor, const GmmAction& action, long n,
                                const PrunerConfig& config, int width, int height);

/// Uniform sample of n prunable ids without replacement.
std::vector<NodeId> random_prune_set(const ExplorationTree& tree, NodeId anchor, long n, Rng& rng);

}  // namespace graphsparse
