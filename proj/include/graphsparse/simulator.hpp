#pragma once

#include <cstdint>
#include <string>

#include "graphsparse/grid.hpp"
#include "graphsparse/observation.hpp"
#include "graphsparse/pruner.hpp"
#include "graphsparse/reward.hpp"
#include "graphsparse/rng.hpp"
#include "graphsparse/serialize.hpp"
#include "graphsparse/tree.hpp"

namespace graphsparse {

struct SimConfig {
  EnvConfig env;
  int growth_attempts = 25;  // RRT extensions per growth call
  double growth_step = 10.0;
  /// Zero means 0.3 * fov_radius.
  double frontier_distance = 0.0;
  int max_growth_calls = 100;
  RewardConstants reward;
  PrunerConfig pruner;
  int patch_size = 25;

  double resolved_frontier_distance() const {
    return frontier_distance > 0.0 ? frontier_distance : 0.3 * env.fov_radius;
  }
  void validate() const;
};

enum class PruneStrategy { kNone, kRandom, kMixture };

enum class Termination { kNone, kFullCoverage, kMoveCap, kGrowthCap };
const char* termination_name(Termination t);

/// Everything observable about one environment step.
struct StepResult {
  long prune_target = 0;  // prune_count for this round
  long pruned = 0;
  int attempts = 0;       // N_a
  bool moved = false;
  long revealed = 0;
  RewardBreakdown reward;
  double coverage = 0.0;
  std::size_t tree_size = 0;  // after pruning, before the next growth call
  bool done = false;
  Termination cause = Termination::kNone;
};

/// One exploration episode: map, RRT and robot, advanced one pruning round
/// at a time. The tree is grown once on reset and once after every
/// non-terminal step, so observation() always shows the tree the next
/// pruning decision acts on.
class Simulator {
 public:
  Simulator(SimConfig config, std::uint64_t episode_seed);

  void reset(std::uint64_t episode_seed);

  /// Prunes with the given strategy (`action` is required for kMixture),
  /// selects and executes a frontier move, scores the round and checks
  /// termination. Throws std::logic_error once the episode is done.
  StepResult step(PruneStrategy strategy, const GmmAction* action = nullptr);

  TokenSequence observation() const;
  ObservationImage image() const;

  const SimConfig& config() const { return config_; }
  const GridMap& map() const { return map_; }
  const ExplorationTree& tree() const { return tree_; }
  const RobotState& robot() const { return robot_; }
  NodeId anchor() const;
  int growth_calls() const { return growth_calls_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }
  std::uint64_t episode_seed() const { return episode_seed_; }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  void grow_once();

  SimConfig config_;
  std::uint64_t episode_seed_ = 0;
  GridMap map_;
  ExplorationTree tree_;
  RobotState robot_;
  Rng growth_rng_;
  Rng prune_rng_;
  int growth_calls_ = 0;
  int steps_ = 0;
  bool done_ = false;
};

}  // namespace graphsparse
