#include "graphsparse/simulator.hpp"

#include <stdexcept>

namespace graphsparse {

void SimConfig::validate() const {
  env.validate();
  reward.validate();
  pruner.validate();
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("invalid sim config '" + key + "': " + why);
  };
  if (growth_attempts < 1) fail("rrt_attempts_per_growth", "must be >= 1");
  if (!(growth_step > 0.0)) fail("rrt_step", "must be > 0");
  if (!(frontier_distance >= 0.0)) fail("frontier_distance", "must be >= 0");
  if (max_growth_calls < 1) fail("max_rrt_growth_attempts", "must be >= 1");
  if (patch_size < 1 || env.width % patch_size != 0 || env.height % patch_size != 0)
    fail("patch_size", "must divide env_dimensions (" + std::to_string(env.width) + "x" +
                           std::to_string(env.height) + ", patch " + std::to_string(patch_size) + ")");
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::kNone:
      return "none";
    case Termination::kFullCoverage:
      return "full-coverage";
    case Termination::kMoveCap:
      return "move-cap";
    case Termination::kGrowthCap:
      return "growth-cap";
  }
  return "unknown";
}

Simulator::Simulator(SimConfig config, std::uint64_t episode_seed) : config_(std::move(config)) {
  config_.validate();
  reset(episode_seed);
}

void Simulator::reset(std::uint64_t episode_seed) {
  episode_seed_ = episode_seed;
  Environment env = generate_environment(config_.env, episode_seed);
  map_ = std::move(env.map);
  robot_ = env.robot;
  tree_ = ExplorationTree(map_, robot_.position);
  growth_rng_ = Rng(derive_seed(episode_seed, {1}));
  prune_rng_ = Rng(derive_seed(episode_seed, {2}));
  growth_calls_ = 0;
  steps_ = 0;
  done_ = false;
  grow_once();
}

void Simulator::grow_once() {
  grow(tree_, map_, config_.growth_attempts, config_.growth_step, growth_rng_);
  ++growth_calls_;
}

NodeId Simulator::anchor() const {
  const NodeId a = tree_.node_at(robot_.position);
  return a != kNoNode ? a : tree_.nearest(robot_.position);
}

StepResult Simulator::step(PruneStrategy strategy, const GmmAction* action) {
  if (done_) throw std::logic_error("Simulator::step called on a finished episode");
  if (strategy == PruneStrategy::kMixture && !action)
    throw std::invalid_argument("Simulator::step: mixture pruning needs an action");

  StepResult out;
  const auto classes = classify_nodes(tree_, map_, config_.resolved_frontier_distance());
  const NodeId anchor_id = anchor();

  std::vector<NodeId> prune_ids;
  if (strategy != PruneStrategy::kNone) {
    out.prune_target = prune_count(tree_.nodes_added_since_prune(), config_.pruner.prune_fraction, tree_.size());
    if (strategy == PruneStrategy::kRandom)
      prune_ids = random_prune_set(tree_, anchor_id, out.prune_target, prune_rng_);
    else
      prune_ids = select_prune_set(tree_, anchor_id, *action, out.prune_target, config_.pruner, map_.width(),
                                   map_.height())
                      .ids;
  }
  StepRewardInput reward_in;
  reward_in.pruned.reserve(prune_ids.size());
  for (NodeId id : prune_ids) {
    reward_in.pruned.push_back(classes[static_cast<std::size_t>(id)]);
    tree_.remove_node(id, anchor_id);
  }
  tree_.reset_added_since_prune();
  out.pruned = static_cast<long>(prune_ids.size());

  const FrontierChoice choice = select_frontier(tree_, map_, robot_, classes);
  out.attempts = choice.attempts;
  if (choice.target) {
    out.revealed = move_robot(tree_, map_, robot_, *choice.target);
    out.moved = true;
  }
  ++steps_;

  out.coverage = coverage(map_);
  if (map_.explored_free_count() == map_.free_cell_count())
    out.cause = Termination::kFullCoverage;
  else if (robot_.moves_taken >= config_.reward.max_moves)
    out.cause = Termination::kMoveCap;
  else if (growth_calls_ >= config_.max_growth_calls)
    out.cause = Termination::kGrowthCap;
  out.done = out.cause != Termination::kNone;

  reward_in.attempts = out.attempts;
  reward_in.terminal = out.done;
  reward_in.coverage = out.coverage;
  out.reward = step_reward(reward_in, config_.reward);
  out.tree_size = tree_.size();

  done_ = out.done;
  if (!done_) grow_once();
  return out;
}

ObservationImage Simulator::image() const { return render(map_, tree_, robot_); }

TokenSequence Simulator::observation() const { return tokenize(image(), config_.patch_size); }

namespace {
constexpr std::uint32_t kSimMagic = 0x53494d31;  // "SIM1"
}

void Simulator::save(BinaryWriter& w) const {
  w.put(kSimMagic);
  w.put(episode_seed_);
  w.put<std::int32_t>(map_.width());
  w.put<std::int32_t>(map_.height());
  w.put_vector(map_.occupancy());
  w.put_vector(map_.explored());
  std::vector<std::int32_t> cells;
  cells.reserve(map_.explored_free_cells().size() * 2);
  for (Cell c : map_.explored_free_cells()) {
    cells.push_back(c.x);
    cells.push_back(c.y);
  }
  w.put_vector(cells);

  const auto& nodes = tree_.raw_nodes();
  w.put<std::uint64_t>(nodes.size());
  for (const TreeNode& n : nodes) {
    w.put<std::int32_t>(n.cell.x);
    w.put<std::int32_t>(n.cell.y);
    w.put<std::int32_t>(n.parent);
    w.put<std::uint8_t>(n.alive ? 1 : 0);
    w.put_vector(n.children);
  }
  w.put<std::int32_t>(tree_.root());
  w.put<std::int64_t>(tree_.nodes_added_since_prune());

  w.put<std::int32_t>(robot_.position.x);
  w.put<std::int32_t>(robot_.position.y);
  w.put<std::int32_t>(robot_.fov_radius);
  w.put<std::int32_t>(robot_.moves_taken);
  w.put_string(growth_rng_.state());
  w.put_string(prune_rng_.state());
  w.put<std::int32_t>(growth_calls_);
  w.put<std::int32_t>(steps_);
  w.put<std::uint8_t>(done_ ? 1 : 0);
}

void Simulator::load(BinaryReader& r) {
  if (r.get<std::uint32_t>() != kSimMagic) throw std::runtime_error("checkpoint: bad environment record");
  episode_seed_ = r.get<std::uint64_t>();
  const int width = r.get<std::int32_t>();
  const int height = r.get<std::int32_t>();
  if (width != config_.env.width || height != config_.env.height)
    throw std::runtime_error("checkpoint: environment dimensions do not match configuration");
  auto occupancy = r.get_vector<std::uint8_t>();
  auto explored = r.get_vector<std::uint8_t>();
  const auto cells = r.get_vector<std::int32_t>();
  std::vector<Cell> explored_free;
  explored_free.reserve(cells.size() / 2);
  for (std::size_t i = 0; i + 1 < cells.size(); i += 2) explored_free.push_back({cells[i], cells[i + 1]});
  map_ = GridMap::from_raw(width, height, std::move(occupancy), std::move(explored), std::move(explored_free));

  const auto count = r.get<std::uint64_t>();
  std::vector<TreeNode> nodes(count);
  for (TreeNode& n : nodes) {
    n.cell.x = r.get<std::int32_t>();
    n.cell.y = r.get<std::int32_t>();
    n.parent = r.get<std::int32_t>();
    n.alive = r.get<std::uint8_t>() != 0;
    n.children = r.get_vector<std::int32_t>();
  }
  const NodeId root = r.get<std::int32_t>();
  const long added = r.get<std::int64_t>();
  tree_ = ExplorationTree::from_raw(width, height, std::move(nodes), root, added);

  robot_.position.x = r.get<std::int32_t>();
  robot_.position.y = r.get<std::int32_t>();
  robot_.fov_radius = r.get<std::int32_t>();
  robot_.moves_taken = r.get<std::int32_t>();
  growth_rng_.set_state(r.get_string());
  prune_rng_.set_state(r.get_string());
  growth_calls_ = r.get<std::int32_t>();
  steps_ = r.get<std::int32_t>();
  done_ = r.get<std::uint8_t>() != 0;
  if (auto problem = tree_.audit(map_)) throw std::runtime_error("checkpoint: restored tree is invalid: " + *problem);
}

}  // namespace graphsparse
