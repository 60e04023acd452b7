#include "graphsparse/tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace graphsparse {

ExplorationTree::ExplorationTree(const GridMap& map, Cell root)
    : cell_owner_(static_cast<std::size_t>(map.width()) * map.height(), kNoNode), width_(map.width()) {
  if (!map.in_bounds(root) || !map.is_free(root))
    throw std::invalid_argument("ExplorationTree: root must be a free in-bounds cell");
  root_ = add_node(kNoNode, root);
  added_since_prune_ = 0;
}

NodeId ExplorationTree::node_at(Cell c) const {
  return cell_owner_[static_cast<std::size_t>(c.y) * width_ + c.x];
}

std::vector<NodeId> ExplorationTree::alive_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(alive_count_);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive) ids.push_back(static_cast<NodeId>(i));
  return ids;
}

NodeId ExplorationTree::add_node(NodeId parent, Cell cell) {
  if (parent != kNoNode && !alive(parent)) throw std::logic_error("add_node: dead parent");
  if (node_at(cell) != kNoNode) throw std::logic_error("add_node: cell already hosts a node");
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(TreeNode{cell, parent, {}, true});
  if (parent != kNoNode) nodes_[parent].children.push_back(id);  // ids grow, so order holds
  cell_owner_[static_cast<std::size_t>(cell.y) * width_ + cell.x] = id;
  ++alive_count_;
  ++added_since_prune_;
  return id;
}

void ExplorationTree::remove_node(NodeId id, NodeId anchor) {
  if (!alive(id)) throw std::logic_error("remove_node: node " + std::to_string(id) + " is not alive");
  if (id == root_) throw std::logic_error("remove_node: refusing to remove the root");
  if (id == anchor) throw std::logic_error("remove_node: refusing to remove the robot anchor");
  TreeNode& victim = nodes_[id];
  TreeNode& parent = nodes_[victim.parent];
  parent.children.erase(std::find(parent.children.begin(), parent.children.end(), id));
  for (NodeId c : victim.children) {
    nodes_[c].parent = victim.parent;
    parent.children.insert(std::lower_bound(parent.children.begin(), parent.children.end(), c), c);
  }
  victim.children.clear();
  victim.alive = false;
  victim.parent = kNoNode;
  cell_owner_[static_cast<std::size_t>(victim.cell.y) * width_ + victim.cell.x] = kNoNode;
  --alive_count_;
}

NodeId ExplorationTree::nearest(Cell c) const {
  NodeId best = kNoNode;
  long best_d = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].alive) continue;
    const long d = squared_distance(nodes_[i].cell, c);
    if (best == kNoNode || d < best_d) {
      best = static_cast<NodeId>(i);
      best_d = d;
    }
  }
  return best;
}

std::vector<NodeId> ExplorationTree::path(NodeId from, NodeId to) const {
  if (!alive(from) || !alive(to)) throw std::logic_error("path: endpoint not alive");
  std::vector<NodeId> up_from;
  for (NodeId n = from; n != kNoNode; n = nodes_[n].parent) up_from.push_back(n);
  std::vector<NodeId> up_to;
  NodeId meet = kNoNode;
  for (NodeId n = to; n != kNoNode; n = nodes_[n].parent) {
    if (std::find(up_from.begin(), up_from.end(), n) != up_from.end()) {
      meet = n;
      break;
    }
    up_to.push_back(n);
  }
  if (meet == kNoNode) throw std::logic_error("path: nodes are disconnected");
  std::vector<NodeId> out;
  for (NodeId n : up_from) {
    out.push_back(n);
    if (n == meet) break;
  }
  out.insert(out.end(), up_to.rbegin(), up_to.rend());
  return out;
}

std::optional<std::string> ExplorationTree::audit(const GridMap& map) const {
  auto fail = [](const std::string& what) { return std::optional<std::string>(what); };
  if (!alive(root_)) return fail("root is not alive");
  std::size_t alive = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    const TreeNode& n = nodes_[i];
    if (!n.alive) {
      if (!n.children.empty()) return fail("dead node " + std::to_string(id) + " has children");
      continue;
    }
    ++alive;
    if (!map.in_bounds(n.cell) || !map.is_free(n.cell) || !map.is_explored(n.cell))
      return fail("node " + std::to_string(id) + " is not on an explored free cell");
    if (node_at(n.cell) != id) return fail("cell owner mismatch at node " + std::to_string(id));
    if (id == root_) {
      if (n.parent != kNoNode) return fail("root has a parent");
    } else {
      if (n.parent == kNoNode) return fail("second root " + std::to_string(id));
      if (!this->alive(n.parent)) return fail("node " + std::to_string(id) + " has a dead parent");
      const auto& sib = nodes_[n.parent].children;
      if (std::find(sib.begin(), sib.end(), id) == sib.end())
        return fail("parent of " + std::to_string(id) + " does not list it");
    }
    if (!std::is_sorted(n.children.begin(), n.children.end()) ||
        std::adjacent_find(n.children.begin(), n.children.end()) != n.children.end())
      return fail("children of " + std::to_string(id) + " not sorted/unique");
    for (NodeId c : n.children)
      if (!this->alive(c) || nodes_[c].parent != id)
        return fail("child link " + std::to_string(id) + "->" + std::to_string(c) + " inconsistent");
  }
  if (alive != alive_count_) return fail("alive count mismatch");
  std::vector<std::uint8_t> seen(nodes_.size(), 0);
  std::vector<NodeId> stack{root_};
  std::size_t reached = 0;
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    if (seen[n]) return fail("cycle through node " + std::to_string(n));
    seen[n] = 1;
    ++reached;
    for (NodeId c : nodes_[n].children) stack.push_back(c);
  }
  if (reached != alive_count_) return fail("tree is disconnected");
  return std::nullopt;
}

void ExplorationTree::write_snapshot(std::ostream& os) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (n.alive) os << i << ' ' << n.cell.x << ' ' << n.cell.y << ' ' << n.parent << '\n';
  }
}

ExplorationTree ExplorationTree::from_raw(int width, int height, std::vector<TreeNode> nodes, NodeId root,
                                          long added_since_prune) {
  ExplorationTree t;
  t.width_ = width;
  t.cell_owner_.assign(static_cast<std::size_t>(width) * height, kNoNode);
  t.nodes_ = std::move(nodes);
  t.root_ = root;
  t.added_since_prune_ = added_since_prune;
  for (std::size_t i = 0; i < t.nodes_.size(); ++i) {
    if (!t.nodes_[i].alive) continue;
    ++t.alive_count_;
    t.cell_owner_[static_cast<std::size_t>(t.nodes_[i].cell.y) * width + t.nodes_[i].cell.x] = static_cast<NodeId>(i);
  }
  return t;
}

namespace {

int step_component(double v) {
  // Truncate toward zero, tolerant of representation error on exact values.
  return static_cast<int>(v >= 0 ? std::floor(v + 1e-9) : std::ceil(v - 1e-9));
}

}  // namespace

std::vector<NodeId> grow(ExplorationTree& tree, const GridMap& map, int attempts, double step, Rng& rng) {
  std::vector<NodeId> added;
  const auto& space = map.explored_free_cells();
  if (space.empty() || tree.size() == 0) return added;
  for (int a = 0; a < attempts; ++a) {
    const Cell sample = space[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.size()) - 1))];
    const NodeId near = tree.nearest(sample);
    const Cell from = tree.node(near).cell;
    const double d = distance(from, sample);
    if (d == 0.0) continue;
    Cell to = sample;
    if (d > step) {
      to = {from.x + step_component((sample.x - from.x) * step / d),
            from.y + step_component((sample.y - from.y) * step / d)};
    }
    if (to == from || !map.in_bounds(to) || !map.is_free(to) || !map.is_explored(to)) continue;
    if (tree.node_at(to) != kNoNode) continue;
    if (!segment_traversable(map, from, to)) continue;
    added.push_back(tree.add_node(near, to));
  }
  return added;
}

namespace {

// Unexplored cells enclosed by seen obstacle walls are not frontier: nothing
// the robot can reach borders them.
bool borders_explored_free(const GridMap& map, Cell q) {
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int k = 0; k < 4; ++k) {
    const Cell n{q.x + kDx[k], q.y + kDy[k]};
    if (map.in_bounds(n) && map.is_explored(n) && map.is_free(n)) return true;
  }
  return false;
}

}  // namespace

bool is_frontier_cell(const GridMap& map, Cell c, double frontier_distance) {
  const int r = static_cast<int>(std::floor(frontier_distance));
  const double r2 = frontier_distance * frontier_distance;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      if (static_cast<double>(dx * dx + dy * dy) > r2) continue;
      const Cell q{c.x + dx, c.y + dy};
      if (map.in_bounds(q) && !map.is_explored(q) && borders_explored_free(map, q)) return true;
    }
  return false;
}

std::vector<NodeClass> classify_nodes(const ExplorationTree& tree, const GridMap& map, double frontier_distance) {
  std::vector<NodeClass> out(tree.capacity());
  for (std::size_t i = 0; i < tree.capacity(); ++i) {
    const TreeNode& n = tree.node(static_cast<NodeId>(i));
    if (!n.alive) continue;
    out[i].is_leaf = n.children.empty();
    out[i].is_split = n.children.size() >= 2;
    out[i].is_frontier = is_frontier_cell(map, n.cell, frontier_distance);
  }
  return out;
}

bool frontier_precedes(const ExplorationTree& tree, Cell robot, NodeId a, NodeId b) {
  const long da = squared_distance(tree.node(a).cell, robot);
  const long db = squared_distance(tree.node(b).cell, robot);
  return da != db ? da < db : a < b;
}

FrontierChoice select_frontier(const ExplorationTree& tree, const GridMap& map, const RobotState& robot,
                               const std::vector<NodeClass>& classes) {
  FrontierChoice choice;
  std::vector<NodeId> candidates;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto id = static_cast<NodeId>(i);
    if (tree.alive(id) && classes[i].is_frontier && !(tree.node(id).cell == robot.position))
      candidates.push_back(id);
  }
  std::sort(candidates.begin(), candidates.end(),
            [&](NodeId a, NodeId b) { return frontier_precedes(tree, robot.position, a, b); });
  if (candidates.empty()) return choice;

  for (NodeId cand : candidates) {
    const Cell cell = tree.node(cand).cell;
    if (map.is_free(cell) && reveals_any(map, cell, robot.fov_radius)) {
      choice.target = cand;
      return choice;
    }
    ++choice.attempts;
  }
  return choice;
}

long move_robot(const ExplorationTree& tree, GridMap& map, RobotState& robot, NodeId target) {
  if (!tree.alive(target)) throw std::invalid_argument("move_robot: target is not a live node");
  const Cell goal = tree.node(target).cell;
  if (!map.is_free(goal) || !map.is_explored(goal))
    throw std::invalid_argument("move_robot: target is not on a free explored cell");
  const NodeId anchor = tree.nearest(robot.position);
  long revealed = 0;
  for (NodeId n : tree.path(anchor, target)) {
    robot.position = tree.node(n).cell;
    revealed += reveal(map, robot);
  }
  ++robot.moves_taken;
  return revealed;
}

}  // namespace graphsparse
