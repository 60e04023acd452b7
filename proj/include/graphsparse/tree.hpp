#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "graphsparse/grid.hpp"
#include "graphsparse/rng.hpp"

namespace graphsparse {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct TreeNode {
  Cell cell;
  NodeId parent = kNoNode;
  std::vector<NodeId> children;  // kept sorted ascending
  bool alive = false;
};

/// Global RRT over explored free space.
///
/// Ids are never reused within a tree. At most one live node occupies a cell.
/// Removing a node re-parents its children to the removed node's parent, so
/// the tree stays connected and pruning never deletes descendants implicitly.
class ExplorationTree {
 public:
  ExplorationTree() = default;
  ExplorationTree(const GridMap& map, Cell root);

  NodeId root() const { return root_; }
  std::size_t size() const { return alive_count_; }
  /// One past the largest id ever issued.
  std::size_t capacity() const { return nodes_.size(); }
  bool alive(NodeId id) const { return id >= 0 && static_cast<std::size_t>(id) < nodes_.size() && nodes_[id].alive; }
  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  NodeId node_at(Cell c) const;
  std::vector<NodeId> alive_ids() const;

  long nodes_added_since_prune() const { return added_since_prune_; }
  void reset_added_since_prune() { added_since_prune_ = 0; }

  NodeId add_node(NodeId parent, Cell cell);

  /// Deletes `id` and re-parents its children. `anchor` is the node nearest the
  /// robot. Throws std::logic_error for the root, the anchor or a dead id.
  void remove_node(NodeId id, NodeId anchor);

  /// Nearest live node by Euclidean distance; ties go to the lowest id.
  NodeId nearest(Cell c) const;

  /// Node sequence from `from` to `to` along tree edges (both inclusive).
  std::vector<NodeId> path(NodeId from, NodeId to) const;

  /// Structural audit: single root, acyclic, connected, link-consistent, unique
  /// cells, every node on an explored free cell. Returns a description of the
  /// first violation, or nullopt.
  std::optional<std::string> audit(const GridMap& map) const;

  /// Line-delimited records "id x y parent" for live nodes, ascending id.
  void write_snapshot(std::ostream& os) const;

  // Raw access for checkpointing.
  const std::vector<TreeNode>& raw_nodes() const { return nodes_; }
  static ExplorationTree from_raw(int width, int height, std::vector<TreeNode> nodes, NodeId root,
                                  long added_since_prune);

 private:
  std::vector<TreeNode> nodes_;
  std::vector<NodeId> cell_owner_;
  int width_ = 0;
  NodeId root_ = kNoNode;
  std::size_t alive_count_ = 0;
  long added_since_prune_ = 0;
};

struct NodeClass {
  bool is_frontier = false;
  bool is_leaf = false;
  bool is_split = false;
  friend bool operator==(const NodeClass&, const NodeClass&) = default;
};

/// Grows the tree with `attempts` RRT extensions toward uniform samples of
/// explored free space. Returns the ids that were added.
std::vector<NodeId> grow(ExplorationTree& tree, const GridMap& map, int attempts, double step, Rng& rng);

/// Classification indexed by node id (entries for dead ids are default).
std::vector<NodeClass> classify_nodes(const ExplorationTree& tree, const GridMap& map, double frontier_distance);

/// True iff an unexplored cell that 4-borders explored free space lies within
/// frontier_distance of c.
bool is_frontier_cell(const GridMap& map, Cell c, double frontier_distance);

struct FrontierChoice {
  std::optional<NodeId> target;
  int attempts = 0;  // rejected candidates examined before acceptance (N_a)
};

/// Candidate ordering for frontier selection. Nearest-first, ties on lowest id.
bool frontier_precedes(const ExplorationTree& tree, Cell robot, NodeId a, NodeId b);

/// Walks frontier nodes nearest-first; accepts the first one whose cell is
/// free and from which a reveal would uncover something. Nodes on the robot's
/// own cell are not candidates.
FrontierChoice select_frontier(const ExplorationTree& tree, const GridMap& map, const RobotState& robot,
                               const std::vector<NodeClass>& classes);

/// Moves the robot along the tree path to `target`, revealing at every path
/// node. Counts as one move. Returns newly revealed cells.
long move_robot(const ExplorationTree& tree, GridMap& map, RobotState& robot, NodeId target);

}  // namespace graphsparse
