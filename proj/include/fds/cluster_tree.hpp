#pragma once

#include <utility>
#include <vector>

#include "fds/matrix.hpp"

namespace fds {

/// Contiguous index range [begin, end) owned by one tree node.
struct ClusterNode {
  index_t begin = 0;
  index_t end = 0;
  int level = 0;

  index_t size() const { return end - begin; }
};

/// Complete binary tree over 0..N-1. Node ids start at 1 for the root and the
/// children of node t are 2t and 2t+1.
class ClusterTree {
public:
  ClusterTree() = default;

  /// Depth L = max(0, floor(log2(N / leaf_size))); each split gives the left
  /// child the extra index of an odd range.
  static ClusterTree uniform(index_t n, index_t leaf_size);

  index_t size() const { return n_; }
  int depth() const { return depth_; }
  index_t node_count() const { return static_cast<index_t>(nodes_.size()) - 1; }
  index_t root() const { return 1; }

  const ClusterNode& node(index_t t) const { return nodes_.at(static_cast<std::size_t>(t)); }
  bool is_leaf(index_t t) const { return node(t).level == depth_; }
  index_t parent(index_t t) const { return t / 2; }
  index_t left(index_t t) const { return 2 * t; }
  index_t right(index_t t) const { return 2 * t + 1; }
  index_t sibling(index_t t) const { return t ^ 1; }

  /// Node ids on one level, left to right.
  std::vector<index_t> level_nodes(int level) const;
  std::vector<index_t> leaves() const { return level_nodes(depth_); }
  /// All node ids from the deepest level up to the root.
  std::vector<index_t> bottom_up() const;

private:
  index_t n_ = 0;
  int depth_ = 0;
  std::vector<ClusterNode> nodes_; // index 0 unused
};

ClusterTree build_uniform_tree(index_t n, index_t leaf_size);

/// One (left, right) pair per parent, ordered by level and then node id.
std::vector<std::pair<index_t, index_t>> sibling_pairs(const ClusterTree& tree);

} // namespace fds
