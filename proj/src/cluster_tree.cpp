#include "fds/cluster_tree.hpp"

namespace fds {

ClusterTree ClusterTree::uniform(index_t n, index_t leaf_size) {
  if (n < 1) throw InvalidArgument("cluster tree: N must be positive");
  if (leaf_size < 2) throw InvalidArgument("cluster tree: leaf size must be at least 2");
  int depth = 0;
  while (leaf_size * (index_t{1} << (depth + 1)) <= n) ++depth;
  ClusterTree t;
  t.n_ = n;
  t.depth_ = depth;
  const index_t count = (index_t{1} << (depth + 1)) - 1;
  t.nodes_.resize(static_cast<std::size_t>(count + 1));
  t.nodes_[1] = {0, n, 0};
  for (index_t id = 1; 2 * id + 1 <= count; ++id) {
    const ClusterNode& p = t.nodes_[static_cast<std::size_t>(id)];
    const index_t mid = p.begin + (p.size() + 1) / 2;
    t.nodes_[static_cast<std::size_t>(2 * id)] = {p.begin, mid, p.level + 1};
    t.nodes_[static_cast<std::size_t>(2 * id + 1)] = {mid, p.end, p.level + 1};
  }
  return t;
}

std::vector<index_t> ClusterTree::level_nodes(int level) const {
  std::vector<index_t> ids;
  if (level < 0 || level > depth_) return ids;
  const index_t first = index_t{1} << level;
  for (index_t id = first; id < 2 * first; ++id) ids.push_back(id);
  return ids;
}

std::vector<index_t> ClusterTree::bottom_up() const {
  std::vector<index_t> ids;
  for (int l = depth_; l >= 0; --l)
    for (index_t id : level_nodes(l)) ids.push_back(id);
  return ids;
}

ClusterTree build_uniform_tree(index_t n, index_t leaf_size) {
  return ClusterTree::uniform(n, leaf_size);
}

std::vector<std::pair<index_t, index_t>> sibling_pairs(const ClusterTree& tree) {
  std::vector<std::pair<index_t, index_t>> pairs;
  for (int l = 1; l <= tree.depth(); ++l)
    for (index_t id : tree.level_nodes(l))
      if (id % 2 == 0) pairs.emplace_back(id, id + 1);
  return pairs;
}

} // namespace fds
