#pragma once

#include <span>
#include <vector>

#include "fds/cluster_tree.hpp"
#include "fds/linalg.hpp"

namespace fds {

struct StorageReport {
  index_t stored_scalars = 0;
  index_t max_rank = 0;
};

/// Leaf size rule: twice the expected off-diagonal rank, at least 16.
index_t default_leaf_size(index_t expected_rank);

/// HODLR matrix: one low-rank factor per ordered sibling pair and dense leaf blocks.
struct HodlrMatrix {
  ClusterTree tree;
  double tol = 0;
  /// offdiag[t] approximates A(I_t, I_sibling(t)); entry 0 and 1 unused.
  std::vector<RLowRank> offdiag;
  /// leaf_diag[t] = A(I_t, I_t) for leaves; empty elsewhere.
  std::vector<RMatrix> leaf_diag;

  index_t size() const { return tree.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  RMatrix apply(const RMatrix& X) const;
  RMatrix dense() const;
  index_t max_rank() const;
  StorageReport storage() const;
};

HodlrMatrix compress_to_hodlr(const RMatrix& A, const ClusterTree& tree, double tol);
HodlrMatrix compress_to_hodlr(const BlockSource& A, const ClusterTree& tree, double tol);

std::vector<double> hodlr_matvec(const HodlrMatrix& H, std::span<const double> x);

/// Recursive Woodbury inverse, kept as an operator.
class HodlrInverseWoodbury {
public:
  struct Node {
    RMatrix Y;         // D^{-1} W, n_t x (k_a + k_b)
    RMatrix Vt;        // the stacked right factors, n_t x (k_a + k_b)
    DenseLU<double> S; // I + Vt^* D^{-1} W
    RMatrix L, R;      // recompressed correction L R^*, used when recompressed
    bool recompressed = false;
  };

  HodlrInverseWoodbury() = default;
  HodlrInverseWoodbury(const HodlrMatrix& H, bool recompress = false);

  std::vector<double> apply(std::span<const double> b) const;
  RMatrix apply(const RMatrix& B) const;
  StorageReport storage() const;
  index_t size() const { return tree_.size(); }
  const Node& node(index_t t) const { return nodes_[static_cast<std::size_t>(t)]; }

private:
  RMatrix apply_node(index_t t, const RMatrix& B) const;

  ClusterTree tree_;
  std::vector<Node> nodes_;
  std::vector<DenseLU<double>> leaf_lu_;
};

HodlrInverseWoodbury invert_woodbury(const HodlrMatrix& H, bool recompress = false);

/// Exact multiplicative inverse A^{-1} = B_0 B_1 ... B_L.
class HodlrInverseMultiplicative {
public:
  /// One block of a factor B_l: identity plus a low-rank term, or a dense leaf inverse.
  struct Block {
    index_t node = 0;
    RLowRank update; // the block is I + U V^*
  };
  struct Factor {
    int level = 0;
    std::vector<Block> blocks;
  };

  HodlrInverseMultiplicative() = default;
  explicit HodlrInverseMultiplicative(const HodlrMatrix& H);

  std::vector<double> apply(std::span<const double> b) const;
  StorageReport storage() const;
  index_t size() const { return tree_.size(); }

  /// factors()[l] is B_l, l = 0..L, for levels below the leaves.
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<DenseLU<double>>& leaf_inverses() const { return leaf_lu_; }
  index_t factor_count() const { return static_cast<index_t>(factors_.size()); }
  /// Maximum stored off-diagonal rank after the sweep of each level, deepest first.
  const std::vector<index_t>& rank_history() const { return rank_history_; }
  const std::vector<index_t>& original_ranks() const { return original_ranks_; }

private:
  ClusterTree tree_;
  std::vector<Factor> factors_;
  std::vector<DenseLU<double>> leaf_lu_;
  std::vector<index_t> rank_history_;
  std::vector<index_t> original_ranks_;
};

HodlrInverseMultiplicative invert_multiplicative(const HodlrMatrix& H);

StorageReport storage_report(const HodlrMatrix& H);
StorageReport storage_report(const HodlrInverseWoodbury& inv);
StorageReport storage_report(const HodlrInverseMultiplicative& inv);

} // namespace fds
