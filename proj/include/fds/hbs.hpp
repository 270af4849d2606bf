#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fds/cluster_tree.hpp"
#include "fds/hodlr.hpp"
#include "fds/linalg.hpp"

namespace fds {

/// Output of the Woodbury variant for A = U Atilde V^* + D:
/// A^{-1} = E (Atilde + Dhat)^{-1} F^* + G.
struct WoodburyVariant {
  RMatrix Dhat; // (V^* D^{-1} U)^{-1}
  RMatrix E;    // D^{-1} U Dhat
  RMatrix F;    // (Dhat V^* D^{-1})^*
  RMatrix G;    // D^{-1} - D^{-1} U Dhat V^* D^{-1}
};

WoodburyVariant woodbury_variant(const RMatrix& D, const RMatrix& U, const RMatrix& V);
/// Dense A^{-1} assembled from the variant and the coupling matrix.
RMatrix woodbury_variant_inverse(const WoodburyVariant& w, const RMatrix& Atilde);

/// Flat block separable matrix A = U Atilde V^* + D with block-diagonal U, V, D.
struct BlockSeparableMatrix {
  std::vector<std::pair<index_t, index_t>> partition; // [begin, end) per block
  std::vector<RMatrix> U, V, D;
  RMatrix Atilde; // K x K coupling, zero on the diagonal blocks

  index_t size() const { return partition.empty() ? 0 : partition.back().second; }
  index_t coupling_size() const { return Atilde.rows(); }
  RMatrix dense_U() const;
  RMatrix dense_V() const;
  RMatrix dense_D() const;
  RMatrix dense() const;
};

/// Row-space sampler for compression: returns a matrix whose rows are indexed by
/// `rows` and whose row space must be captured by the skeleton of `node`.
using FarFieldSampler =
    std::function<RMatrix(const ClusterTree& tree, index_t node, std::span<const index_t> rows)>;

/// [A(R, C) | A(C, R)^T] with C the complement of the node's index range.
FarFieldSampler brute_force_sampler(const BlockSource& A);

struct HbsMatrix {
  ClusterTree tree;
  double tol = 0;
  /// Indexed by node id. U[t], V[t]: leaf |I_t| x k_t, parent (k_a + k_b) x k_t.
  std::vector<RMatrix> U, V;
  /// Atilde[t] = A(skel_t, skel_sibling(t)).
  std::vector<RMatrix> Atilde;
  std::vector<RMatrix> leaf_diag;
  /// Retained global indices of each non-root node.
  std::vector<std::vector<index_t>> skeleton;

  index_t size() const { return tree.size(); }
  index_t rank(index_t t) const { return U[static_cast<std::size_t>(t)].cols(); }
  index_t max_rank() const;
  /// Global indices whose skeleton node t chooses from.
  std::vector<index_t> candidate_rows(index_t t) const;

  std::vector<double> apply(std::span<const double> x) const;
  RMatrix dense() const;
  /// Coupling between leaf skeleton coordinates, all levels above the leaves.
  std::vector<double> apply_leaf_coupling(std::span<const double> xhat) const;
  /// Leaf bases composed through the transfer matrices, |I_t| x k_t.
  RMatrix long_basis(index_t t) const;
};

HbsMatrix compress_to_hbs(const BlockSource& A, const ClusterTree& tree, double tol,
                          const FarFieldSampler& sampler = {});
HbsMatrix compress_to_hbs(const RMatrix& A, const ClusterTree& tree, double tol);

std::vector<double> hbs_matvec(const HbsMatrix& H, std::span<const double> x);

/// Leaf-level flattening of an HBS matrix.
BlockSeparableMatrix hbs_to_block_separable(const HbsMatrix& H);

struct HbsStorage {
  index_t stored_scalars = 0;
  /// per_level_ranks[l] = max k_t over nodes on level l, l = 1..L; entry 0 unused.
  std::vector<index_t> per_level_ranks;
};
HbsStorage hbs_storage(const HbsMatrix& H);

class HbsInverse {
public:
  struct Node {
    RMatrix Dhat, E, F, G;
    double dtilde_condition = 0; // 1-norm condition of Dtilde
  };

  HbsInverse() = default;
  explicit HbsInverse(const HbsMatrix& H);

  std::vector<double> apply(std::span<const double> u) const;
  RMatrix dense() const;
  index_t size() const { return tree_.size(); }
  const Node& node(index_t t) const { return nodes_[static_cast<std::size_t>(t)]; }
  const RMatrix& root_inverse() const { return G1_; }
  index_t stored_scalars() const;

private:
  ClusterTree tree_;
  std::vector<Node> nodes_;
  RMatrix G1_;
};

HbsInverse hbs_invert(const HbsMatrix& H);
std::vector<double> hbs_apply_inverse(const HbsInverse& inv, std::span<const double> u);

} // namespace fds
