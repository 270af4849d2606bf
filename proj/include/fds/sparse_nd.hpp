#pragma once

#include <array>
#include <span>
#include <vector>

#include "fds/linalg.hpp"
#include "fds/spectrum.hpp"

namespace fds {

struct CsrMatrix {
  index_t n = 0;
  std::vector<index_t> row_ptr, col;
  std::vector<double> val;

  std::vector<double> apply(std::span<const double> x) const;
  RMatrix dense() const;
  double entry(index_t i, index_t j) const;
  index_t nnz() const { return static_cast<index_t>(val.size()); }
};

/// h^-2 (2 dim on the diagonal, -1 per grid neighbor) + m on the n^dim interior grid of
/// the unit cube, Dirichlet outside; unknowns ordered with x fastest.
struct StencilMatrix {
  int dim = 2;
  index_t n = 0;
  double h = 0;
  std::vector<double> m;
  CsrMatrix A;

  index_t size() const { return A.n; }
  index_t index(std::array<index_t, 3> p) const;
  std::array<index_t, 3> point(index_t i) const;
};

/// m_field empty means m = 0; otherwise it holds one sample per grid point.
StencilMatrix assemble_stencil(int dim, index_t n, std::span<const double> m_field = {});
StencilMatrix assemble_stencil(int dim, index_t n, double m_constant);

/// Half-open grid box [lo, hi) per axis; unused axes span [0, 1).
struct GridBox {
  std::array<index_t, 3> lo{0, 0, 0}, hi{1, 1, 1};

  index_t side(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
  index_t volume() const { return side(0) * side(1) * side(2); }
  bool contains(std::array<index_t, 3> p) const;
};

struct NdNode {
  GridBox box;
  /// Separator indices for internal nodes, every box index for leaves.
  std::vector<index_t> own;
  int left = -1, right = -1, parent = -1;
  int axis = -1;

  bool is_leaf() const { return left < 0; }
};

struct NdTree {
  int dim = 2;
  index_t n = 0;
  std::vector<NdNode> nodes; // nodes[0] is the root
  /// Children before parents.
  std::vector<int> postorder() const;
  /// Elimination order of the unknowns.
  std::vector<index_t> ordering() const;
};

NdTree nd_partition(int dim, index_t n, index_t leaf_cells);
/// Dissection of one sub-box of the n^dim grid.
NdTree nd_partition_box(int dim, index_t n, const GridBox& box, index_t leaf_cells);

class NdFactors {
public:
  struct Front {
    std::vector<index_t> own, boundary;
    DenseLU<double> lu; // S_11 of the front
    RMatrix F1B, FB1;
  };

  NdFactors() = default;
  /// Multifrontal elimination of A restricted to the tree's root box.
  NdFactors(const CsrMatrix& A, NdTree tree);

  /// b and x are full-grid vectors; entries outside the root box are ignored and returned as zero.
  std::vector<double> solve(std::span<const double> b) const;
  double flops() const { return flops_; }
  const NdTree& tree() const { return tree_; }
  const Front& front(int node) const { return fronts_[static_cast<std::size_t>(node)]; }
  index_t stored_scalars() const;
  /// Lower and upper block factors in elimination order: A(P, P) = L U.
  std::pair<RMatrix, RMatrix> dense_factors() const;

private:
  NdTree tree_;
  index_t n_ = 0;
  std::vector<Front> fronts_;
  double flops_ = 0;
};

/// Throws SingularMatrixError naming the tree node whose front is singular.
NdFactors nd_factor(const CsrMatrix& A, const NdTree& tree);
NdFactors nd_factor(const StencilMatrix& A, const NdTree& tree);
std::vector<double> nd_solve(const NdFactors& F, std::span<const double> b);

enum class SchurOperator { laplace, helmholtz };

/// Singular values of S_{alpha,beta} = A(I_alpha, I_2) A_22^-1 A(I_2, I_beta), with I_alpha, I_beta
/// the halves of the top separator and I_2 the first subdomain. kappa is used for helmholtz
/// (m = -kappa^2).
SpectrumResult schur_offdiag_spectrum(int dim, index_t n, SchurOperator op, double kappa = 0.0,
                                      index_t leaf_cells = 8);

} // namespace fds
