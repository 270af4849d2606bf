#include "fds/hodlr.hpp"

#include <algorithm>
#include <string>

namespace fds {

namespace {

RMatrix rows_of(const RMatrix& A, index_t r0, index_t nr) { return A.block(r0, 0, nr, A.cols()); }

// Stacked right factors [[0, V_b], [V_a, 0]] for the sibling pair (a, b).
RMatrix stacked_right(const RLowRank& fa, const RLowRank& fb) {
  const index_t na = fa.rows(), nb = fb.rows(), ka = fa.rank(), kb = fb.rank();
  RMatrix Vt(na + nb, ka + kb);
  Vt.set_block(0, ka, fb.V);
  Vt.set_block(na, 0, fa.V);
  return Vt;
}

RMatrix block_diag(const RMatrix& A, const RMatrix& B) {
  RMatrix C(A.rows() + B.rows(), A.cols() + B.cols());
  C.set_block(0, 0, A);
  C.set_block(A.rows(), A.cols(), B);
  return C;
}

// Truncated factorization of A * B^T.
RLowRank recompress_product(const RMatrix& A, const RMatrix& B, double tol) {
  if (A.cols() == 0) return RLowRank::zero(A.rows(), B.rows());
  Cpqr<double> qa = cpqr(A, 0.0), qb = cpqr(B, 0.0);
  if (qa.rank == 0 || qb.rank == 0) return RLowRank::zero(A.rows(), B.rows());
  // A = Qa Ra Pa^T, B = Qb Rb Pb^T.
  RMatrix Ra(qa.rank, A.cols()), Rb(qb.rank, B.cols());
  for (index_t i = 0; i < qa.rank; ++i)
    for (index_t j = 0; j < A.cols(); ++j) Ra(i, qa.perm[static_cast<std::size_t>(j)]) = qa.R(i, j);
  for (index_t i = 0; i < qb.rank; ++i)
    for (index_t j = 0; j < B.cols(); ++j) Rb(i, qb.perm[static_cast<std::size_t>(j)]) = qb.R(i, j);
  Svd s = truncated_svd(matmul_adj_right(Ra, Rb), tol);
  RMatrix US = s.U;
  for (index_t i = 0; i < US.rows(); ++i)
    for (index_t j = 0; j < US.cols(); ++j) US(i, j) *= s.S[static_cast<std::size_t>(j)];
  return {matmul(qa.Q, US), matmul(qb.Q, s.V)};
}

DenseLU<double> factor_or_throw(const RMatrix& M, const std::string& what) {
  try {
    return DenseLU<double>(M);
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(what + ": " + e.what());
  }
}

} // namespace

index_t default_leaf_size(index_t expected_rank) { return std::max<index_t>(16, 2 * expected_rank); }

// ---------------------------------------------------------------------------

std::vector<double> HodlrMatrix::apply(std::span<const double> x) const {
  if (static_cast<index_t>(x.size()) != size()) throw DimensionError("hodlr_matvec: length mismatch");
  std::vector<double> y(x.size(), 0.0);
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    const auto yt = matvec(leaf_diag[static_cast<std::size_t>(t)],
                           x.subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size())));
    std::copy(yt.begin(), yt.end(), y.begin() + nd.begin);
  }
  for (index_t t = 2; t <= tree.node_count(); ++t) {
    const auto& nd = tree.node(t);
    const auto& sb = tree.node(tree.sibling(t));
    offdiag[static_cast<std::size_t>(t)].apply_add(
        x.subspan(static_cast<std::size_t>(sb.begin), static_cast<std::size_t>(sb.size())),
        std::span<double>(y).subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size())));
  }
  return y;
}

RMatrix HodlrMatrix::apply(const RMatrix& X) const {
  RMatrix Y(X.rows(), X.cols());
  for (index_t j = 0; j < X.cols(); ++j) {
    const auto c = X.col(j);
    const auto y = apply(std::span<const double>(c));
    for (index_t i = 0; i < X.rows(); ++i) Y(i, j) = y[static_cast<std::size_t>(i)];
  }
  return Y;
}

RMatrix HodlrMatrix::dense() const {
  RMatrix A(size(), size());
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    A.set_block(nd.begin, nd.begin, leaf_diag[static_cast<std::size_t>(t)]);
  }
  for (index_t t = 2; t <= tree.node_count(); ++t) {
    const auto& nd = tree.node(t);
    const auto& sb = tree.node(tree.sibling(t));
    A.set_block(nd.begin, sb.begin, offdiag[static_cast<std::size_t>(t)].dense());
  }
  return A;
}

index_t HodlrMatrix::max_rank() const {
  index_t k = 0;
  for (const auto& f : offdiag) k = std::max(k, f.rank());
  return k;
}

StorageReport HodlrMatrix::storage() const {
  StorageReport r;
  for (const auto& f : offdiag) r.stored_scalars += f.stored_scalars();
  for (const auto& d : leaf_diag) r.stored_scalars += d.size();
  r.max_rank = max_rank();
  return r;
}

HodlrMatrix compress_to_hodlr(const BlockSource& A, const ClusterTree& tree, double tol) {
  if (A.n_rows != A.n_cols) throw DimensionError("compress_to_hodlr: matrix is not square");
  if (A.n_rows != tree.size()) throw DimensionError("compress_to_hodlr: tree size mismatch");
  HodlrMatrix H;
  H.tree = tree;
  H.tol = tol;
  H.offdiag.resize(static_cast<std::size_t>(tree.node_count() + 1));
  H.leaf_diag.resize(static_cast<std::size_t>(tree.node_count() + 1));
  for (index_t t = 2; t <= tree.node_count(); ++t) {
    const auto& nd = tree.node(t);
    const auto& sb = tree.node(tree.sibling(t));
    const RMatrix B = A.range_block(nd.begin, nd.size(), sb.begin, sb.size());
    Svd s = truncated_svd(B, tol);
    RMatrix US = s.U;
    for (index_t i = 0; i < US.rows(); ++i)
      for (index_t j = 0; j < US.cols(); ++j) US(i, j) *= s.S[static_cast<std::size_t>(j)];
    H.offdiag[static_cast<std::size_t>(t)] = {std::move(US), std::move(s.V)};
  }
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    H.leaf_diag[static_cast<std::size_t>(t)] = A.range_block(nd.begin, nd.size(), nd.begin, nd.size());
  }
  return H;
}

HodlrMatrix compress_to_hodlr(const RMatrix& A, const ClusterTree& tree, double tol) {
  if (A.rows() != A.cols()) throw DimensionError("compress_to_hodlr: matrix is not square");
  return compress_to_hodlr(BlockSource::dense_ref(A), tree, tol);
}

std::vector<double> hodlr_matvec(const HodlrMatrix& H, std::span<const double> x) { return H.apply(x); }

// ---------------------------------------------------------------------------
// Recursive Woodbury inverse

HodlrInverseWoodbury::HodlrInverseWoodbury(const HodlrMatrix& H, bool recompress) : tree_(H.tree) {
  const index_t count = tree_.node_count();
  nodes_.resize(static_cast<std::size_t>(count + 1));
  leaf_lu_.resize(static_cast<std::size_t>(count + 1));
  for (index_t t : tree_.leaves())
    leaf_lu_[static_cast<std::size_t>(t)] =
        factor_or_throw(H.leaf_diag[static_cast<std::size_t>(t)], "singular leaf block " + std::to_string(t));
  for (int l = tree_.depth() - 1; l >= 0; --l) {
    for (index_t t : tree_.level_nodes(l)) {
      const index_t a = tree_.left(t), b = tree_.right(t);
      const RLowRank& fa = H.offdiag[static_cast<std::size_t>(a)];
      const RLowRank& fb = H.offdiag[static_cast<std::size_t>(b)];
      Node& nd = nodes_[static_cast<std::size_t>(t)];
      nd.Y = block_diag(apply_node(a, fa.U), apply_node(b, fb.U));
      nd.Vt = stacked_right(fa, fb);
      RMatrix S = matmul_adj_left(nd.Vt, nd.Y);
      for (index_t i = 0; i < S.rows(); ++i) S(i, i) += 1.0;
      nd.S = factor_or_throw(S, "singular Woodbury core at node " + std::to_string(t));
      if (recompress && S.rows() > 0) {
        const RMatrix K = nd.S.solve(nd.Vt.transpose()).transpose();
        RLowRank c = recompress_product(nd.Y, K, H.tol);
        nd.L = std::move(c.U);
        nd.R = std::move(c.V);
        nd.recompressed = true;
      }
    }
  }
}

RMatrix HodlrInverseWoodbury::apply_node(index_t t, const RMatrix& B) const {
  if (tree_.is_leaf(t)) return leaf_lu_[static_cast<std::size_t>(t)].solve(B);
  const index_t a = tree_.left(t), b = tree_.right(t);
  const index_t na = tree_.node(a).size(), nb = tree_.node(b).size();
  RMatrix Z(B.rows(), B.cols());
  Z.set_block(0, 0, apply_node(a, rows_of(B, 0, na)));
  Z.set_block(na, 0, apply_node(b, rows_of(B, na, nb)));
  const Node& nd = nodes_[static_cast<std::size_t>(t)];
  if (nd.recompressed) {
    if (nd.L.cols() > 0) Z -= matmul(nd.L, matmul_adj_left(nd.R, Z));
  } else if (nd.Y.cols() > 0) {
    const RMatrix T = nd.S.solve(matmul_adj_left(nd.Vt, Z));
    Z -= matmul(nd.Y, T);
  }
  return Z;
}

RMatrix HodlrInverseWoodbury::apply(const RMatrix& B) const {
  if (B.rows() != size()) throw DimensionError("HODLR inverse apply: length mismatch");
  return apply_node(1, B);
}

std::vector<double> HodlrInverseWoodbury::apply(std::span<const double> b) const {
  RMatrix B(static_cast<index_t>(b.size()), 1);
  std::copy(b.begin(), b.end(), B.data());
  const RMatrix X = apply(B);
  return {X.data(), X.data() + X.size()};
}

StorageReport HodlrInverseWoodbury::storage() const {
  StorageReport r;
  for (index_t t = 1; t <= tree_.node_count(); ++t) {
    if (tree_.is_leaf(t)) {
      r.stored_scalars += leaf_lu_[static_cast<std::size_t>(t)].stored_scalars();
      continue;
    }
    const Node& nd = nodes_[static_cast<std::size_t>(t)];
    if (nd.recompressed) {
      r.stored_scalars += nd.L.size() + nd.R.size();
      r.max_rank = std::max(r.max_rank, nd.L.cols());
    } else {
      r.stored_scalars += nd.Y.size() + nd.Vt.size() + nd.S.stored_scalars();
      r.max_rank = std::max(r.max_rank, nd.Y.cols());
    }
  }
  return r;
}

HodlrInverseWoodbury invert_woodbury(const HodlrMatrix& H, bool recompress) {
  return HodlrInverseWoodbury(H, recompress);
}

// ---------------------------------------------------------------------------
// Multiplicative inverse

HodlrInverseMultiplicative::HodlrInverseMultiplicative(const HodlrMatrix& H) : tree_(H.tree) {
  const index_t count = tree_.node_count();
  const int depth = tree_.depth();
  leaf_lu_.resize(static_cast<std::size_t>(count + 1));
  factors_.resize(static_cast<std::size_t>(depth + 1));

  std::vector<RMatrix> U(static_cast<std::size_t>(count + 1));
  original_ranks_.assign(static_cast<std::size_t>(count + 1), 0);
  for (index_t t = 2; t <= count; ++t) {
    U[static_cast<std::size_t>(t)] = H.offdiag[static_cast<std::size_t>(t)].U;
    original_ranks_[static_cast<std::size_t>(t)] = H.offdiag[static_cast<std::size_t>(t)].rank();
  }

  auto check_ranks = [&](int level) {
    index_t k = 0;
    for (index_t t = 2; t <= count; ++t) {
      if (tree_.node(t).level > level) continue;
      const index_t r = U[static_cast<std::size_t>(t)].cols();
      if (r != original_ranks_[static_cast<std::size_t>(t)])
        throw Error("multiplicative inverse: rank of block " + std::to_string(t) + " changed");
      k = std::max(k, r);
    }
    rank_history_.push_back(k);
  };

  // B_L: dense leaf inverses, applied to the left factors of every block.
  Factor& last = factors_[static_cast<std::size_t>(depth)];
  last.level = depth;
  for (index_t t : tree_.leaves()) {
    leaf_lu_[static_cast<std::size_t>(t)] =
        factor_or_throw(H.leaf_diag[static_cast<std::size_t>(t)], "singular leaf block " + std::to_string(t));
    last.blocks.push_back({t, RLowRank::zero(tree_.node(t).size(), tree_.node(t).size())});
  }
  for (index_t s = 2; s <= count; ++s) {
    RMatrix& Us = U[static_cast<std::size_t>(s)];
    if (Us.cols() == 0) continue;
    const index_t base = tree_.node(s).begin;
    for (index_t t : tree_.leaves()) {
      const auto& nd = tree_.node(t);
      if (nd.begin < tree_.node(s).begin || nd.end > tree_.node(s).end) continue;
      Us.set_block(nd.begin - base, 0,
                   leaf_lu_[static_cast<std::size_t>(t)].solve(rows_of(Us, nd.begin - base, nd.size())));
    }
  }
  check_ranks(depth);

  for (int l = depth - 1; l >= 0; --l) {
    Factor& f = factors_[static_cast<std::size_t>(l)];
    f.level = l;
    for (index_t t : tree_.level_nodes(l)) {
      const index_t a = tree_.left(t), b = tree_.right(t);
      const RLowRank& fa = H.offdiag[static_cast<std::size_t>(a)];
      const RLowRank& fb = H.offdiag[static_cast<std::size_t>(b)];
      const RMatrix W = block_diag(U[static_cast<std::size_t>(a)], U[static_cast<std::size_t>(b)]);
      const RMatrix Vt = stacked_right(fa, fb);
      Block blk;
      blk.node = t;
      if (W.cols() == 0) {
        blk.update = RLowRank::zero(W.rows(), W.rows());
      } else {
        RMatrix C = matmul_adj_left(Vt, W);
        for (index_t i = 0; i < C.rows(); ++i) C(i, i) += 1.0;
        const DenseLU<double> lu =
            factor_or_throw(C, "singular identity-plus-low-rank core at node " + std::to_string(t));
        RMatrix P = W;
        P *= -1.0;
        blk.update = {std::move(P), lu.solve(Vt.transpose()).transpose()};
      }
      f.blocks.push_back(std::move(blk));
    }
    // Left-multiply every remaining off-diagonal factor by B_l.
    for (const Block& blk : f.blocks) {
      if (blk.update.rank() == 0) continue;
      const auto& nd = tree_.node(blk.node);
      for (index_t s = 2; s <= count; ++s) {
        const auto& ns = tree_.node(s);
        if (ns.level > l || ns.begin > nd.begin || ns.end < nd.end) continue;
        RMatrix& Us = U[static_cast<std::size_t>(s)];
        if (Us.cols() == 0) continue;
        const RMatrix Ub = rows_of(Us, nd.begin - ns.begin, nd.size());
        RMatrix upd = Ub;
        upd += matmul(blk.update.U, matmul_adj_left(blk.update.V, Ub));
        Us.set_block(nd.begin - ns.begin, 0, upd);
      }
    }
    check_ranks(l);
  }
}

std::vector<double> HodlrInverseMultiplicative::apply(std::span<const double> b) const {
  if (static_cast<index_t>(b.size()) != size()) throw DimensionError("HODLR inverse apply: length mismatch");
  std::vector<double> x(b.begin(), b.end());
  for (index_t t : tree_.leaves()) {
    const auto& nd = tree_.node(t);
    leaf_lu_[static_cast<std::size_t>(t)].solve_inplace(
        std::span<double>(x).subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size())));
  }
  for (int l = tree_.depth() - 1; l >= 0; --l) {
    for (const Block& blk : factors_[static_cast<std::size_t>(l)].blocks) {
      const auto& nd = tree_.node(blk.node);
      auto seg = std::span<double>(x).subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size()));
      const std::vector<double> copy(seg.begin(), seg.end());
      blk.update.apply_add(copy, seg);
    }
  }
  return x;
}

StorageReport HodlrInverseMultiplicative::storage() const {
  StorageReport r;
  for (const auto& lu : leaf_lu_) r.stored_scalars += lu.stored_scalars();
  for (const auto& f : factors_)
    for (const auto& b : f.blocks) {
      r.stored_scalars += b.update.stored_scalars();
      r.max_rank = std::max(r.max_rank, b.update.rank());
    }
  return r;
}

HodlrInverseMultiplicative invert_multiplicative(const HodlrMatrix& H) {
  return HodlrInverseMultiplicative(H);
}

StorageReport storage_report(const HodlrMatrix& H) { return H.storage(); }
StorageReport storage_report(const HodlrInverseWoodbury& inv) { return inv.storage(); }
StorageReport storage_report(const HodlrInverseMultiplicative& inv) { return inv.storage(); }

} // namespace fds
