#include "fds/hbs.hpp"

#include <algorithm>
#include <string>

namespace fds {

namespace {

DenseLU<double> factor_or_throw(const RMatrix& M, const std::string& what) {
  try {
    return DenseLU<double>(M);
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(what + ": " + e.what());
  }
}

RMatrix block_diag(const std::vector<const RMatrix*>& blocks) {
  index_t r = 0, c = 0;
  for (const RMatrix* b : blocks) {
    r += b->rows();
    c += b->cols();
  }
  RMatrix M(r, c);
  r = c = 0;
  for (const RMatrix* b : blocks) {
    M.set_block(r, c, *b);
    r += b->rows();
    c += b->cols();
  }
  return M;
}

RMatrix sibling_block(const RMatrix& Daa, const RMatrix& Aab, const RMatrix& Aba, const RMatrix& Dbb) {
  const index_t ka = Daa.rows(), kb = Dbb.rows();
  RMatrix M(ka + kb, ka + kb);
  M.set_block(0, 0, Daa);
  if (ka > 0 && kb > 0) {
    M.set_block(0, ka, Aab);
    M.set_block(ka, 0, Aba);
  }
  M.set_block(ka, ka, Dbb);
  return M;
}

// y += M x and y += M^T x on raw slices.
void gemv_add(const RMatrix& M, std::span<const double> x, std::span<double> y) {
  for (index_t i = 0; i < M.rows(); ++i) {
    const double* r = M.row_ptr(i);
    double s = 0;
    for (index_t j = 0; j < M.cols(); ++j) s += r[j] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] += s;
  }
}

void gemv_adj_add(const RMatrix& M, std::span<const double> x, std::span<double> y) {
  for (index_t i = 0; i < M.rows(); ++i) {
    const double* r = M.row_ptr(i);
    const double xi = x[static_cast<std::size_t>(i)];
    for (index_t j = 0; j < M.cols(); ++j) y[static_cast<std::size_t>(j)] += r[j] * xi;
  }
}

} // namespace

// ---------------------------------------------------------------------------
// Woodbury variant

WoodburyVariant woodbury_variant(const RMatrix& D, const RMatrix& U, const RMatrix& V) {
  if (D.rows() != D.cols()) throw DimensionError("woodbury_variant: D is not square");
  if (U.rows() != D.rows() || V.rows() != D.rows() || U.cols() != V.cols())
    throw DimensionError("woodbury_variant: U and V must be N x K");
  const DenseLU<double> Dlu = factor_or_throw(D, "woodbury_variant: D is singular");
  WoodburyVariant w;
  const RMatrix DinvU = Dlu.solve(U);
  const RMatrix VtDinv = Dlu.solve_right(V.transpose());
  if (U.cols() == 0) {
    w.Dhat = RMatrix(0, 0);
    w.E = RMatrix(D.rows(), 0);
    w.F = RMatrix(D.rows(), 0);
    w.G = Dlu.inverse();
    return w;
  }
  const DenseLU<double> Slu =
      factor_or_throw(matmul_adj_left(V, DinvU), "woodbury_variant: V^* D^{-1} U is singular");
  w.Dhat = Slu.inverse();
  w.E = matmul(DinvU, w.Dhat);
  const RMatrix Ft = matmul(w.Dhat, VtDinv);
  w.F = Ft.transpose();
  w.G = Dlu.inverse();
  w.G -= matmul(w.E, VtDinv);
  return w;
}

RMatrix woodbury_variant_inverse(const WoodburyVariant& w, const RMatrix& Atilde) {
  RMatrix C = Atilde;
  C += w.Dhat;
  if (C.rows() == 0) return w.G;
  const DenseLU<double> lu = factor_or_throw(C, "woodbury_variant: Atilde + Dhat is singular");
  RMatrix X = matmul(w.E, lu.solve(w.F.transpose()));
  X += w.G;
  return X;
}

RMatrix BlockSeparableMatrix::dense_U() const {
  std::vector<const RMatrix*> b;
  for (const auto& m : U) b.push_back(&m);
  return block_diag(b);
}

RMatrix BlockSeparableMatrix::dense_V() const {
  std::vector<const RMatrix*> b;
  for (const auto& m : V) b.push_back(&m);
  return block_diag(b);
}

RMatrix BlockSeparableMatrix::dense_D() const {
  std::vector<const RMatrix*> b;
  for (const auto& m : D) b.push_back(&m);
  return block_diag(b);
}

RMatrix BlockSeparableMatrix::dense() const {
  RMatrix A = matmul_adj_right(matmul(dense_U(), Atilde), dense_V());
  A += dense_D();
  return A;
}

// ---------------------------------------------------------------------------
// Compression

FarFieldSampler brute_force_sampler(const BlockSource& A) {
  return [A](const ClusterTree& tree, index_t node, std::span<const index_t> rows) {
    const auto& nd = tree.node(node);
    std::vector<index_t> comp = iota_indices(0, nd.begin);
    for (index_t j = nd.end; j < tree.size(); ++j) comp.push_back(j);
    const RMatrix out = A(rows, comp);
    const RMatrix in = A(comp, rows);
    return hstack(out, in.transpose());
  };
}

index_t HbsMatrix::max_rank() const {
  index_t k = 0;
  for (index_t t = 2; t <= tree.node_count(); ++t) k = std::max(k, rank(t));
  return k;
}

std::vector<index_t> HbsMatrix::candidate_rows(index_t t) const {
  if (tree.is_leaf(t)) return iota_indices(tree.node(t).begin, tree.node(t).end);
  std::vector<index_t> r = skeleton[static_cast<std::size_t>(tree.left(t))];
  const auto& b = skeleton[static_cast<std::size_t>(tree.right(t))];
  r.insert(r.end(), b.begin(), b.end());
  return r;
}

HbsMatrix compress_to_hbs(const BlockSource& A, const ClusterTree& tree, double tol,
                          const FarFieldSampler& sampler) {
  if (A.n_rows != A.n_cols) throw DimensionError("compress_to_hbs: matrix is not square");
  if (A.n_rows != tree.size()) throw DimensionError("compress_to_hbs: tree size mismatch");
  const FarFieldSampler sample = sampler ? sampler : brute_force_sampler(A);
  HbsMatrix H;
  H.tree = tree;
  H.tol = tol;
  const auto count = static_cast<std::size_t>(tree.node_count() + 1);
  H.U.resize(count);
  H.V.resize(count);
  H.Atilde.resize(count);
  H.leaf_diag.resize(count);
  H.skeleton.resize(count);
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    H.leaf_diag[static_cast<std::size_t>(t)] = A.range_block(nd.begin, nd.size(), nd.begin, nd.size());
  }
  for (int l = tree.depth(); l >= 1; --l) {
    for (index_t t : tree.level_nodes(l)) {
      const std::vector<index_t> rows = H.candidate_rows(t);
      const RMatrix M = sample(tree, t, rows);
      if (M.rows() != static_cast<index_t>(rows.size()))
        throw DimensionError("compress_to_hbs: sampler returned the wrong row count at node " + std::to_string(t));
      std::vector<index_t>& skel = H.skeleton[static_cast<std::size_t>(t)];
      RMatrix X;
      if (M.cols() == 0 || M.norm_max() == 0.0) {
        X = RMatrix(static_cast<index_t>(rows.size()), 0);
      } else {
        const auto id = interpolative_decomposition(M.transpose(), tol);
        X = id.interpolation_matrix().transpose();
        for (index_t j : id.skeleton) skel.push_back(rows[static_cast<std::size_t>(j)]);
      }
      H.U[static_cast<std::size_t>(t)] = X;
      H.V[static_cast<std::size_t>(t)] = std::move(X);
    }
    for (index_t t : tree.level_nodes(l))
      H.Atilde[static_cast<std::size_t>(t)] =
          A(H.skeleton[static_cast<std::size_t>(t)], H.skeleton[static_cast<std::size_t>(tree.sibling(t))]);
  }
  return H;
}

HbsMatrix compress_to_hbs(const RMatrix& A, const ClusterTree& tree, double tol) {
  if (A.rows() != A.cols()) throw DimensionError("compress_to_hbs: matrix is not square");
  return compress_to_hbs(BlockSource::dense_ref(A), tree, tol);
}

// ---------------------------------------------------------------------------
// Matvec

namespace {

// Offsets of each leaf's skeleton coordinates in the stacked leaf vector.
std::vector<index_t> leaf_offsets(const HbsMatrix& H) {
  std::vector<index_t> off(static_cast<std::size_t>(H.tree.node_count() + 1), 0);
  index_t o = 0;
  for (index_t t : H.tree.leaves()) {
    off[static_cast<std::size_t>(t)] = o;
    o += H.rank(t);
  }
  off[0] = o;
  return off;
}

} // namespace

std::vector<double> HbsMatrix::apply_leaf_coupling(std::span<const double> xhat_leaf) const {
  const index_t count = tree.node_count();
  const auto off = leaf_offsets(*this);
  if (static_cast<index_t>(xhat_leaf.size()) != off[0])
    throw DimensionError("hbs coupling: length mismatch");
  std::vector<std::vector<double>> xh(static_cast<std::size_t>(count + 1)), yh(static_cast<std::size_t>(count + 1));
  for (index_t t : tree.leaves()) {
    const auto o = static_cast<std::size_t>(off[static_cast<std::size_t>(t)]);
    xh[static_cast<std::size_t>(t)].assign(xhat_leaf.begin() + static_cast<std::ptrdiff_t>(o),
                                           xhat_leaf.begin() + static_cast<std::ptrdiff_t>(o) + rank(t));
  }
  for (int l = tree.depth() - 1; l >= 1; --l)
    for (index_t t : tree.level_nodes(l)) {
      std::vector<double> s = xh[static_cast<std::size_t>(tree.left(t))];
      const auto& b = xh[static_cast<std::size_t>(tree.right(t))];
      s.insert(s.end(), b.begin(), b.end());
      std::vector<double> r(static_cast<std::size_t>(rank(t)), 0.0);
      gemv_adj_add(V[static_cast<std::size_t>(t)], s, r);
      xh[static_cast<std::size_t>(t)] = std::move(r);
    }
  for (index_t t = 2; t <= count; ++t) {
    yh[static_cast<std::size_t>(t)].assign(static_cast<std::size_t>(rank(t)), 0.0);
    gemv_add(Atilde[static_cast<std::size_t>(t)], xh[static_cast<std::size_t>(tree.sibling(t))],
             yh[static_cast<std::size_t>(t)]);
  }
  for (int l = 1; l < tree.depth(); ++l)
    for (index_t t : tree.level_nodes(l)) {
      const index_t a = tree.left(t), b = tree.right(t);
      std::vector<double> s(static_cast<std::size_t>(rank(a) + rank(b)), 0.0);
      gemv_add(U[static_cast<std::size_t>(t)], yh[static_cast<std::size_t>(t)], s);
      for (index_t i = 0; i < rank(a); ++i) yh[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(i)];
      for (index_t i = 0; i < rank(b); ++i)
        yh[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(rank(a) + i)];
    }
  std::vector<double> out(static_cast<std::size_t>(off[0]), 0.0);
  for (index_t t : tree.leaves())
    std::copy(yh[static_cast<std::size_t>(t)].begin(), yh[static_cast<std::size_t>(t)].end(),
              out.begin() + off[static_cast<std::size_t>(t)]);
  return out;
}

std::vector<double> HbsMatrix::apply(std::span<const double> x) const {
  if (static_cast<index_t>(x.size()) != size()) throw DimensionError("hbs_matvec: length mismatch");
  std::vector<double> y(x.size(), 0.0);
  if (tree.depth() == 0) {
    gemv_add(leaf_diag[1], x, y);
    return y;
  }
  const auto off = leaf_offsets(*this);
  std::vector<double> xhat(static_cast<std::size_t>(off[0]), 0.0);
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    const auto xs = x.subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size()));
    gemv_adj_add(V[static_cast<std::size_t>(t)], xs,
                 std::span<double>(xhat).subspan(static_cast<std::size_t>(off[static_cast<std::size_t>(t)]),
                                                 static_cast<std::size_t>(rank(t))));
  }
  const auto yhat = apply_leaf_coupling(xhat);
  for (index_t t : tree.leaves()) {
    const auto& nd = tree.node(t);
    auto ys = std::span<double>(y).subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size()));
    gemv_add(U[static_cast<std::size_t>(t)],
             std::span<const double>(yhat).subspan(static_cast<std::size_t>(off[static_cast<std::size_t>(t)]),
                                                   static_cast<std::size_t>(rank(t))),
             ys);
    gemv_add(leaf_diag[static_cast<std::size_t>(t)],
             x.subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size())), ys);
  }
  return y;
}

RMatrix HbsMatrix::dense() const {
  const index_t n = size();
  RMatrix A(n, n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (index_t j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const auto c = apply(e);
    for (index_t i = 0; i < n; ++i) A(i, j) = c[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return A;
}

RMatrix HbsMatrix::long_basis(index_t t) const {
  if (tree.is_leaf(t)) return U[static_cast<std::size_t>(t)];
  const RMatrix a = long_basis(tree.left(t)), b = long_basis(tree.right(t));
  return matmul(block_diag({&a, &b}), U[static_cast<std::size_t>(t)]);
}

std::vector<double> hbs_matvec(const HbsMatrix& H, std::span<const double> x) { return H.apply(x); }

BlockSeparableMatrix hbs_to_block_separable(const HbsMatrix& H) {
  BlockSeparableMatrix B;
  const auto leaves = H.tree.leaves();
  for (index_t t : leaves) {
    B.partition.emplace_back(H.tree.node(t).begin, H.tree.node(t).end);
    B.U.push_back(H.U[static_cast<std::size_t>(t)]);
    B.V.push_back(H.V[static_cast<std::size_t>(t)]);
    B.D.push_back(H.leaf_diag[static_cast<std::size_t>(t)]);
  }
  const index_t K = leaf_offsets(H)[0];
  B.Atilde = RMatrix(K, K);
  std::vector<double> e(static_cast<std::size_t>(K), 0.0);
  for (index_t j = 0; j < K; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const auto c = H.apply_leaf_coupling(e);
    for (index_t i = 0; i < K; ++i) B.Atilde(i, j) = c[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return B;
}

HbsStorage hbs_storage(const HbsMatrix& H) {
  HbsStorage s;
  s.per_level_ranks.assign(static_cast<std::size_t>(H.tree.depth() + 1), 0);
  for (index_t t = 2; t <= H.tree.node_count(); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    s.stored_scalars += H.U[ts].size() + H.V[ts].size() + H.Atilde[ts].size();
    auto& r = s.per_level_ranks[static_cast<std::size_t>(H.tree.node(t).level)];
    r = std::max(r, H.rank(t));
  }
  for (const auto& d : H.leaf_diag) s.stored_scalars += d.size();
  return s;
}

// ---------------------------------------------------------------------------
// Inversion

HbsInverse::HbsInverse(const HbsMatrix& H) : tree_(H.tree) {
  const index_t count = tree_.node_count();
  nodes_.resize(static_cast<std::size_t>(count + 1));
  if (tree_.depth() == 0) {
    G1_ = factor_or_throw(H.leaf_diag[1], "singular diagonal block at node 1 (level 0)").inverse();
    return;
  }
  for (int l = tree_.depth(); l >= 1; --l) {
    for (index_t t : tree_.level_nodes(l)) {
      const auto ts = static_cast<std::size_t>(t);
      const std::string where = " at node " + std::to_string(t) + " (level " + std::to_string(l) + ")";
      RMatrix Dt;
      if (tree_.is_leaf(t)) {
        Dt = H.leaf_diag[ts];
      } else {
        const index_t a = tree_.left(t), b = tree_.right(t);
        Dt = sibling_block(nodes_[static_cast<std::size_t>(a)].Dhat, H.Atilde[static_cast<std::size_t>(a)],
                           H.Atilde[static_cast<std::size_t>(b)], nodes_[static_cast<std::size_t>(b)].Dhat);
      }
      Node& nd = nodes_[ts];
      const DenseLU<double> Dlu = factor_or_throw(Dt, "singular Dtilde" + where);
      const RMatrix Dinv = Dlu.inverse();
      nd.dtilde_condition = Dlu.condition_1norm(Dt);
      const RMatrix& Ut = H.U[ts];
      const RMatrix& Vt = H.V[ts];
      if (Ut.cols() == 0) {
        nd.Dhat = RMatrix(0, 0);
        nd.E = RMatrix(Dt.rows(), 0);
        nd.F = RMatrix(Dt.rows(), 0);
        nd.G = Dinv;
        continue;
      }
      const RMatrix DinvU = matmul(Dinv, Ut);
      const RMatrix VtDinv = matmul_adj_left(Vt, Dinv);
      nd.Dhat = factor_or_throw(matmul(VtDinv, Ut), "singular V^* Dtilde^{-1} U" + where).inverse();
      nd.E = matmul(DinvU, nd.Dhat);
      nd.F = matmul(nd.Dhat, VtDinv).transpose();
      nd.G = Dinv;
      nd.G -= matmul(nd.E, VtDinv);
    }
  }
  const RMatrix root = sibling_block(nodes_[2].Dhat, H.Atilde[2], H.Atilde[3], nodes_[3].Dhat);
  G1_ = root.rows() == 0 ? RMatrix(0, 0)
                         : factor_or_throw(root, "singular root block at node 1 (level 0)").inverse();
}

std::vector<double> HbsInverse::apply(std::span<const double> u) const {
  if (static_cast<index_t>(u.size()) != size()) throw DimensionError("hbs_apply_inverse: length mismatch");
  if (tree_.depth() == 0) return matvec(G1_, u);
  const index_t count = tree_.node_count();
  std::vector<std::vector<double>> uh(static_cast<std::size_t>(count + 1)), qh(static_cast<std::size_t>(count + 1));
  auto stacked = [&](const std::vector<std::vector<double>>& v, index_t t) {
    std::vector<double> s = v[static_cast<std::size_t>(tree_.left(t))];
    const auto& b = v[static_cast<std::size_t>(tree_.right(t))];
    s.insert(s.end(), b.begin(), b.end());
    return s;
  };
  auto leaf_slice = [&](index_t t) {
    const auto& nd = tree_.node(t);
    return u.subspan(static_cast<std::size_t>(nd.begin), static_cast<std::size_t>(nd.size()));
  };
  for (index_t t : tree_.leaves()) {
    const Node& nd = nodes_[static_cast<std::size_t>(t)];
    uh[static_cast<std::size_t>(t)].assign(static_cast<std::size_t>(nd.F.cols()), 0.0);
    gemv_adj_add(nd.F, leaf_slice(t), uh[static_cast<std::size_t>(t)]);
  }
  for (int l = tree_.depth() - 1; l >= 1; --l)
    for (index_t t : tree_.level_nodes(l)) {
      const Node& nd = nodes_[static_cast<std::size_t>(t)];
      const auto s = stacked(uh, t);
      uh[static_cast<std::size_t>(t)].assign(static_cast<std::size_t>(nd.F.cols()), 0.0);
      gemv_adj_add(nd.F, s, uh[static_cast<std::size_t>(t)]);
    }
  auto split = [&](index_t t, const std::vector<double>& s) {
    const index_t ka = nodes_[static_cast<std::size_t>(tree_.left(t))].F.cols();
    qh[static_cast<std::size_t>(tree_.left(t))].assign(s.begin(), s.begin() + ka);
    qh[static_cast<std::size_t>(tree_.right(t))].assign(s.begin() + ka, s.end());
  };
  {
    const auto s = stacked(uh, 1);
    split(1, G1_.rows() == 0 ? std::vector<double>{} : matvec(G1_, std::span<const double>(s)));
  }
  for (int l = 1; l < tree_.depth(); ++l)
    for (index_t t : tree_.level_nodes(l)) {
      const Node& nd = nodes_[static_cast<std::size_t>(t)];
      const auto s = stacked(uh, t);
      std::vector<double> r(static_cast<std::size_t>(nd.G.rows()), 0.0);
      gemv_add(nd.E, qh[static_cast<std::size_t>(t)], r);
      gemv_add(nd.G, s, r);
      split(t, r);
    }
  std::vector<double> q(u.size(), 0.0);
  for (index_t t : tree_.leaves()) {
    const Node& nd = nodes_[static_cast<std::size_t>(t)];
    const auto& b = tree_.node(t);
    auto qs = std::span<double>(q).subspan(static_cast<std::size_t>(b.begin), static_cast<std::size_t>(b.size()));
    gemv_add(nd.E, qh[static_cast<std::size_t>(t)], qs);
    gemv_add(nd.G, leaf_slice(t), qs);
  }
  return q;
}

RMatrix HbsInverse::dense() const {
  const index_t n = size();
  RMatrix X(n, n);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (index_t j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const auto c = apply(e);
    for (index_t i = 0; i < n; ++i) X(i, j) = c[static_cast<std::size_t>(i)];
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return X;
}

index_t HbsInverse::stored_scalars() const {
  index_t s = G1_.size();
  for (const auto& nd : nodes_) s += nd.Dhat.size() + nd.E.size() + nd.F.size() + nd.G.size();
  return s;
}

HbsInverse hbs_invert(const HbsMatrix& H) { return HbsInverse(H); }

std::vector<double> hbs_apply_inverse(const HbsInverse& inv, std::span<const double> u) { return inv.apply(u); }

} // namespace fds
