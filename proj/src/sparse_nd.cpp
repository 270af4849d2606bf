#include "fds/sparse_nd.hpp"

#include <algorithm>
#include <string>

#include "fds/errors.hpp"

namespace fds {

namespace {

constexpr std::array<std::array<index_t, 3>, 6> steps{{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

struct Grid {
  int dim;
  index_t n;

  index_t index(const std::array<index_t, 3>& p) const { return p[0] + n * (p[1] + n * p[2]); }
  std::array<index_t, 3> point(index_t i) const {
    std::array<index_t, 3> p{0, 0, 0};
    p[0] = i % n;
    if (dim > 1) p[1] = (i / n) % n;
    if (dim > 2) p[2] = i / (n * n);
    return p;
  }
  index_t size() const { return dim == 2 ? n * n : n * n * n; }
};

template <typename F> void for_each_point(const GridBox& b, F&& f) {
  for (index_t z = b.lo[2]; z < b.hi[2]; ++z)
    for (index_t y = b.lo[1]; y < b.hi[1]; ++y)
      for (index_t x = b.lo[0]; x < b.hi[0]; ++x) f(std::array<index_t, 3>{x, y, z});
}

void partition(NdTree& t, const Grid& g, int node, int depth, index_t leaf_cells) {
  const GridBox box = t.nodes[static_cast<std::size_t>(node)].box;
  index_t longest = 0;
  for (int a = 0; a < g.dim; ++a) longest = std::max(longest, box.side(a));
  if (longest <= leaf_cells) {
    auto& nd = t.nodes[static_cast<std::size_t>(node)];
    for_each_point(box, [&](const std::array<index_t, 3>& p) { nd.own.push_back(g.index(p)); });
    return;
  }
  int axis = -1;
  for (int k = 0; k < g.dim && axis < 0; ++k) {
    const int a = (depth + k) % g.dim;
    if (box.side(a) == longest) axis = a;
  }
  const auto ax = static_cast<std::size_t>(axis);
  const index_t cut = box.lo[ax] + (box.side(axis) - 1) / 2;
  GridBox sep = box, lb = box, rb = box;
  sep.lo[ax] = cut;
  sep.hi[ax] = cut + 1;
  lb.hi[ax] = cut;
  rb.lo[ax] = cut + 1;
  {
    auto& nd = t.nodes[static_cast<std::size_t>(node)];
    nd.axis = axis;
    for_each_point(sep, [&](const std::array<index_t, 3>& p) { nd.own.push_back(g.index(p)); });
  }
  const int l = static_cast<int>(t.nodes.size());
  t.nodes.push_back(NdNode{lb, {}, -1, -1, node, -1});
  t.nodes.push_back(NdNode{rb, {}, -1, -1, node, -1});
  t.nodes[static_cast<std::size_t>(node)].left = l;
  t.nodes[static_cast<std::size_t>(node)].right = l + 1;
  partition(t, g, l, depth + 1, leaf_cells);
  partition(t, g, l + 1, depth + 1, leaf_cells);
}

void check_dim(int dim, index_t n) {
  if (dim != 2 && dim != 3) throw InvalidArgument("sparse_nd: dim must be 2 or 3");
  if (n < 3) throw InvalidArgument("sparse_nd: n must be at least 3");
}

} // namespace

std::vector<double> CsrMatrix::apply(std::span<const double> x) const {
  if (static_cast<index_t>(x.size()) != n) throw DimensionError("CsrMatrix::apply: size mismatch");
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (index_t i = 0; i < n; ++i) {
    double s = 0;
    for (index_t k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i + 1)]; ++k)
      s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

RMatrix CsrMatrix::dense() const {
  RMatrix D(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i + 1)]; ++k)
      D(i, col[static_cast<std::size_t>(k)]) += val[static_cast<std::size_t>(k)];
  return D;
}

double CsrMatrix::entry(index_t i, index_t j) const {
  for (index_t k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i + 1)]; ++k)
    if (col[static_cast<std::size_t>(k)] == j) return val[static_cast<std::size_t>(k)];
  return 0.0;
}

index_t StencilMatrix::index(std::array<index_t, 3> p) const { return Grid{dim, n}.index(p); }
std::array<index_t, 3> StencilMatrix::point(index_t i) const { return Grid{dim, n}.point(i); }

bool GridBox::contains(std::array<index_t, 3> p) const {
  for (std::size_t a = 0; a < 3; ++a)
    if (p[a] < lo[a] || p[a] >= hi[a]) return false;
  return true;
}

StencilMatrix assemble_stencil(int dim, index_t n, std::span<const double> m_field) {
  check_dim(dim, n);
  const Grid g{dim, n};
  const index_t N = g.size();
  if (!m_field.empty() && static_cast<index_t>(m_field.size()) != N)
    throw DimensionError("assemble_stencil: m_field needs one sample per grid point");
  StencilMatrix S;
  S.dim = dim;
  S.n = n;
  S.h = 1.0 / static_cast<double>(n + 1);
  S.m.assign(static_cast<std::size_t>(N), 0.0);
  if (!m_field.empty()) std::copy(m_field.begin(), m_field.end(), S.m.begin());
  const double h2 = 1.0 / (S.h * S.h);
  auto& A = S.A;
  A.n = N;
  A.row_ptr.reserve(static_cast<std::size_t>(N + 1));
  A.row_ptr.push_back(0);
  for (index_t i = 0; i < N; ++i) {
    const auto p = g.point(i);
    std::vector<std::pair<index_t, double>> row{{i, 2.0 * dim * h2 + S.m[static_cast<std::size_t>(i)]}};
    for (int s = 0; s < 2 * dim; ++s) {
      auto q = p;
      bool inside = true;
      for (std::size_t a = 0; a < 3; ++a) {
        q[a] += steps[static_cast<std::size_t>(s)][a];
        if (q[a] < 0 || q[a] >= (static_cast<int>(a) < dim ? n : 1)) inside = false;
      }
      if (inside) row.emplace_back(g.index(q), -h2);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      A.col.push_back(j);
      A.val.push_back(v);
    }
    A.row_ptr.push_back(static_cast<index_t>(A.col.size()));
  }
  return S;
}

StencilMatrix assemble_stencil(int dim, index_t n, double m_constant) {
  check_dim(dim, n);
  const index_t N = dim == 2 ? n * n : n * n * n;
  return assemble_stencil(dim, n, std::vector<double>(static_cast<std::size_t>(N), m_constant));
}

std::vector<int> NdTree::postorder() const {
  std::vector<int> out, stack{0};
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    out.push_back(t);
    const auto& nd = nodes[static_cast<std::size_t>(t)];
    if (!nd.is_leaf()) {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<index_t> NdTree::ordering() const {
  std::vector<index_t> p;
  for (int t : postorder()) {
    const auto& o = nodes[static_cast<std::size_t>(t)].own;
    p.insert(p.end(), o.begin(), o.end());
  }
  return p;
}

NdTree nd_partition_box(int dim, index_t n, const GridBox& box, index_t leaf_cells) {
  check_dim(dim, n);
  if (leaf_cells < 3 || leaf_cells > n) throw InvalidArgument("nd_partition: need n >= leaf_cells >= 3");
  for (int a = 0; a < 3; ++a) {
    const index_t top = a < dim ? n : 1;
    if (box.lo[static_cast<std::size_t>(a)] < 0 || box.hi[static_cast<std::size_t>(a)] > top || box.side(a) < 1)
      throw InvalidArgument("nd_partition_box: box outside the grid");
  }
  NdTree t;
  t.dim = dim;
  t.n = n;
  t.nodes.push_back(NdNode{box, {}, -1, -1, -1, -1});
  partition(t, Grid{dim, n}, 0, 0, leaf_cells);
  return t;
}

NdTree nd_partition(int dim, index_t n, index_t leaf_cells) {
  GridBox box;
  for (int a = 0; a < dim; ++a) box.hi[static_cast<std::size_t>(a)] = n;
  return nd_partition_box(dim, n, box, leaf_cells);
}

NdFactors::NdFactors(const CsrMatrix& A, NdTree tree) : tree_(std::move(tree)), n_(A.n) {
  const Grid g{tree_.dim, tree_.n};
  if (A.n != g.size()) throw DimensionError("nd_factor: matrix size does not match the grid");
  const GridBox& root = tree_.nodes[0].box;
  fronts_.resize(tree_.nodes.size());
  std::vector<RMatrix> update(tree_.nodes.size());
  std::vector<index_t> pos(static_cast<std::size_t>(A.n), -1);
  for (int t : tree_.postorder()) {
    const auto& nd = tree_.nodes[static_cast<std::size_t>(t)];
    Front& fr = fronts_[static_cast<std::size_t>(t)];
    fr.own = nd.own;
    for_each_point(nd.box, [&](const std::array<index_t, 3>& p) {
      for (int s = 0; s < 2 * tree_.dim; ++s) {
        auto q = p;
        for (std::size_t a = 0; a < 3; ++a) q[a] += steps[static_cast<std::size_t>(s)][a];
        if (root.contains(q) && !nd.box.contains(q)) fr.boundary.push_back(g.index(q));
      }
    });
    std::sort(fr.boundary.begin(), fr.boundary.end());
    fr.boundary.erase(std::unique(fr.boundary.begin(), fr.boundary.end()), fr.boundary.end());
    const auto s = static_cast<index_t>(fr.own.size()), b = static_cast<index_t>(fr.boundary.size());
    for (index_t k = 0; k < s; ++k) pos[static_cast<std::size_t>(fr.own[static_cast<std::size_t>(k)])] = k;
    for (index_t k = 0; k < b; ++k) pos[static_cast<std::size_t>(fr.boundary[static_cast<std::size_t>(k)])] = s + k;
    RMatrix F(s + b, s + b);
    auto add_row = [&](index_t gi, index_t li, bool all_cols) {
      for (index_t k = A.row_ptr[static_cast<std::size_t>(gi)]; k < A.row_ptr[static_cast<std::size_t>(gi + 1)]; ++k) {
        const index_t lj = pos[static_cast<std::size_t>(A.col[static_cast<std::size_t>(k)])];
        if (lj < 0 || (!all_cols && lj >= s)) continue;
        F(li, lj) += A.val[static_cast<std::size_t>(k)];
      }
    };
    for (index_t k = 0; k < s; ++k) add_row(fr.own[static_cast<std::size_t>(k)], k, true);
    for (index_t k = 0; k < b; ++k) add_row(fr.boundary[static_cast<std::size_t>(k)], s + k, false);
    for (int c : {nd.left, nd.right}) {
      if (c < 0) continue;
      const auto& cb = fronts_[static_cast<std::size_t>(c)].boundary;
      const RMatrix& Uc = update[static_cast<std::size_t>(c)];
      for (std::size_t i = 0; i < cb.size(); ++i)
        for (std::size_t j = 0; j < cb.size(); ++j)
          F(pos[static_cast<std::size_t>(cb[i])], pos[static_cast<std::size_t>(cb[j])]) +=
              Uc(static_cast<index_t>(i), static_cast<index_t>(j));
      update[static_cast<std::size_t>(c)] = RMatrix();
    }
    for (index_t v : fr.own) pos[static_cast<std::size_t>(v)] = -1;
    for (index_t v : fr.boundary) pos[static_cast<std::size_t>(v)] = -1;
    try {
      fr.lu = DenseLU<double>(F.block(0, 0, s, s));
    } catch (const SingularMatrixError&) {
      throw SingularMatrixError("nd_factor: singular front at node " + std::to_string(t));
    }
    const double ds = static_cast<double>(s), db = static_cast<double>(b);
    flops_ += 2.0 / 3.0 * ds * ds * ds;
    if (b > 0) {
      fr.F1B = F.block(0, s, s, b);
      fr.FB1 = F.block(s, 0, b, s);
      const RMatrix G = fr.lu.solve(fr.F1B);
      RMatrix Ub = F.block(s, s, b, b);
      Ub -= matmul(fr.FB1, G);
      update[static_cast<std::size_t>(t)] = std::move(Ub);
      flops_ += 2.0 * ds * ds * db + 2.0 * ds * db * db;
    }
  }
}

std::vector<double> NdFactors::solve(std::span<const double> b) const {
  if (static_cast<index_t>(b.size()) != n_) throw DimensionError("nd_solve: right-hand side size mismatch");
  std::vector<double> y(b.begin(), b.end()), w(static_cast<std::size_t>(n_), 0.0), x(static_cast<std::size_t>(n_), 0.0);
  const auto order = tree_.postorder();
  for (int t : order) {
    const Front& fr = fronts_[static_cast<std::size_t>(t)];
    std::vector<double> z(fr.own.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = y[static_cast<std::size_t>(fr.own[k])];
    fr.lu.solve_inplace(z);
    for (std::size_t k = 0; k < z.size(); ++k) w[static_cast<std::size_t>(fr.own[k])] = z[k];
    if (fr.boundary.empty()) continue;
    const auto d = matvec(fr.FB1, std::span<const double>(z));
    for (std::size_t k = 0; k < d.size(); ++k) y[static_cast<std::size_t>(fr.boundary[k])] -= d[k];
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Front& fr = fronts_[static_cast<std::size_t>(*it)];
    std::vector<double> z(fr.own.size());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = w[static_cast<std::size_t>(fr.own[k])];
    if (!fr.boundary.empty()) {
      std::vector<double> xb(fr.boundary.size());
      for (std::size_t k = 0; k < xb.size(); ++k) xb[k] = x[static_cast<std::size_t>(fr.boundary[k])];
      auto c = matvec(fr.F1B, std::span<const double>(xb));
      fr.lu.solve_inplace(c);
      for (std::size_t k = 0; k < z.size(); ++k) z[k] -= c[k];
    }
    for (std::size_t k = 0; k < z.size(); ++k) x[static_cast<std::size_t>(fr.own[k])] = z[k];
  }
  return x;
}

index_t NdFactors::stored_scalars() const {
  index_t s = 0;
  for (const auto& f : fronts_) s += f.lu.stored_scalars() + f.F1B.size() + f.FB1.size();
  return s;
}

std::pair<RMatrix, RMatrix> NdFactors::dense_factors() const {
  const auto perm = tree_.ordering();
  const auto m = static_cast<index_t>(perm.size());
  std::vector<index_t> where(static_cast<std::size_t>(n_), -1);
  for (index_t k = 0; k < m; ++k) where[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])] = k;
  RMatrix L(m, m), U = RMatrix::identity(m);
  for (const auto& fr : fronts_) {
    const RMatrix F11 = fr.lu.solve(RMatrix::identity(static_cast<index_t>(fr.own.size())));
    const RMatrix S11 = DenseLU<double>(F11).inverse();
    for (std::size_t i = 0; i < fr.own.size(); ++i)
      for (std::size_t j = 0; j < fr.own.size(); ++j)
        L(where[static_cast<std::size_t>(fr.own[i])], where[static_cast<std::size_t>(fr.own[j])]) =
            S11(static_cast<index_t>(i), static_cast<index_t>(j));
    if (fr.boundary.empty()) continue;
    const RMatrix G = fr.lu.solve(fr.F1B);
    for (std::size_t i = 0; i < fr.boundary.size(); ++i)
      for (std::size_t j = 0; j < fr.own.size(); ++j) {
        const index_t bi = where[static_cast<std::size_t>(fr.boundary[i])], oj = where[static_cast<std::size_t>(fr.own[j])];
        L(bi, oj) = fr.FB1(static_cast<index_t>(i), static_cast<index_t>(j));
        U(oj, bi) = G(static_cast<index_t>(j), static_cast<index_t>(i));
      }
  }
  return {L, U};
}

NdFactors nd_factor(const CsrMatrix& A, const NdTree& tree) { return NdFactors(A, tree); }
NdFactors nd_factor(const StencilMatrix& A, const NdTree& tree) { return NdFactors(A.A, tree); }
std::vector<double> nd_solve(const NdFactors& F, std::span<const double> b) { return F.solve(b); }

SpectrumResult schur_offdiag_spectrum(int dim, index_t n, SchurOperator op, double kappa, index_t leaf_cells) {
  check_dim(dim, n);
  if ((dim == 2 && n > 256) || (dim == 3 && n > 24))
    throw InvalidArgument("schur_offdiag_spectrum: n exceeds the dense feasibility cap");
  if (op == SchurOperator::helmholtz && !(kappa > 0)) throw InvalidArgument("schur_offdiag_spectrum: kappa must be positive");
  const double m = op == SchurOperator::helmholtz ? -kappa * kappa : 0.0;
  const auto S = assemble_stencil(dim, n, m);
  const auto top = nd_partition(dim, n, std::min(leaf_cells, n));
  const auto& root = top.nodes[0];
  if (root.is_leaf()) throw InvalidArgument("schur_offdiag_spectrum: grid has no separator");
  const auto& sep = root.own;
  const std::size_t half = sep.size() / 2;
  const std::vector<index_t> Ia(sep.begin(), sep.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<index_t> Ib(sep.begin() + static_cast<std::ptrdiff_t>(half), sep.end());
  const GridBox& sub = top.nodes[static_cast<std::size_t>(root.left)].box;
  const NdFactors F(S.A, nd_partition_box(dim, n, sub, std::min(leaf_cells, n)));
  RMatrix Sab(static_cast<index_t>(Ia.size()), static_cast<index_t>(Ib.size()));
  std::vector<double> rhs(static_cast<std::size_t>(S.size()), 0.0);
  for (std::size_t c = 0; c < Ib.size(); ++c) {
    std::fill(rhs.begin(), rhs.end(), 0.0);
    const index_t j = Ib[c];
    for (index_t k = S.A.row_ptr[static_cast<std::size_t>(j)]; k < S.A.row_ptr[static_cast<std::size_t>(j + 1)]; ++k) {
      const index_t i = S.A.col[static_cast<std::size_t>(k)];
      if (sub.contains(S.point(i))) rhs[static_cast<std::size_t>(i)] = S.A.val[static_cast<std::size_t>(k)];
    }
    const auto x = F.solve(rhs);
    for (std::size_t r = 0; r < Ia.size(); ++r) {
      const index_t a = Ia[r];
      double v = 0;
      for (index_t k = S.A.row_ptr[static_cast<std::size_t>(a)]; k < S.A.row_ptr[static_cast<std::size_t>(a + 1)]; ++k) {
        const index_t i = S.A.col[static_cast<std::size_t>(k)];
        if (sub.contains(S.point(i))) v += S.A.val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i)];
      }
      Sab(static_cast<index_t>(r), static_cast<index_t>(c)) = v;
    }
  }
  auto res = make_spectrum(std::string("schur ") + (op == SchurOperator::laplace ? "laplace" : "helmholtz") + " " +
                               std::to_string(dim) + "d n=" + std::to_string(n),
                           singular_values(Sab));
  res.metadata["dim"] = std::to_string(dim);
  res.metadata["n"] = std::to_string(n);
  res.metadata["operator"] = op == SchurOperator::laplace ? "laplace" : "helmholtz";
  res.metadata["kappa"] = std::to_string(kappa);
  res.metadata["separator_half"] = std::to_string(Ia.size());
  add_rank_metadata(res);
  return res;
}

} // namespace fds
