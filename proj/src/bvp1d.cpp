#include "fds/bvp1d.hpp"

#include <algorithm>
#include <cmath>

#include "fds/cluster_tree.hpp"
#include "fds/hodlr.hpp"

namespace fds {

Bvp1dProblem Bvp1dProblem::sample(double a, double b, index_t N, const std::function<double(double)>& m,
                                  const std::function<double(double)>& g, double fa, double fb) {
  if (N < 1) throw InvalidArgument("bvp1d: N must be at least 1");
  if (!(b > a)) throw InvalidArgument("bvp1d: interval must satisfy a < b");
  Bvp1dProblem p;
  p.a = a;
  p.b = b;
  p.N = N;
  p.fa = fa;
  p.fb = fb;
  p.m.resize(static_cast<std::size_t>(N));
  p.g.resize(static_cast<std::size_t>(N));
  for (index_t i = 1; i <= N; ++i) {
    p.m[static_cast<std::size_t>(i - 1)] = m(p.x(i));
    p.g[static_cast<std::size_t>(i - 1)] = g(p.x(i));
  }
  return p;
}

namespace {

void check_problem(const Bvp1dProblem& p) {
  if (p.N < 1) throw InvalidArgument("bvp1d: N must be at least 1");
  if (static_cast<index_t>(p.m.size()) != p.N || static_cast<index_t>(p.g.size()) != p.N)
    throw DimensionError("bvp1d: coefficient samples must have length N");
}

} // namespace

RMatrix TridiagonalMatrix::dense() const {
  const index_t n = size();
  RMatrix A(n, n);
  for (index_t i = 0; i < n; ++i) {
    A(i, i) = diag[static_cast<std::size_t>(i)];
    if (i > 0) A(i, i - 1) = sub[static_cast<std::size_t>(i - 1)];
    if (i + 1 < n) A(i, i + 1) = super[static_cast<std::size_t>(i)];
  }
  return A;
}

std::vector<double> TridiagonalMatrix::apply(std::span<const double> x) const {
  const auto n = diag.size();
  if (x.size() != n) throw DimensionError("tridiagonal apply: length mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += sub[i - 1] * x[i - 1];
    if (i + 1 < n) s += super[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

FdSystem assemble_fd(const Bvp1dProblem& p) {
  check_problem(p);
  const double h2 = 1.0 / (p.h() * p.h());
  const auto n = static_cast<std::size_t>(p.N);
  FdSystem s;
  s.T.sub.assign(n - 1, -h2);
  s.T.super.assign(n - 1, -h2);
  s.T.diag.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.T.diag[i] = 2.0 * h2 + p.m[i];
  s.rhs = p.g;
  s.rhs.front() += h2 * p.fa;
  s.rhs.back() += h2 * p.fb;
  return s;
}

std::vector<double> solve_tridiag(const TridiagonalMatrix& T, std::span<const double> rhs) {
  const auto n = T.diag.size();
  if (n == 0) throw DimensionError("solve_tridiag: empty system");
  if (rhs.size() != n || T.sub.size() + 1 != n || T.super.size() + 1 != n)
    throw DimensionError("solve_tridiag: inconsistent lengths");
  bool dominant = true;
  for (std::size_t i = 0; i < n && dominant; ++i) {
    double off = 0;
    if (i > 0) off += std::abs(T.sub[i - 1]);
    if (i + 1 < n) off += std::abs(T.super[i]);
    dominant = std::abs(T.diag[i]) >= off;
  }
  std::vector<double> x(rhs.begin(), rhs.end());
  if (dominant) {
    std::vector<double> c(n, 0.0);
    double piv = T.diag[0];
    if (piv == 0.0) throw SingularMatrixError("solve_tridiag: zero pivot at row 0");
    c[0] = n > 1 ? T.super[0] / piv : 0.0;
    x[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
      piv = T.diag[i] - T.sub[i - 1] * c[i - 1];
      if (piv == 0.0) throw SingularMatrixError("solve_tridiag: zero pivot at row " + std::to_string(i));
      if (i + 1 < n) c[i] = T.super[i] / piv;
      x[i] = (x[i] - T.sub[i - 1] * x[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
  }
  // Partial pivoting with one extra superdiagonal of fill.
  std::vector<double> d = T.diag, du(T.super), dl(T.sub), du2(n, 0.0);
  du.push_back(0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) throw SingularMatrixError("solve_tridiag: zero pivot at row " + std::to_string(i));
      const double f = dl[i] / d[i];
      d[i + 1] -= f * du[i];
      x[i + 1] -= f * x[i];
      dl[i] = 0.0;
    } else {
      const double f = d[i] / dl[i];
      d[i] = dl[i];
      const double t = d[i + 1];
      d[i + 1] = du[i] - f * t;
      du2[i] = du[i + 1];
      du[i + 1] = -f * du[i + 1];
      du[i] = t;
      std::swap(x[i], x[i + 1]);
      x[i + 1] -= f * x[i];
    }
  }
  if (d[n - 1] == 0.0) throw SingularMatrixError("solve_tridiag: zero pivot at row " + std::to_string(n - 1));
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    if (i + 1 < n) s -= du[i] * x[i + 1];
    if (i + 2 < n) s -= du2[i] * x[i + 2];
    x[i] = s / d[i];
  }
  return x;
}

std::vector<double> solve_bvp_fd(const Bvp1dProblem& p) {
  const FdSystem s = assemble_fd(p);
  return solve_tridiag(s.T, s.rhs);
}

double semiseparable_check(const RMatrix& B) {
  if (B.rows() != B.cols()) throw DimensionError("semiseparable_check: matrix is not square");
  const index_t n = B.rows();
  const double scale = B.norm_max();
  if (scale == 0.0) return 0.0;
  double worst = 0;
  // Lower triangle: rows i1 < i2, columns j1 < j2 < i1. The upper triangle is the transpose case.
  for (index_t i1 = 0; i1 < n; ++i1)
    for (index_t i2 = i1 + 1; i2 < n; ++i2)
      for (index_t j1 = 0; j1 < i1; ++j1)
        for (index_t j2 = j1 + 1; j2 < i1; ++j2) {
          const double lo = B(i1, j1) * B(i2, j2) - B(i1, j2) * B(i2, j1);
          const double up = B(j1, i1) * B(j2, i2) - B(j2, i1) * B(j1, i2);
          worst = std::max({worst, std::abs(lo), std::abs(up)});
        }
  return worst / (scale * scale);
}

double green_1d(double x, double y, double a, double b) {
  if (x < a || x > b || y < a || y > b) throw InvalidArgument("green_1d: point outside [a, b]");
  return x >= y ? (b - x) * (y - a) / (b - a) : (x - a) * (b - y) / (b - a);
}

RMatrix green_matrix(const Bvp1dProblem& p) {
  check_problem(p);
  const double h = p.h();
  RMatrix G(p.N, p.N);
  for (index_t i = 0; i < p.N; ++i)
    for (index_t j = 0; j < p.N; ++j) G(i, j) = h * green_1d(p.x(i + 1), p.x(j + 1), p.a, p.b);
  return G;
}

BlockSource nystrom_source(const Bvp1dProblem& p) {
  check_problem(p);
  const double h = p.h();
  return BlockSource::from_entries(p.N, p.N, [p, h](index_t i, index_t j) {
    const double v = h * green_1d(p.x(i + 1), p.x(j + 1), p.a, p.b) * p.m[static_cast<std::size_t>(j)];
    return i == j ? 1.0 + v : v;
  });
}

NystromSystem assemble_nystrom(const Bvp1dProblem& p) {
  check_problem(p);
  const RMatrix G = green_matrix(p);
  NystromSystem s;
  s.system = RMatrix::identity(p.N);
  for (index_t i = 0; i < p.N; ++i)
    for (index_t j = 0; j < p.N; ++j) s.system(i, j) += G(i, j) * p.m[static_cast<std::size_t>(j)];
  s.rhs = matvec(G, std::span<const double>(p.g));
  return s;
}

std::vector<double> solve_bvp_ie(const Bvp1dProblem& p, IeBackend backend) {
  check_problem(p);
  const auto n = static_cast<std::size_t>(p.N);
  std::vector<double> w(n), load(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = p.x(static_cast<index_t>(i) + 1);
    w[i] = p.fa * (p.b - x) / (p.b - p.a) + p.fb * (x - p.a) / (p.b - p.a);
    load[i] = p.g[i] - p.m[i] * w[i];
  }
  std::vector<double> v;
  if (backend == IeBackend::dense || p.N < 32) {
    Bvp1dProblem q = p;
    q.g = load;
    const NystromSystem s = assemble_nystrom(q);
    v = DenseLU<double>(s.system).solve(std::span<const double>(s.rhs));
  } else {
    const BlockSource src = nystrom_source(p);
    const ClusterTree tree = build_uniform_tree(p.N, default_leaf_size(2));
    const HodlrMatrix H = compress_to_hodlr(src, tree, 1e-14);
    // G * load in O(N): the Green kernel is the discrete inverse of the m = 0 FD matrix.
    Bvp1dProblem q = p;
    std::fill(q.m.begin(), q.m.end(), 0.0);
    q.g = load;
    q.fa = q.fb = 0;
    const std::vector<double> rhs = solve_bvp_fd(q);
    v = invert_woodbury(H).apply(std::span<const double>(rhs));
  }
  for (std::size_t i = 0; i < n; ++i) v[i] += w[i];
  return v;
}

Bvp1dProblem model_problem(BvpCase c, index_t N) {
  const double sign = c == BvpCase::non_osc ? 1.0 : -1.0;
  return Bvp1dProblem::sample(
      0.0, 1.0, N, [sign](double x) { return sign * 100.0 * (1.0 + x) * std::cos(x); },
      [](double x) { return 1.0 + std::cos(1.0 + x); });
}

double tridiagonal_condition(const TridiagonalMatrix& T) {
  const index_t n = T.size();
  for (std::size_t i = 0; i < T.sub.size(); ++i)
    if (T.sub[i] != T.super[i]) throw InvalidArgument("tridiagonal_condition: matrix is not symmetric");
  const std::span<const double> d(T.diag), e(T.sub);
  const double lo = symmetric_tridiagonal_eigenvalue(d, e, 0);
  const double hi = symmetric_tridiagonal_eigenvalue(d, e, n - 1);
  const index_t neg = sturm_count(d, e, 0.0);
  double smin;
  if (neg == 0) {
    smin = lo;
  } else if (neg == n) {
    smin = -hi;
  } else {
    smin = std::min(-symmetric_tridiagonal_eigenvalue(d, e, neg - 1), symmetric_tridiagonal_eigenvalue(d, e, neg));
  }
  const double smax = std::max(std::abs(lo), std::abs(hi));
  if (smin <= 0) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

namespace {

// Linear interpolation of fine-grid samples (including the boundary values) at x.
double interpolate(const Bvp1dProblem& fine, const std::vector<double>& u, double x) {
  const double s = (x - fine.a) / fine.h();
  const auto i = std::clamp<index_t>(static_cast<index_t>(std::floor(s)), 0, fine.N);
  const double t = s - static_cast<double>(i);
  auto val = [&](index_t k) {
    if (k == 0) return fine.fa;
    if (k == fine.N + 1) return fine.fb;
    return u[static_cast<std::size_t>(k - 1)];
  };
  return (1 - t) * val(i) + t * val(i + 1);
}

double max_error(const Bvp1dProblem& p, const std::vector<double>& u, const Bvp1dProblem& fine,
                 const std::vector<double>& ref) {
  double e = 0;
  for (index_t i = 1; i <= p.N; ++i)
    e = std::max(e, std::abs(u[static_cast<std::size_t>(i - 1)] - interpolate(fine, ref, p.x(i))));
  return e;
}

} // namespace

std::vector<ConditionRow> condition_study(std::span<const index_t> Ns, BvpCase c) {
  if (Ns.empty()) return {};
  const index_t nmax = *std::max_element(Ns.begin(), Ns.end());
  const Bvp1dProblem fine = model_problem(c, 4 * (nmax + 1) - 1);
  const std::vector<double> ref = solve_bvp_fd(fine);
  std::vector<ConditionRow> rows;
  for (index_t N : Ns) {
    const Bvp1dProblem p = model_problem(c, N);
    ConditionRow r;
    r.N = N;
    r.cond_fd = tridiagonal_condition(assemble_fd(p).T);
    const auto [smax, smin] = extreme_singular_values(assemble_nystrom(p).system);
    r.cond_ie = smax / smin;
    r.err_fd = max_error(p, solve_bvp_fd(p), fine, ref);
    r.err_ie = max_error(p, solve_bvp_ie(p), fine, ref);
    rows.push_back(r);
  }
  return rows;
}

} // namespace fds
