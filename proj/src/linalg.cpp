#include "fds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace fds {

namespace {

constexpr double eps = std::numeric_limits<double>::epsilon();

template <typename T> void require_usable(const Matrix<T>& A, const char* who) {
  if (A.empty()) throw InvalidArgument(std::string(who) + ": empty matrix");
  if (!A.all_finite()) throw InvalidArgument(std::string(who) + ": non-finite entries");
}

void require_tol(double tol, const char* who) {
  if (!(tol >= 0.0 && tol < 1.0))
    throw InvalidArgument(std::string(who) + ": tolerance must lie in [0, 1)");
}

template <typename T> T phase(T x) {
  if constexpr (is_complex_v<T>) {
    const double a = std::abs(x);
    return a == 0.0 ? T(1) : x / a;
  } else {
    return x < 0 ? T(-1) : T(1);
  }
}

template <typename T> void swap_columns(Matrix<T>& W, index_t a, index_t b) {
  if (a == b) return;
  for (index_t i = 0; i < W.rows(); ++i) std::swap(W(i, a), W(i, b));
}

// Applies I - beta v v^* to rows r0.. of W, columns c0..
template <typename T>
void reflect_left(Matrix<T>& W, index_t r0, index_t c0, const std::vector<T>& v, double beta) {
  const index_t n = W.cols() - c0;
  if (n <= 0 || beta == 0.0) return;
  std::vector<T> w(static_cast<std::size_t>(n), T{});
  for (std::size_t l = 0; l < v.size(); ++l) {
    const T cv = conj(v[l]);
    if (cv == T(0)) continue;
    const T* row = W.row_ptr(r0 + static_cast<index_t>(l)) + c0;
    for (index_t j = 0; j < n; ++j) w[static_cast<std::size_t>(j)] += cv * row[j];
  }
  for (std::size_t l = 0; l < v.size(); ++l) {
    const T s = beta * v[l];
    if (s == T(0)) continue;
    T* row = W.row_ptr(r0 + static_cast<index_t>(l)) + c0;
    for (index_t j = 0; j < n; ++j) row[j] -= s * w[static_cast<std::size_t>(j)];
  }
}

// Builds v with H x = alpha e1, H = I - beta v v^*. Returns alpha.
template <typename T> T householder(std::vector<T>& v, double& beta) {
  double nrm2 = 0;
  for (const auto& x : v) nrm2 += abs2(x);
  const double nrm = std::sqrt(nrm2);
  if (nrm == 0.0) {
    beta = 0.0;
    return T(0);
  }
  const T alpha = -phase(v[0]) * nrm;
  v[0] -= alpha;
  const double vv = 2.0 * (nrm2 + nrm * std::abs(v[0] + alpha));
  beta = vv > 0 ? 2.0 / vv : 0.0;
  return alpha;
}

} // namespace

RMatrix real_embedding(const CMatrix& A) {
  const index_t m = A.rows(), n = A.cols();
  RMatrix E(2 * m, 2 * n);
  for (index_t i = 0; i < m; ++i)
    for (index_t j = 0; j < n; ++j) {
      const cdouble a = A(i, j);
      E(i, j) = a.real();
      E(i, j + n) = -a.imag();
      E(i + m, j) = a.imag();
      E(i + m, j + n) = a.real();
    }
  return E;
}

std::vector<index_t> iota_indices(index_t begin, index_t end) {
  std::vector<index_t> v(static_cast<std::size_t>(std::max<index_t>(0, end - begin)));
  std::iota(v.begin(), v.end(), begin);
  return v;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need two or more paired samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0 || y[i] <= 0) throw InvalidArgument("loglog_slope: samples must be positive");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Column-pivoted QR

template <typename T> Cpqr<T> cpqr(const Matrix<T>& A, double tol, index_t max_rank, bool form_q) {
  require_usable(A, "cpqr");
  require_tol(tol, "cpqr");
  const index_t m = A.rows(), n = A.cols();
  Matrix<T> W = A;
  std::vector<index_t> perm = iota_indices(0, n);
  std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
  for (index_t i = 0; i < m; ++i) {
    const T* row = W.row_ptr(i);
    for (index_t j = 0; j < n; ++j) norms[static_cast<std::size_t>(j)] += abs2(row[j]);
  }
  std::vector<double> ref = norms;

  index_t kmax = std::min(m, n);
  if (max_rank >= 0) kmax = std::min(kmax, max_rank);
  std::vector<std::vector<T>> vs;
  std::vector<double> betas;
  std::vector<T> diag;
  double r11 = 0.0;
  index_t rank = 0;

  for (index_t k = 0; k < kmax; ++k) {
    index_t p = k;
    for (index_t j = k + 1; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j), up = static_cast<std::size_t>(p);
      if (norms[uj] > norms[up] || (norms[uj] == norms[up] && perm[uj] < perm[up])) p = j;
    }
    swap_columns(W, k, p);
    std::swap(norms[static_cast<std::size_t>(k)], norms[static_cast<std::size_t>(p)]);
    std::swap(ref[static_cast<std::size_t>(k)], ref[static_cast<std::size_t>(p)]);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(p)]);

    std::vector<T> v(static_cast<std::size_t>(m - k));
    for (index_t i = k; i < m; ++i) v[static_cast<std::size_t>(i - k)] = W(i, k);
    const double pivot = norm2(std::span<const T>(v));
    if (k == 0) r11 = pivot;
    if (pivot == 0.0 || pivot <= tol * r11) break;

    double beta = 0;
    const T alpha = householder(v, beta);
    reflect_left(W, k, k + 1, v, beta);
    W(k, k) = alpha;
    for (index_t i = k + 1; i < m; ++i) W(i, k) = T(0);
    vs.push_back(std::move(v));
    betas.push_back(beta);
    diag.push_back(alpha);
    rank = k + 1;

    for (index_t j = k + 1; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      norms[uj] -= abs2(W(k, j));
      if (norms[uj] <= 1e-4 * ref[uj]) {
        double s = 0;
        for (index_t i = k + 1; i < m; ++i) s += abs2(W(i, j));
        norms[uj] = s;
        ref[uj] = s;
      }
    }
  }

  Cpqr<T> out;
  out.rank = rank;
  out.perm = std::move(perm);
  out.R = Matrix<T>(rank, n);
  for (index_t i = 0; i < rank; ++i)
    for (index_t j = i; j < n; ++j) out.R(i, j) = W(i, j);
  if (form_q) {
    out.Q = Matrix<T>(m, rank);
    for (index_t i = 0; i < rank; ++i) out.Q(i, i) = T(1);
    for (index_t k = rank - 1; k >= 0; --k)
      reflect_left(out.Q, k, 0, vs[static_cast<std::size_t>(k)], betas[static_cast<std::size_t>(k)]);
  }
  return out;
}

template Cpqr<double> cpqr(const RMatrix&, double, index_t, bool);
template Cpqr<cdouble> cpqr(const CMatrix&, double, index_t, bool);

// ---------------------------------------------------------------------------
// One-sided Jacobi

namespace {

// Orthogonalizes the rows of M in place and accumulates the rotations in J,
// so that M_in = J^T M_out.
void jacobi_rows(RMatrix& M, RMatrix* J) {
  const index_t p = M.rows(), q = M.cols();
  constexpr int max_sweeps = 60;
  const double thresh = eps * std::sqrt(static_cast<double>(std::max<index_t>(q, 1)));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (index_t i = 0; i + 1 < p; ++i) {
      for (index_t j = i + 1; j < p; ++j) {
        double* ri = M.row_ptr(i);
        double* rj = M.row_ptr(j);
        double a = 0, b = 0, c = 0;
        for (index_t l = 0; l < q; ++l) {
          a += ri[l] * ri[l];
          b += rj[l] * rj[l];
          c += ri[l] * rj[l];
        }
        if (c == 0.0 || std::abs(c) <= thresh * std::sqrt(a * b)) continue;
        rotated = true;
        const double zeta = (b - a) / (2.0 * c);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (index_t l = 0; l < q; ++l) {
          const double x = ri[l], y = rj[l];
          ri[l] = cs * x - sn * y;
          rj[l] = sn * x + cs * y;
        }
        if (J) {
          double* ji = J->row_ptr(i);
          double* jj = J->row_ptr(j);
          for (index_t l = 0; l < J->cols(); ++l) {
            const double x = ji[l], y = jj[l];
            ji[l] = cs * x - sn * y;
            jj[l] = sn * x + cs * y;
          }
        }
      }
    }
    if (!rotated) return;
  }
  throw ConvergenceError("jacobi_svd: no convergence after " + std::to_string(max_sweeps) +
                         " sweeps");
}

// SVD of a wide (p <= q) matrix: M = U diag(S) V^T with U p x p, V q x p.
Svd jacobi_wide(const RMatrix& M0) {
  RMatrix M = M0;
  const index_t p = M.rows(), q = M.cols();
  RMatrix J = RMatrix::identity(p);
  jacobi_rows(M, &J);
  std::vector<double> s(static_cast<std::size_t>(p));
  for (index_t i = 0; i < p; ++i) s[static_cast<std::size_t>(i)] = norm2(M.row(i));
  std::vector<index_t> order = iota_indices(0, p);
  std::stable_sort(order.begin(), order.end(), [&](index_t x, index_t y) {
    return s[static_cast<std::size_t>(x)] > s[static_cast<std::size_t>(y)];
  });
  Svd out;
  out.U = RMatrix(p, p);
  out.V = RMatrix(q, p);
  out.S.resize(static_cast<std::size_t>(p));
  for (index_t c = 0; c < p; ++c) {
    const index_t i = order[static_cast<std::size_t>(c)];
    const double si = s[static_cast<std::size_t>(i)];
    out.S[static_cast<std::size_t>(c)] = si;
    for (index_t r = 0; r < p; ++r) out.U(r, c) = J(i, r);
    if (si > 0)
      for (index_t l = 0; l < q; ++l) out.V(l, c) = M(i, l) / si;
  }
  return out;
}

Svd keep_leading(Svd s, index_t k) {
  if (k >= s.rank()) return s;
  s.U = s.U.block(0, 0, s.U.rows(), k);
  s.V = s.V.block(0, 0, s.V.rows(), k);
  s.S.resize(static_cast<std::size_t>(k));
  return s;
}

} // namespace

Svd jacobi_svd(const RMatrix& A) {
  require_usable(A, "jacobi_svd");
  if (A.rows() <= A.cols()) return jacobi_wide(A);
  Svd t = jacobi_wide(A.transpose());
  std::swap(t.U, t.V);
  return t;
}

Svd truncated_svd(const RMatrix& A, double tol, index_t rank_cap) {
  require_usable(A, "truncated_svd");
  require_tol(tol, "truncated_svd");
  const double pre_tol = tol > 0 ? std::max(tol * 1e-3, 4.0 * eps) : 0.0;
  Cpqr<double> qr = cpqr(A, pre_tol);
  Svd out;
  if (qr.rank == 0) {
    out.U = RMatrix(A.rows(), 0);
    out.V = RMatrix(A.cols(), 0);
    return out;
  }
  Svd r = jacobi_wide(qr.R);
  index_t k = 0;
  const double s1 = r.S[0];
  while (k < r.rank() && r.S[static_cast<std::size_t>(k)] > tol * s1 &&
         r.S[static_cast<std::size_t>(k)] > 0.0)
    ++k;
  if (rank_cap >= 0) k = std::min(k, rank_cap);
  r = keep_leading(std::move(r), k);
  out.S = r.S;
  out.U = matmul(qr.Q, r.U);
  out.V = RMatrix(A.cols(), k);
  for (index_t j = 0; j < A.cols(); ++j)
    std::copy_n(r.V.row_ptr(j), k, out.V.row_ptr(qr.perm[static_cast<std::size_t>(j)]));
  return out;
}

index_t eps_rank(std::span<const double> sigma, double eps_rel) {
  if (sigma.empty() || sigma[0] <= 0) return 0;
  index_t k = 0;
  while (k < static_cast<index_t>(sigma.size()) &&
         sigma[static_cast<std::size_t>(k)] > eps_rel * sigma[0])
    ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Bidiagonalization and bisection

index_t sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  const std::size_t n = d.size();
  double scale = 0;
  for (double v : d) scale = std::max(scale, std::abs(v));
  for (double v : e) scale = std::max(scale, std::abs(v));
  const double pivmin = std::max(scale, 1.0) * std::numeric_limits<double>::min() / eps;
  index_t count = 0;
  double q = d[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (std::size_t i = 1; i < n; ++i) {
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

namespace {

double gershgorin_radius(std::span<const double> d, std::span<const double> e) {
  double r = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = std::abs(d[i]);
    if (i > 0) s += std::abs(e[i - 1]);
    if (i + 1 < d.size()) s += std::abs(e[i]);
    r = std::max(r, s);
  }
  return r;
}

double bisect_eigenvalue(std::span<const double> d, std::span<const double> e, index_t k,
                         double lo, double hi, double abs_floor) {
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 2.0 * eps * std::max(std::abs(lo), std::abs(hi)) + abs_floor) break;
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(d, e, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

double symmetric_tridiagonal_eigenvalue(std::span<const double> d, std::span<const double> e,
                                        index_t k) {
  const auto n = static_cast<index_t>(d.size());
  if (n == 0 || static_cast<index_t>(e.size()) + 1 != n)
    throw DimensionError("tridiagonal: inconsistent lengths");
  if (k < 0 || k >= n) throw InvalidArgument("tridiagonal: eigenvalue index out of range");
  const double r = gershgorin_radius(d, e);
  const double bound = r * (1 + 4 * eps) + std::numeric_limits<double>::min();
  return bisect_eigenvalue(d, e, k, -bound, bound, r * eps * eps);
}

RVector symmetric_tridiagonal_eigenvalues(std::span<const double> d, std::span<const double> e) {
  const auto n = static_cast<index_t>(d.size());
  RVector out(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = symmetric_tridiagonal_eigenvalue(d, e, k);
  return out;
}

namespace {

// Householder bidiagonalization of a matrix with rows >= cols; returns (diag, superdiag).
std::pair<RVector, RVector> bidiagonalize(const RMatrix& A) {
  RMatrix W = A.rows() >= A.cols() ? A : A.transpose();
  const index_t m = W.rows(), n = W.cols();
  RVector d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(std::max<index_t>(n - 1, 0)));
  for (index_t k = 0; k < n; ++k) {
    std::vector<double> v(static_cast<std::size_t>(m - k));
    for (index_t i = k; i < m; ++i) v[static_cast<std::size_t>(i - k)] = W(i, k);
    double beta = 0;
    d[static_cast<std::size_t>(k)] = householder(v, beta);
    reflect_left(W, k, k + 1, v, beta);
    if (k + 1 < n) {
      std::vector<double> u(W.row_ptr(k) + k + 1, W.row_ptr(k) + n);
      double bu = 0;
      e[static_cast<std::size_t>(k)] = householder(u, bu);
      if (bu != 0.0) {
        for (index_t i = k + 1; i < m; ++i) {
          double* row = W.row_ptr(i) + k + 1;
          double s = 0;
          for (std::size_t j = 0; j < u.size(); ++j) s += row[j] * u[j];
          s *= bu;
          for (std::size_t j = 0; j < u.size(); ++j) row[j] -= s * u[j];
        }
      }
    }
  }
  for (auto& x : d) x = std::abs(x);
  for (auto& x : e) x = std::abs(x);
  return {d, e};
}

// Golub-Kahan tridiagonal (zero diagonal) of the bidiagonal (d, e).
std::pair<RVector, RVector> golub_kahan(const RVector& d, const RVector& e) {
  const std::size_t n = d.size();
  RVector zd(2 * n, 0.0), off(2 * n - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    off[2 * i] = d[i];
    if (i + 1 < n) off[2 * i + 1] = e[i];
  }
  return {zd, off};
}

} // namespace

RVector singular_values(const RMatrix& A) {
  require_usable(A, "singular_values");
  auto [d, e] = bidiagonalize(A);
  auto [zd, off] = golub_kahan(d, e);
  const auto n = static_cast<index_t>(d.size());
  const double r = gershgorin_radius(zd, off);
  RVector s(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k)
    s[static_cast<std::size_t>(k)] =
        std::max(0.0, bisect_eigenvalue(zd, off, 2 * n - 1 - k, 0.0, r * (1 + 4 * eps) + 1e-300,
                                        r * eps * eps));
  return s;
}

std::pair<double, double> extreme_singular_values(const RMatrix& A) {
  require_usable(A, "extreme_singular_values");
  auto [d, e] = bidiagonalize(A);
  auto [zd, off] = golub_kahan(d, e);
  const auto n = static_cast<index_t>(d.size());
  const double r = gershgorin_radius(zd, off);
  const double hi = r * (1 + 4 * eps) + 1e-300;
  const double smax = bisect_eigenvalue(zd, off, 2 * n - 1, 0.0, hi, r * eps * eps);
  const double smin = bisect_eigenvalue(zd, off, n, 0.0, hi, r * eps * eps);
  return {smax, std::max(0.0, smin)};
}

RVector complex_singular_values(const CMatrix& A, double prefilter) {
  require_usable(A, "complex_singular_values");
  CMatrix M = A;
  if (prefilter > 0) {
    Cpqr<cdouble> qr = cpqr(A, prefilter, -1, false);
    if (qr.rank == 0) return {};
    M = std::move(qr.R);
  }
  const index_t p = std::min(M.rows(), M.cols());
  RMatrix E = real_embedding(M);
  if (E.rows() > E.cols()) E = E.transpose();
  if (E.cols() > 2 * E.rows()) {
    Cpqr<double> qr = cpqr(E.transpose(), 0.0, -1, false);
    E = qr.R;
  }
  RVector s;
  if (E.rows() > 0) {
    RMatrix W = E.rows() <= E.cols() ? E : E.transpose();
    jacobi_rows(W, nullptr);
    for (index_t i = 0; i < W.rows(); ++i) s.push_back(norm2(W.row(i)));
  }
  s.resize(static_cast<std::size_t>(2 * p), 0.0);
  std::sort(s.begin(), s.end(), std::greater<>());
  RVector out(static_cast<std::size_t>(p));
  const double s1 = s.empty() ? 0.0 : s[0];
  for (index_t i = 0; i < p; ++i) {
    const double a = s[static_cast<std::size_t>(2 * i)], b = s[static_cast<std::size_t>(2 * i + 1)];
    if (std::abs(a - b) > 1e-10 * s1)
      throw ConvergenceError("complex_singular_values: embedding pairs disagree at index " +
                             std::to_string(i));
    out[static_cast<std::size_t>(i)] = a;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolative decomposition

template <typename T> Matrix<T> InterpolativeFactor<T>::interpolation_matrix() const {
  const index_t k = rank(), n = cols();
  Matrix<T> X(k, n);
  for (index_t l = 0; l < k; ++l) X(l, perm[static_cast<std::size_t>(l)]) = T(1);
  for (index_t j = 0; j < n - k; ++j)
    for (index_t l = 0; l < k; ++l) X(l, perm[static_cast<std::size_t>(k + j)]) = interp(l, j);
  return X;
}

template <typename T>
InterpolativeFactor<T> interpolative_decomposition(const Matrix<T>& A, double tol,
                                                   index_t max_rank) {
  Cpqr<T> qr = cpqr(A, tol, max_rank, false);
  const index_t k = qr.rank, n = A.cols();
  Matrix<T> Tm(k, n - k);
  for (index_t j = 0; j < n - k; ++j) {
    for (index_t i = k - 1; i >= 0; --i) {
      T s = qr.R(i, k + j);
      for (index_t l = i + 1; l < k; ++l) s -= qr.R(i, l) * Tm(l, j);
      Tm(i, j) = s / qr.R(i, i);
    }
  }
  std::vector<index_t> perm = qr.perm;
  constexpr double bound = 2.0;
  for (index_t swaps = 0; swaps < 8 * (n + 1); ++swaps) {
    index_t bi = -1, bj = -1;
    double best = bound * (1 + 1e-12);
    for (index_t i = 0; i < k; ++i)
      for (index_t j = 0; j < n - k; ++j)
        if (std::abs(Tm(i, j)) > best) {
          best = std::abs(Tm(i, j));
          bi = i;
          bj = j;
        }
    if (bi < 0) break;
    const T t = Tm(bi, bj);
    Matrix<T> Tn(k, n - k);
    for (index_t l = 0; l < k; ++l)
      for (index_t m = 0; m < n - k; ++m) {
        if (l == bi && m == bj)
          Tn(l, m) = T(1) / t;
        else if (l == bi)
          Tn(l, m) = Tm(bi, m) / t;
        else if (m == bj)
          Tn(l, m) = -Tm(l, bj) / t;
        else
          Tn(l, m) = Tm(l, m) - Tm(l, bj) * Tm(bi, m) / t;
      }
    Tm = std::move(Tn);
    std::swap(perm[static_cast<std::size_t>(bi)], perm[static_cast<std::size_t>(k + bj)]);
  }
  InterpolativeFactor<T> out;
  out.skeleton.assign(perm.begin(), perm.begin() + k);
  out.interp = std::move(Tm);
  out.perm = std::move(perm);
  return out;
}

template struct InterpolativeFactor<double>;
template struct InterpolativeFactor<cdouble>;
template InterpolativeFactor<double> interpolative_decomposition(const RMatrix&, double, index_t);
template InterpolativeFactor<cdouble> interpolative_decomposition(const CMatrix&, double, index_t);

// ---------------------------------------------------------------------------
// Dense LU

template <typename T> DenseLU<T>::DenseLU(Matrix<T> A) : lu_(std::move(A)) {
  const index_t n = lu_.rows();
  if (lu_.cols() != n) throw DimensionError("DenseLU: matrix is not square");
  if (!lu_.all_finite()) throw InvalidArgument("DenseLU: non-finite entries");
  piv_ = iota_indices(0, n);
  for (index_t k = 0; k < n; ++k) {
    index_t p = k;
    double best = std::abs(lu_(k, k));
    for (index_t i = k + 1; i < n; ++i)
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    if (best < 1e-300)
      throw SingularMatrixError("DenseLU: pivot below 1e-300 at step " + std::to_string(k));
    if (p != k) {
      std::swap_ranges(lu_.row_ptr(k), lu_.row_ptr(k) + n, lu_.row_ptr(p));
      std::swap(piv_[static_cast<std::size_t>(k)], piv_[static_cast<std::size_t>(p)]);
    }
    const T* rk = lu_.row_ptr(k);
    const T inv = T(1) / rk[k];
    for (index_t i = k + 1; i < n; ++i) {
      T* ri = lu_.row_ptr(i);
      if (ri[k] == T(0)) continue;
      const T l = ri[k] * inv;
      ri[k] = l;
      for (index_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

template <typename T> void DenseLU<T>::solve_inplace(std::span<T> b) const {
  const index_t n = size();
  if (static_cast<index_t>(b.size()) != n) throw DimensionError("DenseLU::solve: length mismatch");
  std::vector<T> y(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(piv_[static_cast<std::size_t>(i)])];
  for (index_t i = 0; i < n; ++i) {
    const T* r = lu_.row_ptr(i);
    T s = y[static_cast<std::size_t>(i)];
    for (index_t j = 0; j < i; ++j) s -= r[j] * y[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  for (index_t i = n - 1; i >= 0; --i) {
    const T* r = lu_.row_ptr(i);
    T s = y[static_cast<std::size_t>(i)];
    for (index_t j = i + 1; j < n; ++j) s -= r[j] * y[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s / r[i];
  }
  std::copy(y.begin(), y.end(), b.begin());
}

template <typename T> std::vector<T> DenseLU<T>::solve(std::span<const T> b) const {
  std::vector<T> x(b.begin(), b.end());
  solve_inplace(x);
  return x;
}

template <typename T> Matrix<T> DenseLU<T>::solve(const Matrix<T>& B) const {
  const index_t n = size(), c = B.cols();
  if (B.rows() != n) throw DimensionError("DenseLU::solve: row count mismatch");
  Matrix<T> X(n, c);
  for (index_t i = 0; i < n; ++i)
    std::copy_n(B.row_ptr(piv_[static_cast<std::size_t>(i)]), c, X.row_ptr(i));
  for (index_t i = 0; i < n; ++i) {
    T* xi = X.row_ptr(i);
    const T* r = lu_.row_ptr(i);
    for (index_t k = 0; k < i; ++k) {
      if (r[k] == T(0)) continue;
      const T l = r[k];
      const T* xk = X.row_ptr(k);
      for (index_t j = 0; j < c; ++j) xi[j] -= l * xk[j];
    }
  }
  for (index_t i = n - 1; i >= 0; --i) {
    T* xi = X.row_ptr(i);
    const T* r = lu_.row_ptr(i);
    for (index_t k = i + 1; k < n; ++k) {
      if (r[k] == T(0)) continue;
      const T u = r[k];
      const T* xk = X.row_ptr(k);
      for (index_t j = 0; j < c; ++j) xi[j] -= u * xk[j];
    }
    const T inv = T(1) / r[i];
    for (index_t j = 0; j < c; ++j) xi[j] *= inv;
  }
  return X;
}

template <typename T> Matrix<T> DenseLU<T>::solve_right(const Matrix<T>& B) const {
  // X A = B  <=>  A^T X^T = B^T, with A^T = U^T L^T P.
  const index_t n = size();
  if (B.cols() != n) throw DimensionError("DenseLU::solve_right: column count mismatch");
  Matrix<T> X(B.rows(), n);
  std::vector<T> w(static_cast<std::size_t>(n));
  for (index_t r = 0; r < B.rows(); ++r) {
    const T* b = B.row_ptr(r);
    for (index_t i = 0; i < n; ++i) {
      T s = b[i];
      for (index_t j = 0; j < i; ++j) s -= lu_(j, i) * w[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(i)] = s / lu_(i, i);
    }
    for (index_t i = n - 1; i >= 0; --i) {
      T s = w[static_cast<std::size_t>(i)];
      for (index_t j = i + 1; j < n; ++j) s -= lu_(j, i) * w[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(i)] = s;
    }
    T* x = X.row_ptr(r);
    for (index_t i = 0; i < n; ++i) x[piv_[static_cast<std::size_t>(i)]] = w[static_cast<std::size_t>(i)];
  }
  return X;
}

template <typename T> Matrix<T> DenseLU<T>::inverse() const {
  return solve(Matrix<T>::identity(size()));
}

template <typename T> double DenseLU<T>::condition_1norm(const Matrix<T>& A) const {
  auto norm1 = [](const Matrix<T>& M) {
    std::vector<double> c(static_cast<std::size_t>(M.cols()), 0.0);
    for (index_t i = 0; i < M.rows(); ++i)
      for (index_t j = 0; j < M.cols(); ++j) c[static_cast<std::size_t>(j)] += std::abs(M(i, j));
    return c.empty() ? 0.0 : *std::max_element(c.begin(), c.end());
  };
  return norm1(A) * norm1(inverse());
}

template class DenseLU<double>;
template class DenseLU<cdouble>;

template <typename T> Matrix<T> dense_lu_solve(const Matrix<T>& A, const Matrix<T>& B) {
  return DenseLU<T>(A).solve(B);
}

template RMatrix dense_lu_solve(const RMatrix&, const RMatrix&);
template CMatrix dense_lu_solve(const CMatrix&, const CMatrix&);

// ---------------------------------------------------------------------------
// Entry access

RMatrix BlockSource::range_block(index_t r0, index_t nr, index_t c0, index_t nc) const {
  const auto r = iota_indices(r0, r0 + nr);
  const auto c = iota_indices(c0, c0 + nc);
  return block(r, c);
}

BlockSource BlockSource::dense(std::shared_ptr<const RMatrix> A) {
  BlockSource s;
  s.n_rows = A->rows();
  s.n_cols = A->cols();
  s.block = [A](std::span<const index_t> r, std::span<const index_t> c) {
    return A->submatrix(r, c);
  };
  return s;
}

BlockSource BlockSource::dense_ref(const RMatrix& A) {
  BlockSource s;
  s.n_rows = A.rows();
  s.n_cols = A.cols();
  s.block = [&A](std::span<const index_t> r, std::span<const index_t> c) {
    return A.submatrix(r, c);
  };
  return s;
}

BlockSource BlockSource::from_entries(index_t n_rows, index_t n_cols,
                                      std::function<double(index_t, index_t)> entry) {
  BlockSource s;
  s.n_rows = n_rows;
  s.n_cols = n_cols;
  s.block = [entry = std::move(entry)](std::span<const index_t> r, std::span<const index_t> c) {
    RMatrix B(static_cast<index_t>(r.size()), static_cast<index_t>(c.size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      double* row = B.row_ptr(static_cast<index_t>(i));
      for (std::size_t j = 0; j < c.size(); ++j) row[j] = entry(r[i], c[j]);
    }
    return B;
  };
  return s;
}

} // namespace fds
