#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "fds/matrix.hpp"

namespace fds {

/// Pair of tall factors whose product is U * V^*.
template <typename T> struct LowRankFactor {
  Matrix<T> U; // m x k
  Matrix<T> V; // n x k

  index_t rank() const { return U.cols(); }
  index_t rows() const { return U.rows(); }
  index_t cols() const { return V.rows(); }

  Matrix<T> dense() const { return matmul_adj_right(U, V); }
  index_t stored_scalars() const { return U.size() + V.size(); }

  /// y += U (V^* x)
  void apply_add(std::span<const T> x, std::span<T> y) const {
    if (rank() == 0) return;
    std::vector<T> t = matvec_adj(V, x);
    for (index_t i = 0; i < U.rows(); ++i) {
      const T* u = U.row_ptr(i);
      T s{};
      for (index_t j = 0; j < rank(); ++j) s += u[j] * t[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] += s;
    }
  }

  static LowRankFactor zero(index_t m, index_t n) { return {Matrix<T>(m, 0), Matrix<T>(n, 0)}; }
};

using RLowRank = LowRankFactor<double>;

/// Column-pivoted Householder QR, A(:, perm) ~= Q * R.
template <typename T> struct Cpqr {
  Matrix<T> Q; // m x rank, orthonormal columns
  Matrix<T> R; // rank x n, upper trapezoidal
  std::vector<index_t> perm;
  index_t rank = 0;
};

/// Stops at the first k with |R(k+1,k+1)| <= tol * |R(1,1)|, or at max_rank.
/// With tol = 0 the factorization runs until an exactly zero pivot.
template <typename T>
Cpqr<T> cpqr(const Matrix<T>& A, double tol, index_t max_rank = -1, bool form_q = true);

struct Svd {
  RMatrix U;   // m x k
  RVector S;   // k, non-increasing
  RMatrix V;   // n x k
  index_t rank() const { return static_cast<index_t>(S.size()); }
};

/// Thin SVD of A truncated to sigma_j > tol * sigma_1 (and at most rank_cap terms).
Svd truncated_svd(const RMatrix& A, double tol, index_t rank_cap = -1);

/// One-sided Jacobi SVD without truncation. At most 60 sweeps.
Svd jacobi_svd(const RMatrix& A);

/// All singular values of A, non-increasing. Householder bidiagonalization
/// followed by bisection on the Golub-Kahan tridiagonal.
RVector singular_values(const RMatrix& A);

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal d and
/// off-diagonal e, ascending, by Sturm-sequence bisection.
RVector symmetric_tridiagonal_eigenvalues(std::span<const double> d, std::span<const double> e);

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
index_t sturm_count(std::span<const double> d, std::span<const double> e, double x);

/// k-th smallest eigenvalue (0-based) of the symmetric tridiagonal (d, e).
double symmetric_tridiagonal_eigenvalue(std::span<const double> d, std::span<const double> e,
                                        index_t k);

/// Largest and smallest singular value of A.
std::pair<double, double> extreme_singular_values(const RMatrix& A);

/// Singular values of a complex matrix through its real embedding.
/// If prefilter > 0, a complex CPQR truncated at that relative level is applied first,
/// so only values above roughly prefilter * sigma_1 are resolved.
RVector complex_singular_values(const CMatrix& A, double prefilter = 0.0);

/// Smallest k with sigma[k] <= eps * sigma[0] (sigma non-increasing).
index_t eps_rank(std::span<const double> sigma, double eps);

/// Column interpolative decomposition: A ~= A(:, skeleton) * X with
/// X(:, perm) = [I | interp].
template <typename T> struct InterpolativeFactor {
  std::vector<index_t> skeleton;
  Matrix<T> interp; // k x (n-k)
  std::vector<index_t> perm;

  index_t rank() const { return static_cast<index_t>(skeleton.size()); }
  index_t cols() const { return static_cast<index_t>(perm.size()); }
  /// The k x n interpolation matrix X.
  Matrix<T> interpolation_matrix() const;
};

template <typename T>
InterpolativeFactor<T> interpolative_decomposition(const Matrix<T>& A, double tol,
                                                   index_t max_rank = -1);

/// Partial-pivoted LU of a square matrix.
template <typename T> class DenseLU {
public:
  DenseLU() = default;
  /// Throws SingularMatrixError when a pivot magnitude falls below 1e-300.
  explicit DenseLU(Matrix<T> A);

  index_t size() const { return lu_.rows(); }
  void solve_inplace(std::span<T> b) const;
  std::vector<T> solve(std::span<const T> b) const;
  Matrix<T> solve(const Matrix<T>& B) const;
  /// Solves X * A = B.
  Matrix<T> solve_right(const Matrix<T>& B) const;
  Matrix<T> inverse() const;
  /// ||A||_1 * ||A^{-1}||_1 from the explicit inverse; A must be the factored matrix.
  double condition_1norm(const Matrix<T>& A) const;
  index_t stored_scalars() const { return lu_.size(); }

private:
  Matrix<T> lu_;
  std::vector<index_t> piv_;
};

template <typename T> Matrix<T> dense_lu_solve(const Matrix<T>& A, const Matrix<T>& B);

struct QuadratureRule {
  RVector nodes;
  RVector weights;
};

/// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(index_t n, double a = -1.0, double b = 1.0);

double bessel_j0(double x);
double bessel_j1(double x);
/// x > 0.
double bessel_y0(double x);
/// x > 0.
double bessel_y1(double x);
/// J0(x) + i Y0(x) for x > 0.
cdouble hankel0_first_kind(double x);
/// J1(x) + i Y1(x) for x > 0.
cdouble hankel1_first_kind(double x);

/// Series/asymptotic switch point used by the Bessel routines.
inline constexpr double bessel_crossover = 15.0;

/// Entry access for matrices that are too large to store densely.
struct BlockSource {
  index_t n_rows = 0;
  index_t n_cols = 0;
  std::function<RMatrix(std::span<const index_t>, std::span<const index_t>)> block;

  RMatrix operator()(std::span<const index_t> r, std::span<const index_t> c) const {
    return block(r, c);
  }
  RMatrix range_block(index_t r0, index_t nr, index_t c0, index_t nc) const;

  static BlockSource dense(std::shared_ptr<const RMatrix> A);
  static BlockSource dense_ref(const RMatrix& A);
  static BlockSource from_entries(index_t n_rows, index_t n_cols,
                                  std::function<double(index_t, index_t)> entry);
};

std::vector<index_t> iota_indices(index_t begin, index_t end);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

} // namespace fds
