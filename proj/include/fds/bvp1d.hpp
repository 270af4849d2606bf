#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fds/linalg.hpp"

namespace fds {

/// -u'' + m u = g on (a, b), u(a) = fa, u(b) = fb, sampled at N interior nodes.
struct Bvp1dProblem {
  double a = 0, b = 1;
  index_t N = 0;
  std::vector<double> m, g; // samples at x_1..x_N
  double fa = 0, fb = 0;

  double h() const { return (b - a) / static_cast<double>(N + 1); }
  /// Grid node x_i, i = 0..N+1.
  double x(index_t i) const { return a + static_cast<double>(i) * h(); }

  static Bvp1dProblem sample(double a, double b, index_t N, const std::function<double(double)>& m,
                             const std::function<double(double)>& g, double fa = 0, double fb = 0);
};

struct TridiagonalMatrix {
  std::vector<double> sub, diag, super;

  index_t size() const { return static_cast<index_t>(diag.size()); }
  RMatrix dense() const;
  std::vector<double> apply(std::span<const double> x) const;
};

struct FdSystem {
  TridiagonalMatrix T;
  std::vector<double> rhs;
};

FdSystem assemble_fd(const Bvp1dProblem& p);

/// Plain elimination when T is diagonally dominant, partial pivoting otherwise.
std::vector<double> solve_tridiag(const TridiagonalMatrix& T, std::span<const double> rhs);

std::vector<double> solve_bvp_fd(const Bvp1dProblem& p);

/// Largest 2x2 minor inside either strict triangle, over ||B||_max^2. O(N^4).
double semiseparable_check(const RMatrix& B);

double green_1d(double x, double y, double a, double b);

struct NystromSystem {
  RMatrix system; // I + G M
  std::vector<double> rhs; // G g
};

/// G(i, j) = h G(x_i, x_j).
RMatrix green_matrix(const Bvp1dProblem& p);
NystromSystem assemble_nystrom(const Bvp1dProblem& p);
/// Entries of I + G M without forming the matrix.
BlockSource nystrom_source(const Bvp1dProblem& p);

enum class IeBackend { dense, hodlr };

/// Solves through the linear lift w and the zero-boundary integral equation for v = u - w.
std::vector<double> solve_bvp_ie(const Bvp1dProblem& p, IeBackend backend = IeBackend::hodlr);

enum class BvpCase { non_osc, osc };

/// m = +-100(1+x)cos(x), g = 1 + cos(1+x) on [0, 1] with zero boundary data.
Bvp1dProblem model_problem(BvpCase c, index_t N);

/// Ratio of extreme singular values of the symmetric tridiagonal T.
double tridiagonal_condition(const TridiagonalMatrix& T);

struct ConditionRow {
  index_t N = 0;
  double cond_fd = 0, cond_ie = 0, err_fd = 0, err_ie = 0;
};

/// Errors are max-norm against the FD solution on the grid with 4 (N_max + 1) - 1 nodes,
/// linearly interpolated.
std::vector<ConditionRow> condition_study(std::span<const index_t> Ns, BvpCase c);

} // namespace fds
