#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fds/linalg.hpp"

namespace fds {

enum class BenchTarget { hodlr_inv, hbs_inv, nd_factor, bie_solve };

/// Parses "hodlr-inv", "hbs-inv", "nd-factor" or "bie-solve".
BenchTarget parse_bench_target(const std::string& s);
std::string bench_target_name(BenchTarget t);

struct BenchRow {
  index_t N = 0;
  double build_s = 0, apply_s = 0;
  index_t stored_scalars = 0;
  double residual = 0;
  double flops = 0; // nd-factor only
};

/// Best-of-3 wall clock for the build and one solve, storage of the built solver and
/// ||A x - b|| / ||b|| against the exact operator.
/// hodlr-inv / hbs-inv: the 1D Nystrom matrix I + G M of the non-oscillatory model problem, size N.
/// nd-factor: the 2D Laplace stencil with n points per side (N = n^2). bie-solve: ellipse(2, 1)
/// with N nodes through the HBS backend.
std::vector<BenchRow> scaling_bench(BenchTarget target, std::span<const index_t> sizes, double tol,
                                    std::uint64_t seed = 0x5eed0701);

/// Largest size accepted per target.
index_t bench_size_cap(BenchTarget target);

/// A x computed in row panels from the entry source.
std::vector<double> source_matvec(const BlockSource& A, std::span<const double> x);

} // namespace fds
