#include "fds/bench.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include "fds/bie2d.hpp"
#include "fds/bvp1d.hpp"
#include "fds/cluster_tree.hpp"
#include "fds/errors.hpp"
#include "fds/hbs.hpp"
#include "fds/hodlr.hpp"
#include "fds/sparse_nd.hpp"

namespace fds {

namespace {

double best_of_3(const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < 3; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

double rel_residual(std::span<const double> Ax, std::span<const double> b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num += (Ax[i] - b[i]) * (Ax[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

std::vector<double> random_rhs(index_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> b(static_cast<std::size_t>(n));
  for (double& v : b) v = g(rng);
  return b;
}

} // namespace

BenchTarget parse_bench_target(const std::string& s) {
  if (s == "hodlr-inv") return BenchTarget::hodlr_inv;
  if (s == "hbs-inv") return BenchTarget::hbs_inv;
  if (s == "nd-factor") return BenchTarget::nd_factor;
  if (s == "bie-solve") return BenchTarget::bie_solve;
  throw InvalidArgument("unknown bench target '" + s + "'");
}

std::string bench_target_name(BenchTarget t) {
  switch (t) {
  case BenchTarget::hodlr_inv: return "hodlr-inv";
  case BenchTarget::hbs_inv: return "hbs-inv";
  case BenchTarget::nd_factor: return "nd-factor";
  case BenchTarget::bie_solve: return "bie-solve";
  }
  return "";
}

index_t bench_size_cap(BenchTarget target) {
  switch (target) {
  case BenchTarget::hodlr_inv:
  case BenchTarget::hbs_inv: return 16384;
  case BenchTarget::nd_factor: return 512;
  case BenchTarget::bie_solve: return 8192;
  }
  return 0;
}

std::vector<double> source_matvec(const BlockSource& A, std::span<const double> x) {
  if (static_cast<index_t>(x.size()) != A.n_cols) throw DimensionError("source_matvec: size mismatch");
  std::vector<double> y(static_cast<std::size_t>(A.n_rows), 0.0);
  constexpr index_t panel = 256;
  for (index_t r0 = 0; r0 < A.n_rows; r0 += panel) {
    const index_t nr = std::min(panel, A.n_rows - r0);
    const RMatrix B = A.range_block(r0, nr, 0, A.n_cols);
    const auto part = matvec(B, x);
    for (index_t i = 0; i < nr; ++i) y[static_cast<std::size_t>(r0 + i)] = part[static_cast<std::size_t>(i)];
  }
  return y;
}

std::vector<BenchRow> scaling_bench(BenchTarget target, std::span<const index_t> sizes, double tol,
                                    std::uint64_t seed) {
  if (!(tol > 0) || tol >= 1) throw InvalidArgument("scaling_bench: tol must lie in (0, 1)");
  const index_t lo = target == BenchTarget::nd_factor ? 3 : 32;
  for (index_t n : sizes)
    if (n < lo || n > bench_size_cap(target))
      throw InvalidArgument("scaling_bench: size " + std::to_string(n) + " outside [" + std::to_string(lo) + ", " +
                            std::to_string(bench_size_cap(target)) + "]");
  std::vector<BenchRow> rows;
  for (index_t n : sizes) {
    BenchRow row;
    switch (target) {
    case BenchTarget::hodlr_inv: {
      const auto A = nystrom_source(model_problem(BvpCase::non_osc, n));
      const auto tree = ClusterTree::uniform(n, 32);
      HodlrInverseWoodbury inv;
      row.build_s = best_of_3([&] { inv = HodlrInverseWoodbury(compress_to_hodlr(A, tree, tol)); });
      const auto b = random_rhs(n, seed);
      std::vector<double> x;
      row.apply_s = best_of_3([&] { x = inv.apply(b); });
      row.N = n;
      row.stored_scalars = inv.storage().stored_scalars;
      row.residual = rel_residual(source_matvec(A, x), b);
      break;
    }
    case BenchTarget::hbs_inv: {
      const auto A = nystrom_source(model_problem(BvpCase::non_osc, n));
      const auto tree = ClusterTree::uniform(n, 32);
      HbsInverse inv;
      row.build_s = best_of_3([&] { inv = hbs_invert(compress_to_hbs(A, tree, tol)); });
      const auto b = random_rhs(n, seed);
      std::vector<double> x;
      row.apply_s = best_of_3([&] { x = inv.apply(b); });
      row.N = n;
      row.stored_scalars = inv.stored_scalars();
      row.residual = rel_residual(source_matvec(A, x), b);
      break;
    }
    case BenchTarget::nd_factor: {
      const auto S = assemble_stencil(2, n);
      const auto tree = nd_partition(2, n, std::min<index_t>(4, n));
      NdFactors F;
      row.build_s = best_of_3([&] { F = nd_factor(S, tree); });
      const auto b = random_rhs(S.size(), seed);
      std::vector<double> x;
      row.apply_s = best_of_3([&] { x = F.solve(b); });
      row.N = S.size();
      row.stored_scalars = F.stored_scalars();
      row.flops = F.flops();
      row.residual = rel_residual(S.A.apply(x), b);
      break;
    }
    case BenchTarget::bie_solve: {
      const auto c = make_ellipse(2.0, 1.0, n);
      const auto A = bie_source(c);
      const auto tree = ClusterTree::uniform(n, 32);
      HbsInverse inv;
      row.build_s = best_of_3([&] { inv = hbs_invert(compress_to_hbs(A, tree, tol, bie_proxy_sampler(c))); });
      const auto b = random_rhs(n, seed);
      std::vector<double> x;
      row.apply_s = best_of_3([&] { x = inv.apply(b); });
      row.N = n;
      row.stored_scalars = inv.stored_scalars();
      row.residual = rel_residual(source_matvec(A, x), b);
      break;
    }
    }
    rows.push_back(row);
  }
  return rows;
}

} // namespace fds
