#include <cmath>

#include "doctest.h"
#include "fds/hodlr.hpp"
#include "oracles.hpp"

using namespace fds;

namespace {

// I + G M on [0,1] with the trapezoidal weights, m(x) = 100(1+x)cos(x).
RMatrix ie_matrix(index_t n) {
  const double h = 1.0 / static_cast<double>(n + 1);
  RMatrix A(n, n);
  for (index_t i = 0; i < n; ++i) {
    const double x = h * static_cast<double>(i + 1);
    for (index_t j = 0; j < n; ++j) {
      const double y = h * static_cast<double>(j + 1);
      const double g = x >= y ? (1 - x) * y : x * (1 - y);
      A(i, j) = h * g * 100 * (1 + y) * std::cos(y) + (i == j ? 1.0 : 0.0);
    }
  }
  return A;
}

RMatrix spd_kernel(index_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = u(rng);
  std::sort(x.begin(), x.end());
  RMatrix A(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j)
      A(i, j) = std::exp(-std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)])) +
                (i == j ? static_cast<double>(n) * 0.01 : 0.0);
  return A;
}

double rel_residual(const HodlrMatrix& H, const std::vector<double>& y, const std::vector<double>& x) {
  const auto z = H.apply(std::span<const double>(y));
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (z[i] - x[i]) * (z[i] - x[i]);
    den += x[i] * x[i];
  }
  return std::sqrt(num / den);
}

} // namespace

TEST_CASE("identity compresses to rank-0 off-diagonals with identity leaves") {
  const auto tree = build_uniform_tree(64, 8);
  const auto H = compress_to_hodlr(RMatrix::identity(64), tree, 1e-12);
  CHECK(H.max_rank() == 0);
  for (index_t t : tree.leaves()) CHECK(oracle::max_abs_diff(H.leaf_diag[static_cast<std::size_t>(t)], RMatrix::identity(8)) == 0);
  const auto s = storage_report(H);
  CHECK(s.stored_scalars == 512);
  CHECK(s.max_rank == 0);
  const auto x = oracle::gaussian_vector(64, 11);
  CHECK(H.apply(std::span<const double>(x)) == x);
  const std::vector<double> zero(64, 0.0);
  CHECK(hodlr_matvec(H, zero) == zero);
}

TEST_CASE("1/(1+|i-j|) N=256 reconstructs to 1e-9 and matvec matches; seed 0x5eed0001") {
  const index_t n = 256;
  RMatrix A(n, n);
  for (index_t i = 0; i < n; ++i)
    for (index_t j = 0; j < n; ++j) A(i, j) = 1.0 / (1.0 + static_cast<double>(std::abs(i - j)));
  const auto H = compress_to_hodlr(A, build_uniform_tree(n, 16), 1e-10);
  CHECK(oracle::max_abs_diff(H.dense(), A) <= 1e-9 * A.norm_fro());
  CHECK((H.dense() - A).norm_fro() <= 1e-9 * A.norm_fro());
  CHECK(H.max_rank() < 32);
  MESSAGE("max off-diagonal rank " << H.max_rank());
  const auto x = oracle::gaussian_vector(n, 0x5eed0001);
  const auto y = H.apply(std::span<const double>(x));
  const auto yd = matvec(A, std::span<const double>(x));
  CHECK(oracle::rel_diff(y, yd) <= 1e-9);
}

TEST_CASE("I+GM at N=512 has rank-1 off-diagonal blocks at tol 1e-12") {
  const auto A = ie_matrix(512);
  const auto H = compress_to_hodlr(A, build_uniform_tree(512, 16), 1e-12);
  for (index_t t = 2; t <= H.tree.node_count(); ++t) CHECK(H.offdiag[static_cast<std::size_t>(t)].rank() == 1);
}

TEST_CASE("matvec length mismatch is a dimension error") {
  const auto H = compress_to_hodlr(RMatrix::identity(32), build_uniform_tree(32, 8), 1e-12);
  const std::vector<double> x(31, 1.0);
  CHECK_THROWS_AS(H.apply(std::span<const double>(x)), DimensionError);
}

TEST_CASE("Woodbury inverse of 2I halves the input; seed 0x5eed0002") {
  RMatrix A = RMatrix::identity(64);
  A *= 2.0;
  const auto inv = invert_woodbury(compress_to_hodlr(A, build_uniform_tree(64, 8), 1e-12));
  const auto x = oracle::gaussian_vector(64, 0x5eed0002);
  const auto y = inv.apply(std::span<const double>(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i] / 2).epsilon(1e-15));
}

TEST_CASE("both inverses of I+GM N=512 match the dense solve; seed 0x5eed0003") {
  const index_t n = 512;
  const auto A = ie_matrix(n);
  const auto H = compress_to_hodlr(A, build_uniform_tree(n, 16), 1e-12);
  const auto wood = invert_woodbury(H);
  const auto mult = invert_multiplicative(H);
  const DenseLU<double> lu(A);
  for (int r = 0; r < 5; ++r) {
    const auto b = oracle::gaussian_vector(n, 0x5eed0003 + static_cast<std::uint64_t>(r));
    const auto xd = lu.solve(std::span<const double>(b));
    CHECK(oracle::rel_diff(wood.apply(std::span<const double>(b)), xd) <= 1e-8);
    CHECK(oracle::rel_diff(mult.apply(std::span<const double>(b)), xd) <= 1e-8);
  }
}

TEST_CASE("recompressed Woodbury inverse stays accurate; seed 0x5eed0004") {
  const index_t n = 256;
  const auto A = spd_kernel(n, 0x5eed0004);
  const auto H = compress_to_hodlr(A, build_uniform_tree(n, 16), 1e-12);
  const auto plain = invert_woodbury(H);
  const auto rec = invert_woodbury(H, true);
  const auto b = oracle::gaussian_vector(n, 0x5eed0004);
  CHECK(oracle::rel_diff(rec.apply(std::span<const double>(b)), plain.apply(std::span<const double>(b))) <= 1e-9);
  CHECK(rec.node(1).recompressed);
}

TEST_CASE("singular leaf block names the leaf") {
  RMatrix A = RMatrix::identity(32);
  for (index_t i = 8; i < 16; ++i) A(i, i) = 0.0;
  const auto H = compress_to_hodlr(A, build_uniform_tree(32, 8), 1e-12);
  // Leaves are 4..7; rows 8..15 belong to leaf 5.
  try {
    invert_woodbury(H);
    FAIL("expected a singular error");
  } catch (const SingularMatrixError& e) {
    CHECK(std::string(e.what()).find("leaf block 5") != std::string::npos);
  }
  CHECK_THROWS_AS(invert_multiplicative(H), SingularMatrixError);
}

TEST_CASE("singular Woodbury core names the node") {
  // [[I, I], [I, I]] with identity leaves is singular as a whole.
  RMatrix A(4, 4);
  for (index_t i = 0; i < 4; ++i) {
    A(i, i) = 1.0;
    A(i, (i + 2) % 4) = 1.0;
  }
  const auto H = compress_to_hodlr(A, build_uniform_tree(4, 2), 1e-12);
  try {
    invert_woodbury(H);
    FAIL("expected a singular error");
  } catch (const SingularMatrixError& e) {
    CHECK(std::string(e.what()).find("node 1") != std::string::npos);
  }
  CHECK_THROWS_AS(invert_multiplicative(H), SingularMatrixError);
}

TEST_CASE("depth-3 tree gives four multiplicative factors with level block counts") {
  const auto tree = build_uniform_tree(128, 16);
  REQUIRE(tree.depth() == 3);
  const auto inv = invert_multiplicative(compress_to_hodlr(spd_kernel(128, 7), tree, 1e-12));
  CHECK(inv.factor_count() == 4);
  for (int l = 0; l <= 3; ++l) {
    CHECK(inv.factors()[static_cast<std::size_t>(l)].level == l);
    CHECK(inv.factors()[static_cast<std::size_t>(l)].blocks.size() == (std::size_t{1} << l));
  }
  CHECK(inv.rank_history().size() == 4);
}

TEST_CASE("diag(1..N) gives leaf inverses and rank-0 coarser factors") {
  const index_t n = 64;
  RMatrix A(n, n);
  for (index_t i = 0; i < n; ++i) A(i, i) = static_cast<double>(i + 1);
  const auto tree = build_uniform_tree(n, 8);
  const auto inv = invert_multiplicative(compress_to_hodlr(A, tree, 1e-12));
  for (int l = 0; l < tree.depth(); ++l)
    for (const auto& b : inv.factors()[static_cast<std::size_t>(l)].blocks) CHECK(b.update.rank() == 0);
  std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
  const auto y = inv.apply(std::span<const double>(ones));
  for (index_t i = 0; i < n; ++i) CHECK(y[static_cast<std::size_t>(i)] == doctest::Approx(1.0 / static_cast<double>(i + 1)).epsilon(1e-15));
}

TEST_CASE("multiplicative factors compose with the forward operator to identity; seed 0x5eed0005") {
  const index_t n = 256;
  const auto H = compress_to_hodlr(spd_kernel(n, 0x5eed0005), build_uniform_tree(n, 16), 1e-12);
  const auto inv = invert_multiplicative(H);
  for (int r = 0; r < 20; ++r) {
    const auto x = oracle::gaussian_vector(n, 0x5eed0005 + static_cast<std::uint64_t>(r));
    const auto Ax = H.apply(std::span<const double>(x));
    CHECK(oracle::rel_diff(inv.apply(std::span<const double>(Ax)), x) <= 1e-8);
  }
  for (std::size_t t = 2; t < inv.original_ranks().size(); ++t)
    CHECK(inv.original_ranks()[t] == H.offdiag[t].rank());
  for (index_t k : inv.rank_history()) CHECK(k <= H.max_rank());
}

TEST_CASE("property: inverse consistency over 20 vectors for several matrices; seed 0x5eed0006") {
  const double tol = 1e-10;
  std::vector<RMatrix> mats{ie_matrix(256), spd_kernel(200, 0x5eed0006), spd_kernel(333, 0x5eed0007)};
  for (const auto& A : mats) {
    const auto H = compress_to_hodlr(A, build_uniform_tree(A.rows(), 16), tol);
    const double cond = DenseLU<double>(A).condition_1norm(A);
    const auto wood = invert_woodbury(H);
    const auto mult = invert_multiplicative(H);
    for (int r = 0; r < 20; ++r) {
      const auto x = oracle::gaussian_vector(A.rows(), 0x5eed0006 + static_cast<std::uint64_t>(r));
      CHECK(rel_residual(H, wood.apply(std::span<const double>(x)), x) <= 1e3 * tol * cond);
      CHECK(rel_residual(H, mult.apply(std::span<const double>(x)), x) <= 1e3 * tol * cond);
    }
  }
}

TEST_CASE("storage grows as N log N at fixed rank; seed 0x5eed0008") {
  // Rank-3 smooth kernel plus identity: every off-diagonal block has rank 3.
  auto build = [](index_t n) {
    RMatrix A(n, n);
    for (index_t i = 0; i < n; ++i)
      for (index_t j = 0; j < n; ++j) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        const double y = static_cast<double>(j) / static_cast<double>(n);
        A(i, j) = 1 + x * y + x * x * y * y + (i == j ? 1.0 : 0.0);
      }
    return compress_to_hodlr(A, build_uniform_tree(n, 16), 1e-12);
  };
  for (index_t n : {256, 512, 1024}) {
    const auto a = build(n).storage();
    const auto b = build(2 * n).storage();
    const double ratio = static_cast<double>(b.stored_scalars) / static_cast<double>(a.stored_scalars);
    CHECK(a.max_rank == 3);
    CHECK(ratio >= 2.0);
    CHECK(ratio <= 2.5);
  }
}

TEST_CASE("storage report rank equals the max over stored factors") {
  const auto H = compress_to_hodlr(ie_matrix(128), build_uniform_tree(128, 16), 1e-12);
  index_t k = 0;
  for (const auto& f : H.offdiag) k = std::max(k, f.rank());
  CHECK(storage_report(H).max_rank == k);
  CHECK(storage_report(invert_multiplicative(H)).stored_scalars > 0);
  CHECK(storage_report(invert_woodbury(H)).stored_scalars > 0);
}

TEST_CASE("default leaf size rule") {
  CHECK(default_leaf_size(3) == 16);
  CHECK(default_leaf_size(20) == 40);
}
