#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fds/bench.hpp"
#include "fds/bie2d.hpp"
#include "fds/bvp1d.hpp"
#include "fds/cluster_tree.hpp"
#include "fds/hbs.hpp"
#include "fds/hodlr.hpp"
#include "fds/sparse_nd.hpp"
#include "fds/spectrum.hpp"
#include "oracles.hpp"

using namespace fds;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
    m = std::max(m, std::abs(b[i]));
  }
  return d / m;
}

// Slope and coefficient of determination of the least-squares line through (x, y).
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return {sxy / sxx, sxy * sxy / (sxx * syy)};
}

Outcome laplace_directional() {
  const auto s = spectrum_potential(PotentialKernel::laplace, 12, PotentialGeometry::directional);
  const index_t r = s.rank(1e-10);
  return {r == 17, "rank@1e-10=" + std::to_string(r) + " (target 17)"};
}

Outcome laplace_global() {
  const auto s = spectrum_potential(PotentialKernel::laplace, 12, PotentialGeometry::global);
  const index_t r = s.rank(1e-10);
  return {std::abs(r - 33) <= 1, "rank@1e-10=" + std::to_string(r) + " (target 33 +-1)"};
}

Outcome helmholtz_ladder() {
  const double kappas[] = {20, 40, 80, 160, 320};
  const index_t targets[] = {19, 24, 31, 45, 70};
  bool ok = true;
  std::string d;
  for (int i = 0; i < 5; ++i) {
    const auto s = spectrum_potential(PotentialKernel::helmholtz, 64, PotentialGeometry::directional, kappas[i]);
    const index_t r = s.rank(1e-10), knee = s.knee(0.1);
    const double ref = kappas[i] / (2 * pi);
    const bool rank_ok = std::abs(r - targets[i]) <= 2;
    const bool knee_ok = knee >= ref / 2 && knee <= 2 * ref;
    ok = ok && rank_ok && knee_ok;
    d += (i ? "; " : "") + std::string("kappa=") + str(kappas[i]) + " rank=" + std::to_string(r) + "/" +
         std::to_string(targets[i]) + " knee=" + std::to_string(knee) + " in [" + str(ref / 2) + "," + str(2 * ref) + "]";
  }
  return {ok, d};
}

Outcome conditioning() {
  std::vector<index_t> Ns{64, 128, 256, 512, 1024, 2048};
  const auto rows = condition_study(Ns, BvpCase::non_osc);
  std::vector<double> n, c;
  double lo = 1e300, hi = 0;
  for (const auto& r : rows) {
    n.push_back(static_cast<double>(r.N));
    c.push_back(r.cond_fd);
    lo = std::min(lo, r.cond_ie);
    hi = std::max(hi, r.cond_ie);
  }
  const double slope = loglog_slope(n, c);
  return {slope >= 1.9 && slope <= 2.1 && hi / lo < 2,
          "cond_fd slope=" + str(slope) + " in [1.9,2.1]; cond_ie max/min=" + str(hi / lo) + " < 2"};
}

Outcome fd_ie_equivalence() {
  const auto p = model_problem(BvpCase::non_osc, 512);
  const auto fd = solve_bvp_fd(p);
  const double e_h = max_rel(solve_bvp_ie(p, IeBackend::hodlr), fd);
  const double e_d = max_rel(solve_bvp_ie(p, IeBackend::dense), fd);
  return {e_h <= 1e-9 && e_d <= 1e-9, "max rel diff hodlr=" + str(e_h) + " dense=" + str(e_d) + " <= 1e-9"};
}

Outcome hodlr_inverses() {
  bool ok = true;
  std::string d;
  auto check = [&](const std::string& label, const BlockSource& A, index_t leaf, std::uint64_t seed) {
    const auto H = compress_to_hodlr(A, ClusterTree::uniform(A.n_rows, leaf), 1e-12);
    const auto wood = invert_woodbury(H);
    const auto mult = invert_multiplicative(H);
    double ew = 0, em = 0;
    for (int r = 0; r < 20; ++r) {
      const auto b = oracle::gaussian_vector(A.n_rows, seed + static_cast<std::uint64_t>(r));
      ew = std::max(ew, oracle::rel_diff(source_matvec(A, wood.apply(std::span<const double>(b))), b));
      em = std::max(em, oracle::rel_diff(source_matvec(A, mult.apply(std::span<const double>(b))), b));
    }
    index_t worst = 0;
    for (index_t k : mult.rank_history()) worst = std::max(worst, k);
    const bool ranks_ok = worst <= H.max_rank();
    ok = ok && ew <= 1e-8 && em <= 1e-8 && ranks_ok;
    d += (d.empty() ? "" : "; ") + label + ": woodbury " + str(ew) + ", multiplicative " + str(em) +
         ", max swept rank " + std::to_string(worst) + " <= " + std::to_string(H.max_rank());
  };
  check("1D IE N=512", nystrom_source(model_problem(BvpCase::non_osc, 512)), 16, 0x5eed0801);
  check("ellipse BIE N=1024", bie_source(make_ellipse(2.0, 1.0, 1024)), 64, 0x5eed0802);
  return {ok, d};
}

RMatrix random_block_diag(index_t n, index_t nb, std::uint64_t seed) {
  RMatrix D(n, n);
  const RMatrix R = oracle::gaussian(n, n, seed);
  for (index_t b = 0; b < n; b += nb)
    for (index_t i = b; i < std::min(n, b + nb); ++i) {
      for (index_t j = b; j < std::min(n, b + nb); ++j) D(i, j) = 0.3 * R(i, j);
      D(i, i) += 3.0;
    }
  return D;
}

Outcome hbs_correctness() {
  std::mt19937_64 rng(0x5eed0803);
  std::uniform_int_distribution<int> nd(2, 12);
  double lemma = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const index_t n = nd(rng);
    const index_t k = std::uniform_int_distribution<index_t>(1, std::min<index_t>(4, n - 1))(rng);
    const std::uint64_t s = rng();
    const RMatrix D = random_block_diag(n, std::max<index_t>(1, n / 3), s);
    const RMatrix U = oracle::gaussian(n, k, s + 1), V = oracle::gaussian(n, k, s + 2);
    RMatrix At = oracle::gaussian(k, k, s + 3);
    At *= 0.2;
    RMatrix A = matmul_adj_right(matmul(U, At), V);
    A += D;
    RMatrix P = matmul(A, woodbury_variant_inverse(woodbury_variant(D, U, V), At));
    P -= RMatrix::identity(n);
    lemma = std::max(lemma, P.norm_max());
  }

  const auto src = nystrom_source(model_problem(BvpCase::non_osc, 1024));
  const auto H = compress_to_hbs(src, ClusterTree::uniform(1024, 32), 1e-12);
  const auto inv = hbs_invert(H);
  double comp = 0;
  for (int r = 0; r < 20; ++r) {
    const auto u = oracle::gaussian_vector(1024, 0x5eed0804 + static_cast<std::uint64_t>(r));
    comp = std::max(comp, oracle::rel_diff(hbs_matvec(H, hbs_apply_inverse(inv, u)), u));
  }

  const auto H2 = compress_to_hbs(nystrom_source(model_problem(BvpCase::non_osc, 128)), ClusterTree::uniform(128, 32), 1e-13);
  const auto B = hbs_to_block_separable(H2);
  const RMatrix flat = woodbury_variant_inverse(woodbury_variant(B.dense_D(), B.dense_U(), B.dense_V()), B.Atilde);
  const double two = oracle::max_abs_diff(hbs_invert(H2).dense(), flat) / flat.norm_max();

  return {lemma <= 1e-12 && comp <= 1e-8 && two <= 1e-11 && H2.tree.depth() == 2,
          "lemma worst " + str(lemma) + " <= 1e-12; N=1024 composition " + str(comp) + " <= 1e-8; flat vs 2-level " +
              str(two) + " <= 1e-11"};
}

Outcome storage_laws() {
  std::vector<index_t> Ns{512, 1024, 2048, 4096, 8192};
  std::vector<double> n, sh, sb;
  for (index_t N : Ns) {
    const auto A = nystrom_source(model_problem(BvpCase::non_osc, N));
    const auto tree = ClusterTree::uniform(N, 32);
    n.push_back(static_cast<double>(N));
    sh.push_back(static_cast<double>(invert_woodbury(compress_to_hodlr(A, tree, 1e-10)).storage().stored_scalars));
    sb.push_back(static_cast<double>(hbs_invert(compress_to_hbs(A, tree, 1e-10)).stored_scalars()));
  }
  const double eh = loglog_slope(n, sh), eb = loglog_slope(n, sb);
  const bool log_factor = sh.back() / n.back() > sh.front() / n.front();
  return {eb >= 0.95 && eb <= 1.1 && eh >= 1.0 && eh <= 1.25 && log_factor,
          "HBS inverse exponent " + str(eb) + " in [0.95,1.1]; HODLR inverse exponent " + str(eh) +
              " in [1.0,1.25]; HODLR scalars/N " + str(sh.front() / n.front()) + " -> " + str(sh.back() / n.back())};
}

double point_charge_error(const Curve& c) {
  const Point2 y0{3.0, 2.0};
  std::vector<double> f(static_cast<std::size_t>(c.N));
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = laplace_potential(c.x[j], y0);
  const auto sigma = solve_interior_dirichlet(c, f, BieBackend::dense);
  std::vector<Point2> targets;
  for (double s : {0.0, 0.3, 0.6})
    for (int k = 0; k < (s == 0 ? 1 : 12); ++k) {
      const double t = 2 * pi * k / 12.0 + s;
      targets.push_back({2 * s * std::cos(t), s * std::sin(t)});
    }
  const auto u = eval_double_layer(c, sigma, targets);
  double e = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double ex = laplace_potential(targets[k], y0);
    e = std::max(e, std::abs(u.u[k] - ex) / std::abs(ex));
  }
  return e;
}

Outcome bie_accuracy() {
  const double e400 = point_charge_error(make_ellipse(2.0, 1.0, 400));
  bool conv = true;
  double prev = -1;
  std::string seq;
  for (index_t n : {16, 32, 64, 128, 256, 512}) {
    const double e = point_charge_error(make_ellipse(2.0, 1.0, n));
    if (prev > 1e-12 && e > prev / 10) conv = false;
    seq += (seq.empty() ? "" : ",") + str(e);
    prev = e;
  }
  const auto c = make_ellipse(2.0, 1.0, 256);
  const std::vector<double> one(256, 1.0);
  const auto r = matvec(assemble_bie(c, one).matrix, std::span<const double>(one));
  double g = 0;
  for (double v : r) g = std::max(g, std::abs(v + 1));
  return {e400 <= 1e-10 && conv && g <= 1e-10, "N=400 max rel err " + str(e400) + " <= 1e-10; N=16..512 errors " + seq +
                                                   "; Gauss identity defect " + str(g) + " <= 1e-10"};
}

Outcome nested_dissection() {
  const auto S = assemble_stencil(2, 16);
  const auto F = nd_factor(S, nd_partition(2, 16, 4));
  const RMatrix B = oracle::gaussian(S.size(), 10, 0x5eed0805);
  const RMatrix X = dense_lu_solve(S.A.dense(), B);
  double dense = 0;
  for (index_t c = 0; c < 10; ++c) dense = std::max(dense, max_rel(nd_solve(F, B.col(c)), X.col(c)));

  std::vector<double> N, fl;
  for (index_t n : {32, 64, 128}) {
    const auto Sn = assemble_stencil(2, n);
    N.push_back(static_cast<double>(Sn.size()));
    fl.push_back(nd_factor(Sn, nd_partition(2, n, 4)).flops());
  }
  const double slope = loglog_slope(N, fl);

  auto err = [](index_t n) {
    const auto Sn = assemble_stencil(2, n);
    std::vector<double> b(static_cast<std::size_t>(Sn.size())), u(b.size());
    for (index_t i = 0; i < Sn.size(); ++i) {
      const auto p = Sn.point(i);
      const auto k = static_cast<std::size_t>(i);
      u[k] = std::sin(pi * Sn.h * static_cast<double>(p[0] + 1)) * std::sin(pi * Sn.h * static_cast<double>(p[1] + 1));
      b[k] = 2 * pi * pi * u[k];
    }
    const auto x = nd_factor(Sn, nd_partition(2, n, 8)).solve(b);
    double e = 0;
    for (std::size_t i = 0; i < x.size(); ++i) e = std::max(e, std::abs(x[i] - u[i]));
    return e;
  };
  const double e1 = err(15), e2 = err(31), e3 = err(63);
  const double r1 = e1 / e2, r2 = e2 / e3;
  const bool ratios = std::abs(r1 - 4) <= 0.4 && std::abs(r2 - 4) <= 0.4;
  return {dense <= 1e-11 && slope >= 1.4 && slope <= 1.65 && ratios,
          "n=16 vs dense " + str(dense) + " <= 1e-11; flop exponent " + str(slope) + " in [1.4,1.65]; error ratios " +
              str(r1) + ", " + str(r2) + " in 4+-0.4"};
}

Outcome schur_spectra() {
  const auto l128 = schur_offdiag_spectrum(2, 128, SchurOperator::laplace);
  const auto l256 = schur_offdiag_spectrum(2, 256, SchurOperator::laplace);
  const bool lap = l128.rank(1e-10) <= 30 && l256.rank(1e-10) - l128.rank(1e-10) <= 5;

  const auto h = schur_offdiag_spectrum(2, 256, SchurOperator::helmholtz, 2 * pi * 10);
  const index_t plateau = h.knee(0.1);
  const bool helm = plateau > 15 && h.rank(1e-10) < static_cast<index_t>(h.sigmas.size());

  const auto s3 = schur_offdiag_spectrum(3, 24, SchurOperator::laplace);
  const index_t r3 = s3.rank(1e-10);
  std::vector<double> j, ls;
  for (index_t i = 0; i < r3; ++i) {
    j.push_back(static_cast<double>(i));
    ls.push_back(std::log(s3.sigmas[static_cast<std::size_t>(i)]));
  }
  const auto [decay, r2] = linear_fit(j, ls);
  const bool expo = r3 < static_cast<index_t>(s3.sigmas.size()) && decay < 0 && r2 >= 0.9;
  const bool three = r3 >= 3 * l256.rank(1e-10);

  return {lap && helm && expo && three,
          "Laplace rank@1e-10 n=128 " + std::to_string(l128.rank(1e-10)) + " <= 30, n=256 " +
              std::to_string(l256.rank(1e-10)) + " (growth <= 5) [" + (lap ? "ok" : "fail") +
              "]; Helmholtz 10 wavelengths n=256 plateau ends at j=" + std::to_string(plateau) + ", needs > 15 [" +
              (helm ? "ok" : "fail") + "]; 3D n=24 rank " + std::to_string(r3) + " of " +
              std::to_string(s3.sigmas.size()) + ", log-linear R^2 " + str(r2) + " [" + (expo ? "ok" : "fail") +
              "], >= 3 x 2D n=256 rank " + std::to_string(l256.rank(1e-10)) + " [" + (three ? "ok" : "fail") + "]"};
}

Outcome admissibility() {
  const auto [w100, s100] = weak_vs_strong_spectrum(6, 100, 0x5eed0601);
  const auto [w400, s400] = weak_vs_strong_spectrum(6, 400, 0x5eed0601);
  const index_t a = w100.rank(1e-10), b = s100.rank(1e-10), c = w400.rank(1e-10), d = s400.rank(1e-10);
  const double ratio = static_cast<double>(c) / static_cast<double>(a);
  return {b < a && std::abs(d - b) <= 3 && ratio >= 1.6 && ratio <= 2.6,
          "m=100 weak " + std::to_string(a) + " strong " + std::to_string(b) + "; m=400 weak " + std::to_string(c) +
              " strong " + std::to_string(d) + "; weak ratio " + str(ratio) + " in [1.6,2.6]"};
}

Outcome multipole() {
  std::vector<Point2> src, trg;
  std::vector<double> q;
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b) {
      src.push_back({-0.5 + a / 10.0, -0.5 + b / 10.0});
      q.push_back(((a + 2 * b) % 3) - 1.0);
      trg.push_back({1.5 + a / 10.0, -0.5 + b / 10.0});
    }
  const auto d = direct_log_potential(src, q, trg);
  std::vector<double> ps, es;
  for (int p = 4; p <= 24; ++p) {
    const auto u = multipole_approx(src, q, trg, {0.0, 0.0}, p);
    double e = 0;
    for (std::size_t k = 0; k < trg.size(); ++k) e = std::max(e, std::abs(u[k] - d[k]));
    ps.push_back(p);
    es.push_back(std::log(e));
  }
  const double ratio = std::exp(linear_fit(ps, es).first);
  return {ratio >= 0.40 && ratio <= 0.55, "fitted per-term ratio " + str(ratio) + " in [0.40,0.55], orders 4..24"};
}

Outcome proxy_compression() {
  const index_t N = 1024;
  const auto c = make_starfish(0.3, 5, N);
  const auto A = bie_source(c);
  const index_t sizes[] = {32, 48, 64, 96, 128};
  const double tol = 1e-10;
  index_t worst_gap = -1000;
  double worst_err = 0;
  bool ok = true;
  for (int p = 0; p < 20; ++p) {
    const index_t start = p * 51, len = sizes[p % 5];
    std::vector<index_t> source;
    for (index_t i = 0; i < len; ++i) source.push_back((start + i) % N);
    const auto proxy = default_proxy(c, source, 64);
    std::vector<index_t> far;
    for (index_t j = 0; j < N; ++j) {
      const auto& x = c.x[static_cast<std::size_t>(j)];
      if (std::hypot(x[0] - proxy.center[0], x[1] - proxy.center[1]) > proxy.radius) far.push_back(j);
    }
    if (far.empty()) {
      ok = false;
      continue;
    }
    const auto F = proxy_compress_block(c, source, far, proxy, tol);
    const RMatrix B = A(far, source);
    const auto s = singular_values(B);
    RMatrix E = F.dense();
    E -= B;
    const double err = singular_values(E)[0] / s[0];
    const index_t gap = F.rank() - eps_rank(s, tol);
    worst_gap = std::max(worst_gap, gap);
    worst_err = std::max(worst_err, err);
    ok = ok && gap <= 3 && err <= 50 * tol;
  }
  return {ok, "20 panels of 32..128 nodes: worst rank excess " + std::to_string(worst_gap) +
                  " <= 3; worst relative block error " + str(worst_err) + " <= 5e-09"};
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "Laplace directional rank", 1, laplace_directional},
      {2, "Laplace global rank", 5, laplace_global},
      {3, "Helmholtz rank ladder", 300, helmholtz_ladder},
      {4, "Conditioning study", 120, conditioning},
      {5, "FD/IE equivalence", 10, fd_ie_equivalence},
      {6, "HODLR inverse oracles", 60, hodlr_inverses},
      {7, "HBS correctness", 120, hbs_correctness},
      {8, "Storage laws", 120, storage_laws},
      {9, "BIE accuracy", 30, bie_accuracy},
      {10, "Nested dissection", 120, nested_dissection},
      {11, "Schur spectra", 600, schur_spectra},
      {12, "Weak vs strong admissibility", 60, admissibility},
      {13, "Multipole bound", 5, multipole},
      {14, "Proxy compression", 30, proxy_compression},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = t <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s [%d] %s: %s; %.2fs (budget %gs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), t,
                c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
