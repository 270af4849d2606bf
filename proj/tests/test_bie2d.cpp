#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/ellint_2.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fds/bie2d.hpp"
#include "oracles.hpp"

using namespace fds;

namespace {

constexpr double pi = std::numbers::pi;

// Double layer of the unit density on the ellipse (2 cos t, sin t), integrated by adaptive Gauss-Kronrod.
double ellipse_dlp_of_one(double x, double y, double t0) {
  auto f = [&](double t) {
    const double gx = 2 * std::cos(t), gy = std::sin(t);
    const double nx = std::cos(t), ny = 2 * std::sin(t); // normal times speed
    const double dx = x - gx, dy = y - gy;
    return (dx * nx + dy * ny) / (2 * pi * (dx * dx + dy * dy));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, t0, t0 + 2 * pi, 15, 1e-14);
}

// Same integral for x = (2 cos t0, sin t0) on the curve, with the removable singularity cancelled analytically.
double ellipse_dlp_of_one_on_curve(double t0) {
  auto f = [&](double t) {
    const double m = 0.5 * (t + t0);
    return -1.0 / (2 * pi * (4 * std::sin(m) * std::sin(m) + std::cos(m) * std::cos(m)));
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, t0, t0 + 2 * pi, 15, 1e-14);
}

std::vector<Point2> ellipse_targets() {
  std::vector<Point2> p;
  for (double s : {0.0, 0.3, 0.6})
    for (int k = 0; k < (s == 0 ? 1 : 12); ++k) {
      const double t = 2 * pi * k / 12.0 + s;
      p.push_back({2 * s * std::cos(t), s * std::sin(t)});
    }
  return p;
}

double point_charge_error(const Curve& c, BieBackend backend, double tol = 1e-12) {
  const Point2 y0{3.0, 2.0};
  std::vector<double> f(static_cast<std::size_t>(c.N));
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = laplace_potential(c.x[j], y0);
  const auto sigma = solve_interior_dirichlet(c, f, backend, tol);
  const auto targets = ellipse_targets();
  const auto u = eval_double_layer(c, sigma, targets);
  double e = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double ex = laplace_potential(targets[k], y0);
    e = std::max(e, std::abs(u.u[k] - ex) / std::abs(ex));
  }
  return e;
}

std::vector<double> point_charge_data(const Curve& c, const Point2& y0) {
  std::vector<double> f(static_cast<std::size_t>(c.N));
  for (std::size_t j = 0; j < f.size(); ++j) f[j] = laplace_potential(c.x[j], y0);
  return f;
}

} // namespace

TEST_CASE("unit circle geometry is exact") {
  for (index_t n : {16, 100, 1024}) {
    const auto c = make_circle(1.0, n);
    for (index_t j = 0; j < n; ++j) {
      CHECK(c.curvature[static_cast<std::size_t>(j)] == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(c.speed[static_cast<std::size_t>(j)] == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(std::abs(c.length() - 2 * pi) <= 1e-13);
  }
}

TEST_CASE("ellipse length matches the complete elliptic integral perimeter") {
  const auto c = make_ellipse(2.0, 1.0, 256);
  const double perimeter = 4 * 2.0 * boost::math::ellint_2(std::sqrt(1 - 0.25));
  CHECK(std::abs(c.length() - perimeter) <= 1e-12 * perimeter);
}

TEST_CASE("starfish normals are unit and orthogonal to the tangent") {
  const auto c = make_starfish(0.3, 5, 512);
  for (std::size_t j = 0; j < 512; ++j) {
    const auto& n = c.normal[j];
    CHECK(std::abs(std::hypot(n[0], n[1]) - 1) <= 1e-14);
    const double t = c.t[j], r = 1 + 0.3 * std::cos(5 * t), dr = -1.5 * std::sin(5 * t);
    const double tx = dr * std::cos(t) - r * std::sin(t), ty = dr * std::sin(t) + r * std::cos(t);
    CHECK(std::abs(n[0] * tx + n[1] * ty) <= 1e-13);
  }
}

TEST_CASE("make_curve rejects bad sizes and shapes") {
  CHECK_THROWS_AS(make_circle(1.0, 15), InvalidArgument);
  CHECK_THROWS_AS(make_circle(1.0, 14), InvalidArgument);
  CHECK_THROWS_AS(make_circle(-1.0, 32), InvalidArgument);
  CHECK_THROWS_AS(make_ellipse(1.0, 0.0, 32), InvalidArgument);
  CHECK_THROWS_AS(make_starfish(1.0, 5, 32), InvalidArgument);
}

TEST_CASE("double-layer kernel: circle constant, radial value, tangent reflection") {
  const auto c = make_circle(1.0, 64);
  for (std::size_t i = 0; i < 64; i += 7)
    for (std::size_t j = 0; j < 64; ++j)
      if (i != j) CHECK(std::abs(dlp_kernel(c.x[i], c.x[j], c.normal[j]) + 1 / (4 * pi)) <= 1e-14);
  const Point2 y{0.4, -0.2}, n{0.6, 0.8};
  for (double rho : {0.01, 1.0, 7.5}) {
    const Point2 x{y[0] + rho * n[0], y[1] + rho * n[1]};
    CHECK(dlp_kernel(x, y, n) == doctest::Approx(1 / (2 * pi * rho)).epsilon(1e-14));
    const Point2 xr{y[0] - rho * n[0] + 0.3 * n[1], y[1] - rho * n[1] - 0.3 * n[0]};
    const Point2 xf{y[0] + rho * n[0] + 0.3 * n[1], y[1] + rho * n[1] - 0.3 * n[0]};
    CHECK(dlp_kernel(xr, y, n) == doctest::Approx(-dlp_kernel(xf, y, n)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(dlp_kernel(y, y, n), InvalidArgument);
}

TEST_CASE("diagonal limit sign agrees with the kernel approached along the curve") {
  for (const auto& s : {CurveSpec{CurveKind::ellipse, 2.0, 1.0, 0}, CurveSpec{CurveKind::starfish, 0.3, 1.0, 5}}) {
    const auto c = make_curve(s, 64);
    const auto fine = make_curve(s, 64 * 4096);
    for (std::size_t i = 0; i < 64; i += 9) {
      const std::size_t k = i * 4096;
      const double near = dlp_kernel(fine.x[k], fine.x[k + 1], fine.normal[k + 1]);
      CHECK(std::abs(near - dlp_diagonal_limit(c.curvature[i])) <= 1e-3 * std::abs(dlp_diagonal_limit(c.curvature[i])));
    }
  }
  CHECK(dlp_diagonal_limit(1.0) == doctest::Approx(-1 / (4 * pi)));
}

TEST_CASE("Gauss identity: adaptive-quadrature oracle and the assembled system at N=256") {
  // oracle constants: interior double layer of 1 is -1, on-curve principal value is -1/2
  CHECK(std::abs(ellipse_dlp_of_one(0.3, 0.2, 0.0) + 1) <= 1e-12);
  CHECK(std::abs(ellipse_dlp_of_one(-1.5, 0.1, 0.0) + 1) <= 1e-12);
  const double t0 = 0.7;
  CHECK(std::abs(ellipse_dlp_of_one_on_curve(t0) + 0.5) <= 1e-12);
  const auto c = make_ellipse(2.0, 1.0, 256);
  const std::vector<double> one(256, 1.0);
  const auto s = assemble_bie(c, one);
  const double gauss = -0.5 + ellipse_dlp_of_one_on_curve(c.t[37]);
  const auto r = matvec(s.matrix, std::span<const double>(one));
  for (double v : r) CHECK(std::abs(v - gauss) <= 1e-10);
  CHECK(std::abs(gauss + 1) <= 1e-12);
}

TEST_CASE("unit circle system entries are constant off the diagonal") {
  const auto c = make_circle(1.0, 40);
  const auto A = assemble_bie(c, std::vector<double>(40, 0.0)).matrix;
  const double w = 2 * pi / 40;
  for (index_t i = 0; i < 40; ++i)
    for (index_t j = 0; j < 40; ++j) {
      const double expect = i == j ? -0.5 - w / (4 * pi) : -w / (4 * pi);
      CHECK(std::abs(A(i, j) - expect) <= 1e-15);
    }
}

TEST_CASE("zero data gives zero density") {
  const auto c = make_ellipse(2.0, 1.0, 128);
  for (auto b : {BieBackend::dense, BieBackend::hodlr, BieBackend::hbs}) {
    const auto s = solve_interior_dirichlet(c, std::vector<double>(128, 0.0), b);
    for (double v : s) CHECK(v == 0.0);
  }
}

TEST_CASE("point-charge test on ellipse(2,1) at N=400 and dense residual") {
  const auto c = make_ellipse(2.0, 1.0, 400);
  CHECK(point_charge_error(c, BieBackend::dense) <= 1e-10);
  const auto f = point_charge_data(c, {3.0, 2.0});
  const auto sigma = solve_interior_dirichlet(c, f, BieBackend::dense);
  const auto A = assemble_bie(c, f).matrix;
  const auto r = matvec(A, std::span<const double>(sigma));
  CHECK(oracle::rel_diff(r, f) <= 1e-10);
}

TEST_CASE("point-charge error drops 10x per doubling until 1e-12") {
  for (const auto& s : {CurveSpec{CurveKind::circle, 1.5, 1.5, 0}, CurveSpec{CurveKind::ellipse, 2.0, 1.0, 0}}) {
    double prev = -1;
    for (index_t n : {16, 32, 64, 128, 256, 512}) {
      const double e = point_charge_error(make_curve(s, n), BieBackend::dense);
      if (prev > 1e-12) CHECK(e <= prev / 10);
      prev = e;
    }
    CHECK(prev <= 1e-12);
  }
}

TEST_CASE("unit density evaluates to -1 inside at N=512") {
  const auto c = make_ellipse(2.0, 1.0, 512);
  const auto u = eval_double_layer(c, std::vector<double>(512, 1.0), ellipse_targets());
  for (std::size_t k = 0; k < u.u.size(); ++k) {
    CHECK(std::abs(u.u[k] + 1) <= 1e-10);
    CHECK_FALSE(u.too_close[k]);
  }
}

TEST_CASE("cos(t) density at the circle center against a refined trapezoid rule") {
  const auto c = make_circle(1.0, 256);
  std::vector<double> sigma(256);
  for (std::size_t j = 0; j < 256; ++j) sigma[j] = std::cos(c.t[j]);
  const Point2 o{0.0, 0.0};
  const double u = eval_double_layer(c, sigma, std::span<const Point2>(&o, 1)).u[0];
  const index_t M = 1000000;
  double ref = 0;
  for (index_t j = 0; j < M; ++j) {
    const double t = 2 * pi * static_cast<double>(j) / static_cast<double>(M);
    const Point2 y{std::cos(t), std::sin(t)};
    ref += (2 * pi / static_cast<double>(M)) * dlp_kernel(o, y, y) * std::cos(t);
  }
  CHECK(std::abs(u - ref) <= 1e-12);
}

TEST_CASE("targets near the curve are flagged") {
  const auto c = make_circle(1.0, 64);
  const std::vector<Point2> t{{0.0, 0.0}, {0.99, 0.0}, {0.3, 0.3}};
  const auto u = eval_double_layer(c, std::vector<double>(64, 1.0), t);
  CHECK_FALSE(u.too_close[0]);
  CHECK(u.too_close[1]);
  CHECK_FALSE(u.too_close[2]);
}

TEST_CASE("structured backends agree with dense; seed 0x5eed0401") {
  const auto c = make_starfish(0.3, 5, 1024);
  const auto f = oracle::gaussian_vector(1024, 0x5eed0401);
  const auto sd = solve_interior_dirichlet(c, f, BieBackend::dense);
  for (double tol : {1e-8, 1e-11}) {
    CHECK(oracle::rel_diff(solve_interior_dirichlet(c, f, BieBackend::hodlr, tol), sd) <= 10 * tol);
    CHECK(oracle::rel_diff(solve_interior_dirichlet(c, f, BieBackend::hbs, tol), sd) <= 10 * tol);
  }
  const auto e = make_ellipse(2.0, 1.0, 512);
  CHECK(point_charge_error(e, BieBackend::hodlr) <= 1e-10);
  CHECK(point_charge_error(e, BieBackend::hbs) <= 1e-10);
}

TEST_CASE("hbs backend at N=2048, tol 1e-10 matches dense to 1e-8") {
  const auto c = make_starfish(0.3, 5, 2048);
  const auto f = point_charge_data(c, {2.0, 1.5});
  const auto sd = solve_interior_dirichlet(c, f, BieBackend::dense);
  CHECK(oracle::rel_diff(solve_interior_dirichlet(c, f, BieBackend::hbs, 1e-10), sd) <= 1e-8);
}

TEST_CASE("proxy compression of a 64-node starfish panel") {
  const auto c = make_starfish(0.3, 5, 1024);
  const auto source = iota_indices(100, 164);
  const auto proxy = default_proxy(c, source, 64);
  std::vector<index_t> far;
  for (index_t j = 0; j < 1024; ++j) {
    const auto& x = c.x[static_cast<std::size_t>(j)];
    if (std::hypot(x[0] - proxy.center[0], x[1] - proxy.center[1]) > proxy.radius) far.push_back(j);
  }
  const auto F = proxy_compress_block(c, source, far, proxy, 1e-10);
  const RMatrix B = bie_source(c)(far, source);
  const auto s = singular_values(B);
  CHECK(F.rank() <= eps_rank(s, 1e-10) + 3);
  RMatrix E = F.dense();
  E -= B;
  CHECK(singular_values(E)[0] <= 50 * 1e-10 * s[0]);
  CHECK(proxy_compress_block(c, source, {}, proxy, 1e-10).rank() == 0);
  ProxyCircle small = proxy;
  small.radius *= 0.5;
  CHECK_THROWS_AS(proxy_compress_block(c, source, far, small, 1e-10), PreconditionError);
  std::vector<index_t> bad = far;
  bad.push_back(170);
  CHECK_THROWS_AS(proxy_compress_block(c, source, bad, proxy, 1e-10), PreconditionError);
}

TEST_CASE("multipole: monopole exact, high order accurate, separation enforced; seed 0x5eed0402") {
  const std::vector<Point2> one{{0.0, 0.0}};
  const std::vector<double> q1{1.0};
  const std::vector<Point2> tg{{2.0, 0.3}, {-1.7, 1.9}};
  for (int p : {1, 5}) {
    const auto u = multipole_approx(one, q1, tg, {0.0, 0.0}, p);
    const auto d = direct_log_potential(one, q1, tg);
    for (std::size_t k = 0; k < tg.size(); ++k) CHECK(std::abs(u[k] - d[k]) <= 1e-15);
  }
  std::mt19937_64 rng(0x5eed0402);
  std::uniform_real_distribution<double> box(-0.5, 0.5), ty(-0.5, 0.5), tx(1.5, 2.5);
  std::vector<Point2> src, trg;
  std::vector<double> q;
  for (int j = 0; j < 200; ++j) {
    src.push_back({box(rng), box(rng)});
    q.push_back(box(rng));
    trg.push_back({tx(rng), ty(rng)});
  }
  const auto d = direct_log_potential(src, q, trg);
  const auto u = multipole_approx(src, q, trg, {0.0, 0.0}, 40);
  double e = 0, m = 0;
  for (std::size_t k = 0; k < trg.size(); ++k) {
    e = std::max(e, std::abs(u[k] - d[k]));
    m = std::max(m, std::abs(d[k]));
  }
  CHECK(e <= 1e-12 * m);
  const std::vector<Point2> inside{{1.2, 0.0}};
  CHECK_THROWS_AS(multipole_approx(src, q, inside, {0.0, 0.0}, 4), PreconditionError);
}

TEST_CASE("multipole per-order error ratio in the unit-box geometry") {
  // source box corners maximize r'/r, target box edge at distance one box width
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
  double mp = 0, me = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    mp += ps[i];
    me += es[i];
  }
  mp /= static_cast<double>(ps.size());
  me /= static_cast<double>(ps.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    sxy += (ps[i] - mp) * (es[i] - me);
    sxx += (ps[i] - mp) * (ps[i] - mp);
  }
  const double ratio = std::exp(sxy / sxx);
  CHECK(ratio >= 0.40);
  CHECK(ratio <= 0.55);
}
