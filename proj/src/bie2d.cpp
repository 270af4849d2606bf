#include "fds/bie2d.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>

#include "fds/cluster_tree.hpp"
#include "fds/errors.hpp"
#include "fds/hodlr.hpp"

namespace fds {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct CurvePoint {
  double x, y, dx, dy, ddx, ddy;
};

CurvePoint eval_curve(const CurveSpec& s, double t) {
  const double c = std::cos(t), sn = std::sin(t);
  switch (s.kind) {
  case CurveKind::circle:
    return {s.p1 * c, s.p1 * sn, -s.p1 * sn, s.p1 * c, -s.p1 * c, -s.p1 * sn};
  case CurveKind::ellipse:
    return {s.p1 * c, s.p2 * sn, -s.p1 * sn, s.p2 * c, -s.p1 * c, -s.p2 * sn};
  case CurveKind::starfish: {
    const double k = s.arms;
    const double r = 1.0 + s.p1 * std::cos(k * t);
    const double dr = -s.p1 * k * std::sin(k * t);
    const double ddr = -s.p1 * k * k * std::cos(k * t);
    return {r * c,
            r * sn,
            dr * c - r * sn,
            dr * sn + r * c,
            ddr * c - 2 * dr * sn - r * c,
            ddr * sn + 2 * dr * c - r * sn};
  }
  }
  return {};
}

double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

bool segments_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double d1 = cross(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1]);
  const double d2 = cross(b[0] - a[0], b[1] - a[1], d[0] - a[0], d[1] - a[1]);
  const double d3 = cross(d[0] - c[0], d[1] - c[1], a[0] - c[0], a[1] - c[1]);
  const double d4 = cross(d[0] - c[0], d[1] - c[1], b[0] - c[0], b[1] - c[1]);
  return d1 * d2 < 0 && d3 * d4 < 0;
}

void check_simple(const CurveSpec& s) {
  constexpr index_t M = 256;
  std::vector<Point2> p(M);
  for (index_t j = 0; j < M; ++j) {
    const auto q = eval_curve(s, two_pi * static_cast<double>(j) / M);
    if (std::hypot(q.dx, q.dy) <= 0) throw InvalidArgument("make_curve: curve has a stationary point");
    p[static_cast<std::size_t>(j)] = {q.x, q.y};
  }
  for (index_t i = 0; i < M; ++i)
    for (index_t j = i + 2; j < M; ++j) {
      if (i == 0 && j == M - 1) continue;
      if (segments_cross(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(i + 1)],
                         p[static_cast<std::size_t>(j)], p[static_cast<std::size_t>((j + 1) % M)]))
        throw InvalidArgument("make_curve: curve self-intersects");
    }
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

Point2 centroid(const Curve& c, std::span<const index_t> idx) {
  Point2 m{0, 0};
  for (index_t j : idx) {
    m[0] += c.x[static_cast<std::size_t>(j)][0];
    m[1] += c.x[static_cast<std::size_t>(j)][1];
  }
  m[0] /= static_cast<double>(idx.size());
  m[1] /= static_cast<double>(idx.size());
  return m;
}

double bie_entry(const Curve& c, index_t i, index_t j) {
  const auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
  if (i == j) return -0.5 + c.weight[si] * dlp_diagonal_limit(c.curvature[si]);
  return c.weight[sj] * dlp_kernel(c.x[si], c.x[sj], c.normal[sj]);
}

std::vector<Point2> proxy_points(const ProxyCircle& p) {
  std::vector<Point2> q(static_cast<std::size_t>(p.n_points));
  for (index_t k = 0; k < p.n_points; ++k) {
    const double t = two_pi * static_cast<double>(k) / static_cast<double>(p.n_points);
    q[static_cast<std::size_t>(k)] = {p.center[0] + p.radius * std::cos(t), p.center[1] + p.radius * std::sin(t)};
  }
  return q;
}

} // namespace

double Curve::length() const {
  double s = 0;
  for (double w : weight) s += w;
  return s;
}

double Curve::max_spacing() const {
  double h = 0;
  for (index_t j = 0; j < N; ++j)
    h = std::max(h, dist(x[static_cast<std::size_t>(j)], x[static_cast<std::size_t>((j + 1) % N)]));
  return h;
}

Curve make_curve(const CurveSpec& spec, index_t N) {
  if (N < 16 || N % 2 != 0) throw InvalidArgument("make_curve: N must be even and at least 16");
  if (!(spec.p1 > 0) || (spec.kind == CurveKind::ellipse && !(spec.p2 > 0)))
    throw InvalidArgument("make_curve: shape parameters must be positive");
  if (spec.kind == CurveKind::starfish && (spec.p1 >= 1.0 || spec.arms < 1))
    throw InvalidArgument("make_curve: starfish needs amp < 1 and at least one arm");
  check_simple(spec);
  Curve c;
  c.N = N;
  const auto n = static_cast<std::size_t>(N);
  c.t.resize(n);
  c.x.resize(n);
  c.normal.resize(n);
  c.speed.resize(n);
  c.curvature.resize(n);
  c.weight.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double t = two_pi * static_cast<double>(j) / static_cast<double>(N);
    const auto q = eval_curve(spec, t);
    const double sp = std::hypot(q.dx, q.dy);
    c.t[j] = t;
    c.x[j] = {q.x, q.y};
    c.normal[j] = {q.dy / sp, -q.dx / sp};
    c.speed[j] = sp;
    c.curvature[j] = (q.dx * q.ddy - q.dy * q.ddx) / (sp * sp * sp);
    c.weight[j] = two_pi / static_cast<double>(N) * sp;
  }
  return c;
}

Curve make_circle(double r, index_t N) { return make_curve({CurveKind::circle, r, r, 0}, N); }
Curve make_ellipse(double a, double b, index_t N) { return make_curve({CurveKind::ellipse, a, b, 0}, N); }
Curve make_starfish(double amp, int arms, index_t N) { return make_curve({CurveKind::starfish, amp, 1.0, arms}, N); }

double laplace_potential(const Point2& x, const Point2& y) { return -std::log(dist(x, y)) / two_pi; }

double dlp_kernel(const Point2& x, const Point2& y, const Point2& ny) {
  const double dx = x[0] - y[0], dy = x[1] - y[1];
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) throw InvalidArgument("dlp_kernel: x = y; use the curvature limit");
  return (ny[0] * dx + ny[1] * dy) / (two_pi * r2);
}

double dlp_diagonal_limit(double curvature) { return -curvature / (2.0 * two_pi); }

BlockSource bie_source(const Curve& c) {
  auto cp = std::make_shared<const Curve>(c);
  return BlockSource::from_entries(c.N, c.N, [cp](index_t i, index_t j) { return bie_entry(*cp, i, j); });
}

BieSystem assemble_bie(const Curve& c, std::span<const double> f) {
  if (static_cast<index_t>(f.size()) != c.N) throw DimensionError("assemble_bie: boundary data size mismatch");
  BieSystem s;
  s.matrix = RMatrix(c.N, c.N);
  for (index_t i = 0; i < c.N; ++i)
    for (index_t j = 0; j < c.N; ++j) s.matrix(i, j) = bie_entry(c, i, j);
  s.rhs.assign(f.begin(), f.end());
  return s;
}

std::vector<double> solve_interior_dirichlet(const Curve& c, std::span<const double> f, BieBackend backend,
                                             double tol) {
  if (static_cast<index_t>(f.size()) != c.N) throw DimensionError("solve_interior_dirichlet: data size mismatch");
  switch (backend) {
  case BieBackend::dense: {
    const auto s = assemble_bie(c, f);
    return DenseLU<double>(s.matrix).solve(std::span<const double>(s.rhs));
  }
  case BieBackend::hodlr: {
    const auto tree = ClusterTree::uniform(c.N, 64);
    const auto H = compress_to_hodlr(bie_source(c), tree, tol);
    return HodlrInverseWoodbury(H).apply(f);
  }
  case BieBackend::hbs: {
    const auto tree = ClusterTree::uniform(c.N, 32);
    const auto H = compress_to_hbs(bie_source(c), tree, tol, bie_proxy_sampler(c));
    return hbs_apply_inverse(hbs_invert(H), f);
  }
  }
  throw InvalidArgument("solve_interior_dirichlet: unknown backend");
}

DoubleLayerEval eval_double_layer(const Curve& c, std::span<const double> sigma, std::span<const Point2> targets) {
  if (static_cast<index_t>(sigma.size()) != c.N) throw DimensionError("eval_double_layer: density size mismatch");
  const double near = 5.0 * c.max_spacing();
  DoubleLayerEval out;
  out.u.assign(targets.size(), 0.0);
  out.too_close.assign(targets.size(), false);
  for (std::size_t k = 0; k < targets.size(); ++k) {
    double u = 0, dmin = 1e300;
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      dmin = std::min(dmin, dist(targets[k], c.x[j]));
      if (dmin == 0.0) break;
      u += c.weight[j] * dlp_kernel(targets[k], c.x[j], c.normal[j]) * sigma[j];
    }
    out.too_close[k] = dmin < near;
    out.u[k] = dmin == 0.0 ? std::numeric_limits<double>::quiet_NaN() : u;
  }
  return out;
}

ProxyCircle default_proxy(const Curve& c, std::span<const index_t> source_idx, index_t n_points) {
  if (source_idx.empty()) throw InvalidArgument("default_proxy: empty source set");
  ProxyCircle p;
  p.center = centroid(c, source_idx);
  double r = 0;
  for (index_t j : source_idx) r = std::max(r, dist(p.center, c.x[static_cast<std::size_t>(j)]));
  p.radius = 1.5 * r;
  p.n_points = n_points;
  return p;
}

RLowRank proxy_compress_block(const Curve& c, std::span<const index_t> source_idx, std::span<const index_t> far_idx,
                              const ProxyCircle& proxy, double tol) {
  const auto ns = static_cast<index_t>(source_idx.size()), nf = static_cast<index_t>(far_idx.size());
  if (proxy.n_points < 1) throw InvalidArgument("proxy_compress_block: need at least one proxy point");
  double r = 0;
  for (index_t j : source_idx) r = std::max(r, dist(proxy.center, c.x[static_cast<std::size_t>(j)]));
  if (proxy.radius < 1.5 * r)
    throw PreconditionError("proxy_compress_block: proxy radius " + std::to_string(proxy.radius) +
                            " is below 1.5 times the source patch radius " + std::to_string(r));
  for (index_t i : far_idx)
    if (dist(proxy.center, c.x[static_cast<std::size_t>(i)]) <= proxy.radius)
      throw PreconditionError("proxy_compress_block: far node " + std::to_string(i) + " lies inside the proxy circle");
  RLowRank F{RMatrix(nf, 0), RMatrix(ns, 0)};
  if (ns == 0 || nf == 0) return F;
  const auto pts = proxy_points(proxy);
  RMatrix K(proxy.n_points, ns);
  for (index_t k = 0; k < proxy.n_points; ++k)
    for (index_t j = 0; j < ns; ++j) {
      const auto sj = static_cast<std::size_t>(source_idx[static_cast<std::size_t>(j)]);
      K(k, j) = c.weight[sj] * dlp_kernel(pts[static_cast<std::size_t>(k)], c.x[sj], c.normal[sj]);
    }
  if (K.norm_max() == 0.0) return F;
  const auto id = interpolative_decomposition(K, tol);
  std::vector<index_t> skel;
  for (index_t j : id.skeleton) skel.push_back(source_idx[static_cast<std::size_t>(j)]);
  RMatrix C(nf, id.rank());
  for (index_t i = 0; i < nf; ++i)
    for (index_t k = 0; k < id.rank(); ++k)
      C(i, k) = bie_entry(c, far_idx[static_cast<std::size_t>(i)], skel[static_cast<std::size_t>(k)]);
  // the proxy skeleton also covers directions holding no far nodes; prune it against the actual far rows
  const auto id2 = interpolative_decomposition(C, tol);
  F.U = RMatrix(nf, id2.rank());
  for (index_t i = 0; i < nf; ++i)
    for (index_t k = 0; k < id2.rank(); ++k) F.U(i, k) = C(i, id2.skeleton[static_cast<std::size_t>(k)]);
  F.V = matmul(id2.interpolation_matrix(), id.interpolation_matrix()).transpose();
  return F;
}

FarFieldSampler bie_proxy_sampler(const Curve& c, index_t n_points) {
  auto cp = std::make_shared<const Curve>(c);
  return [cp, n_points](const ClusterTree& tree, index_t node, std::span<const index_t> rows) {
    const Curve& cv = *cp;
    const auto& nd = tree.node(node);
    const auto range = iota_indices(nd.begin, nd.end);
    ProxyCircle p = default_proxy(cv, range, n_points);
    p.n_points = std::max(n_points, 3 * static_cast<index_t>(rows.size()) / 2);
    std::vector<index_t> near;
    for (index_t j = 0; j < tree.size(); ++j) {
      if (j >= nd.begin && j < nd.end) continue;
      if (dist(p.center, cv.x[static_cast<std::size_t>(j)]) <= p.radius) near.push_back(j);
    }
    const auto nr = static_cast<index_t>(rows.size()), nn = static_cast<index_t>(near.size());
    const bool use_proxy = nn + nd.size() < tree.size();
    const index_t np = use_proxy ? p.n_points : 0;
    const auto pts = proxy_points(p);
    const double pw = two_pi * p.radius / static_cast<double>(p.n_points);
    RMatrix M(nr, 2 * nn + 2 * np);
    for (index_t a = 0; a < nr; ++a) {
      const index_t i = rows[static_cast<std::size_t>(a)];
      const auto si = static_cast<std::size_t>(i);
      for (index_t b = 0; b < nn; ++b) {
        const index_t j = near[static_cast<std::size_t>(b)];
        M(a, b) = bie_entry(cv, i, j);
        M(a, nn + b) = bie_entry(cv, j, i);
      }
      for (index_t k = 0; k < np; ++k) {
        const auto& q = pts[static_cast<std::size_t>(k)];
        M(a, 2 * nn + k) = pw * laplace_potential(cv.x[si], q);
        M(a, 2 * nn + np + k) = cv.weight[si] * dlp_kernel(q, cv.x[si], cv.normal[si]);
      }
    }
    return M;
  };
}

std::vector<double> direct_log_potential(std::span<const Point2> sources, std::span<const double> charges,
                                         std::span<const Point2> targets) {
  if (sources.size() != charges.size()) throw DimensionError("direct_log_potential: charge count mismatch");
  std::vector<double> u(targets.size(), 0.0);
  for (std::size_t k = 0; k < targets.size(); ++k)
    for (std::size_t j = 0; j < sources.size(); ++j) u[k] += charges[j] * std::log(dist(targets[k], sources[j]));
  return u;
}

std::vector<double> multipole_approx(std::span<const Point2> sources, std::span<const double> charges,
                                     std::span<const Point2> targets, const Point2& center, int order) {
  if (sources.size() != charges.size()) throw DimensionError("multipole_approx: charge count mismatch");
  if (order < 0) throw InvalidArgument("multipole_approx: negative order");
  double half = 0;
  for (const auto& y : sources)
    half = std::max({half, std::abs(y[0] - center[0]), std::abs(y[1] - center[1])});
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double d = std::max(std::abs(targets[k][0] - center[0]), std::abs(targets[k][1] - center[1]));
    if (d < 3.0 * half)
      throw PreconditionError("multipole_approx: target " + std::to_string(k) + " lies inside the 3a box");
  }
  using cd = std::complex<double>;
  double Q = 0;
  std::vector<cd> moment(static_cast<std::size_t>(order) + 1, cd(0.0));
  for (std::size_t j = 0; j < sources.size(); ++j) {
    const cd w(sources[j][0] - center[0], sources[j][1] - center[1]);
    Q += charges[j];
    cd wp(1.0);
    for (int m = 1; m <= order; ++m) {
      wp *= w;
      moment[static_cast<std::size_t>(m)] += charges[j] * wp;
    }
  }
  std::vector<double> u(targets.size());
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const cd z(targets[k][0] - center[0], targets[k][1] - center[1]);
    const cd zi = 1.0 / z;
    cd zp(1.0);
    double s = Q * std::log(std::abs(z));
    for (int m = 1; m <= order; ++m) {
      zp *= zi;
      s -= (moment[static_cast<std::size_t>(m)] * zp).real() / m;
    }
    u[k] = s;
  }
  return u;
}

} // namespace fds
