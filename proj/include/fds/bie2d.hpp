#pragma once

#include <array>
#include <span>
#include <vector>

#include "fds/hbs.hpp"
#include "fds/linalg.hpp"

namespace fds {

using Point2 = std::array<double, 2>;

enum class CurveKind { circle, ellipse, starfish };

/// circle: p1 = radius; ellipse: p1, p2 = semi-axes; starfish: p1 = amplitude, arms.
struct CurveSpec {
  CurveKind kind = CurveKind::circle;
  double p1 = 1.0, p2 = 1.0;
  int arms = 5;
};

/// Closed counter-clockwise curve sampled at N parameter-equispaced nodes.
struct Curve {
  index_t N = 0;
  std::vector<double> t;
  std::vector<Point2> x, normal;
  std::vector<double> speed, curvature, weight;

  double length() const;
  double max_spacing() const;
};

Curve make_curve(const CurveSpec& spec, index_t N);
Curve make_circle(double r, index_t N);
Curve make_ellipse(double a, double b, index_t N);
Curve make_starfish(double amp, int arms, index_t N);

/// phi(x - y) = -(1/2pi) log|x - y|.
double laplace_potential(const Point2& x, const Point2& y);
/// n_y . grad_y phi(x - y).
double dlp_kernel(const Point2& x, const Point2& y, const Point2& ny);
/// Limit of the double-layer kernel on the curve: -curvature / (4 pi) for outward normals.
double dlp_diagonal_limit(double curvature);

struct BieSystem {
  RMatrix matrix; // -1/2 I + A with A(i, j) = w_j d(x_i, x_j)
  std::vector<double> rhs;
};

BieSystem assemble_bie(const Curve& c, std::span<const double> f);
BlockSource bie_source(const Curve& c);

enum class BieBackend { dense, hodlr, hbs };

/// Density sigma for the interior Dirichlet problem; tol is the structured backends' tolerance.
std::vector<double> solve_interior_dirichlet(const Curve& c, std::span<const double> f, BieBackend backend,
                                             double tol = 1e-12);

struct DoubleLayerEval {
  std::vector<double> u;
  /// Targets closer than 5 node spacings to the curve.
  std::vector<bool> too_close;
};

DoubleLayerEval eval_double_layer(const Curve& c, std::span<const double> sigma, std::span<const Point2> targets);

struct ProxyCircle {
  Point2 center{0.0, 0.0};
  double radius = 0;
  index_t n_points = 64;
};

/// Center at the centroid of the nodes, radius 1.5 times their largest distance from it.
ProxyCircle default_proxy(const Curve& c, std::span<const index_t> source_idx, index_t n_points = 64);

/// Factors U V^* approximating A(far_idx, source_idx) from the source-to-proxy matrix.
RLowRank proxy_compress_block(const Curve& c, std::span<const index_t> source_idx, std::span<const index_t> far_idx,
                              const ProxyCircle& proxy, double tol);

/// Row-space sampler for HBS compression of the BIE matrix: exact near interactions plus
/// proxy-circle surrogates for everything outside the proxy circle.
FarFieldSampler bie_proxy_sampler(const Curve& c, index_t n_points = 64);

/// Sum_j q_j log|x - y_j| through the multipole expansion about `center` truncated at `order`.
std::vector<double> multipole_approx(std::span<const Point2> sources, std::span<const double> charges,
                                     std::span<const Point2> targets, const Point2& center, int order);
std::vector<double> direct_log_potential(std::span<const Point2> sources, std::span<const double> charges,
                                         std::span<const Point2> targets);

} // namespace fds
