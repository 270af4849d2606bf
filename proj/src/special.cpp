#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

#include "fds/linalg.hpp"

namespace fds {

QuadratureRule gauss_legendre(index_t n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be positive");
  if (!(a < b)) throw InvalidArgument("gauss_legendre: need a < b");
  QuadratureRule q;
  q.nodes.assign(static_cast<std::size_t>(n), 0.0);
  q.weights.assign(static_cast<std::size_t>(n), 0.0);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  const index_t m = (n + 1) / 2;
  for (index_t i = 0; i < m; ++i) {
    long double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                             (static_cast<double>(n) + 0.5));
    long double dp = 0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      long double p0 = 1, p1 = x;
      for (index_t k = 2; k <= n; ++k) {
        const long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) <= 1e-18L) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw ConvergenceError("gauss_legendre: Newton iteration did not converge for root " +
                             std::to_string(i));
    const long double w = 2 / ((1 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
    const double xd = (2 * i + 1 == n) ? 0.0 : static_cast<double>(x);
    q.nodes[lo] = mid - half * xd;
    q.nodes[hi] = mid + half * xd;
    q.weights[lo] = q.weights[hi] = static_cast<double>(half * w);
  }
  return q;
}

namespace {

using ld = long double;
constexpr ld euler_gamma = 0.577215664901532860606512090082402431L;
constexpr ld pi_l = 3.141592653589793238462643383279502884L;

// Returns (J_nu, Y_nu) for nu in {0, 1} by ascending series.
std::pair<ld, ld> bessel_series(int nu, ld x) {
  const ld q = -x * x / 4;
  ld term = nu == 0 ? 1.0L : x / 2;
  ld harm_a = 0, harm_b = nu == 0 ? 0.0L : 1.0L; // H_k and H_{k+nu}
  ld j = 0, ys = 0;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) {
      term *= q / (static_cast<ld>(k) * static_cast<ld>(k + nu));
      harm_a += 1.0L / k;
      harm_b += 1.0L / (k + nu);
    }
    j += term;
    ys += (harm_a + harm_b) * term;
    if (k > x && std::fabs(term) < 1e-24L * std::fabs(j) + 1e-300L) break;
  }
  const ld lg = std::log(x / 2) + euler_gamma;
  ld y = (2 / pi_l) * lg * j - ys / pi_l;
  if (nu == 1) y -= 2 / (pi_l * x);
  return {j, y};
}

// Hankel asymptotic expansion of H^(1)_nu(x).
std::complex<ld> hankel_asymptotic(int nu, ld x) {
  const ld mu = 4.0L * nu * nu;
  std::complex<ld> sum = 1, term = 1;
  ld prev = 1;
  for (int k = 1; k < 80; ++k) {
    const ld odd = static_cast<ld>(2 * k - 1);
    term *= std::complex<ld>(0, 1) * ((mu - odd * odd) / (8.0L * k * x));
    const ld mag = std::abs(term);
    if (mag > prev) break;
    sum += term;
    prev = mag;
    if (mag < 1e-21L) break;
  }
  const ld w = x - (2 * nu + 1) * pi_l / 4;
  return std::sqrt(2 / (pi_l * x)) * std::complex<ld>(std::cos(w), std::sin(w)) * sum;
}

std::pair<double, double> bessel_pair(int nu, double x) {
  if (x <= bessel_crossover) {
    auto [j, y] = bessel_series(nu, x);
    return {static_cast<double>(j), static_cast<double>(y)};
  }
  const auto h = hankel_asymptotic(nu, x);
  return {static_cast<double>(h.real()), static_cast<double>(h.imag())};
}

void require_positive(double x, const char* who) {
  if (!(x > 0) || !std::isfinite(x))
    throw InvalidArgument(std::string(who) + ": argument must be positive and finite");
}

} // namespace

double bessel_j0(double x) {
  x = std::fabs(x);
  if (x == 0) return 1.0;
  return bessel_pair(0, x).first;
}

double bessel_j1(double x) {
  const double s = x < 0 ? -1.0 : 1.0;
  x = std::fabs(x);
  if (x == 0) return 0.0;
  return s * bessel_pair(1, x).first;
}

double bessel_y0(double x) {
  require_positive(x, "bessel_y0");
  return bessel_pair(0, x).second;
}

double bessel_y1(double x) {
  require_positive(x, "bessel_y1");
  return bessel_pair(1, x).second;
}

cdouble hankel0_first_kind(double x) {
  require_positive(x, "hankel0_first_kind");
  auto [j, y] = bessel_pair(0, x);
  return {j, y};
}

cdouble hankel1_first_kind(double x) {
  require_positive(x, "hankel1_first_kind");
  auto [j, y] = bessel_pair(1, x);
  return {j, y};
}

} // namespace fds
