#include "fds/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>

#include "fds/errors.hpp"

namespace fds {

index_t SpectrumResult::rank(double eps) const {
  return static_cast<index_t>(std::count_if(sigmas.begin(), sigmas.end(), [eps](double s) { return s > eps; }));
}

index_t SpectrumResult::knee(double level) const {
  for (std::size_t j = 0; j < sigmas.size(); ++j)
    if (sigmas[j] < level) return static_cast<index_t>(j);
  return static_cast<index_t>(sigmas.size());
}

SpectrumResult make_spectrum(std::string label, RVector sigma) {
  std::sort(sigma.begin(), sigma.end(), std::greater<>());
  if (!sigma.empty() && sigma[0] > 0) {
    const double s0 = sigma[0];
    for (double& s : sigma) s /= s0;
  }
  return SpectrumResult{std::move(label), std::move(sigma), {}};
}

} // namespace fds

namespace fds {

namespace {

struct BoxGrid {
  std::vector<std::array<double, 2>> x;
  std::vector<double> w;
};

BoxGrid gauss_box(index_t k, double cx, double cy) {
  const auto q = gauss_legendre(k, -0.5, 0.5);
  BoxGrid g;
  for (index_t i = 0; i < k; ++i)
    for (index_t j = 0; j < k; ++j) {
      g.x.push_back({cx + q.nodes[static_cast<std::size_t>(i)], cy + q.nodes[static_cast<std::size_t>(j)]});
      g.w.push_back(q.weights[static_cast<std::size_t>(i)] * q.weights[static_cast<std::size_t>(j)]);
    }
  return g;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

std::string rank_key(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rank@%g", eps);
  return buf;
}

void add_rank_metadata(SpectrumResult& r) {
  for (double eps : report_tolerances) r.metadata[rank_key(eps)] = std::to_string(r.rank(eps));
}

SpectrumResult spectrum_potential(PotentialKernel kernel, index_t grid_k, PotentialGeometry geometry, double kappa) {
  if (grid_k < 4 || grid_k > 80) throw InvalidArgument("spectrum_potential: grid_k must lie in [4, 80]");
  if (kernel == PotentialKernel::helmholtz && !(kappa > 0))
    throw InvalidArgument("spectrum_potential: kappa must be positive for helmholtz");
  const BoxGrid src = gauss_box(grid_k, 0, 0);
  BoxGrid trg;
  if (geometry == PotentialGeometry::directional) {
    trg = gauss_box(grid_k, 2, 0);
  } else {
    for (int i = -2; i <= 2; ++i)
      for (int j = -2; j <= 2; ++j) {
        if (std::max(std::abs(i), std::abs(j)) != 2) continue;
        const BoxGrid b = gauss_box(grid_k, i, j);
        trg.x.insert(trg.x.end(), b.x.begin(), b.x.end());
        trg.w.insert(trg.w.end(), b.w.begin(), b.w.end());
      }
  }
  const auto m = static_cast<index_t>(trg.x.size()), n = static_cast<index_t>(src.x.size());
  auto dist = [&](index_t i, index_t j) {
    const auto& a = trg.x[static_cast<std::size_t>(i)];
    const auto& b = src.x[static_cast<std::size_t>(j)];
    return std::hypot(a[0] - b[0], a[1] - b[1]);
  };
  auto scale = [&](index_t i, index_t j) {
    return std::sqrt(trg.w[static_cast<std::size_t>(i)] * src.w[static_cast<std::size_t>(j)]);
  };
  RVector sigma;
  if (kernel == PotentialKernel::laplace) {
    RMatrix V(m, n);
    for (index_t i = 0; i < m; ++i)
      for (index_t j = 0; j < n; ++j) V(i, j) = scale(i, j) * (-std::log(dist(i, j)) / (2 * std::numbers::pi));
    sigma = singular_values(V);
  } else {
    CMatrix V(m, n);
    for (index_t i = 0; i < m; ++i)
      for (index_t j = 0; j < n; ++j) V(i, j) = scale(i, j) * cdouble(0, 0.25) * hankel0_first_kind(kappa * dist(i, j));
    sigma = complex_singular_values(V, 1e-13);
  }
  auto r = make_spectrum(std::string(kernel == PotentialKernel::laplace ? "laplace" : "helmholtz") + " " +
                             (geometry == PotentialGeometry::directional ? "directional" : "global"),
                         std::move(sigma));
  r.metadata["kernel"] = kernel == PotentialKernel::laplace ? "laplace" : "helmholtz";
  r.metadata["kappa"] = fmt(kappa);
  r.metadata["grid_k"] = std::to_string(grid_k);
  r.metadata["geometry"] = geometry == PotentialGeometry::directional ? "directional" : "global";
  add_rank_metadata(r);
  return r;
}

std::pair<SpectrumResult, SpectrumResult> weak_vs_strong_spectrum(index_t boxes_per_side, index_t pts_per_box,
                                                                  std::uint64_t seed) {
  if (boxes_per_side < 5) throw InvalidArgument("weak_vs_strong_spectrum: need at least 5 boxes per side");
  if (pts_per_box < 16 || pts_per_box > 400)
    throw InvalidArgument("weak_vs_strong_spectrum: pts_per_box must lie in [16, 400]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const index_t tau = boxes_per_side / 2 - 1;
  std::vector<std::array<double, 2>> own, weak, strong;
  for (index_t bx = 0; bx < boxes_per_side; ++bx)
    for (index_t by = 0; by < boxes_per_side; ++by)
      for (index_t k = 0; k < pts_per_box; ++k) {
        const std::array<double, 2> p{static_cast<double>(bx) + u(rng), static_cast<double>(by) + u(rng)};
        const index_t d = std::max(std::abs(bx - tau), std::abs(by - tau));
        if (d == 0) {
          own.push_back(p);
          continue;
        }
        weak.push_back(p);
        if (d >= 2) strong.push_back(p);
      }
  auto spectrum = [&](const std::vector<std::array<double, 2>>& cols, const std::string& label) {
    RMatrix A(static_cast<index_t>(own.size()), static_cast<index_t>(cols.size()));
    for (std::size_t i = 0; i < own.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j)
        A(static_cast<index_t>(i), static_cast<index_t>(j)) =
            std::log(std::hypot(own[i][0] - cols[j][0], own[i][1] - cols[j][1]));
    auto r = make_spectrum(label, singular_values(A));
    r.metadata["boxes_per_side"] = std::to_string(boxes_per_side);
    r.metadata["pts_per_box"] = std::to_string(pts_per_box);
    r.metadata["seed"] = std::to_string(seed);
    add_rank_metadata(r);
    return r;
  };
  return {spectrum(weak, "weak"), spectrum(strong, "strong")};
}

} // namespace fds
