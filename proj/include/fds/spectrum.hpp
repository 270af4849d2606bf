#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fds/linalg.hpp"

namespace fds {

/// Normalized singular values sigma_j / sigma_1 of one experiment.
struct SpectrumResult {
  std::string label;
  std::vector<double> sigmas;
  std::map<std::string, std::string> metadata;

  /// Number of sigmas above eps.
  index_t rank(double eps) const;
  /// First index j with sigma_j < level, or the length when none is.
  index_t knee(double level = 0.1) const;
};

/// Sorts descending and divides by the largest value; an all-zero input gives all zeros.
SpectrumResult make_spectrum(std::string label, RVector sigma);

enum class PotentialKernel { laplace, helmholtz };
enum class PotentialGeometry { directional, global };

/// Singular values of V(i, j) = sqrt(w_i w'_j) k(x_i - y_j) between a k x k tensor Gauss-Legendre
/// grid on the unit source box at the origin and either the unit box centred at (2, 0)
/// (directional) or the 16 boxes of the ring at Chebyshev distance 2 (global).
/// Laplace uses -log|r|/(2 pi), Helmholtz (i/4) H0(kappa |r|).
SpectrumResult spectrum_potential(PotentialKernel kernel, index_t grid_k, PotentialGeometry geometry,
                                  double kappa = 0.0);

/// Uniform random points in a boxes_per_side^2 grid of unit boxes, log kernel. Weak: rows of an
/// interior box against every other point; strong: against the points of non-touching boxes.
std::pair<SpectrumResult, SpectrumResult> weak_vs_strong_spectrum(index_t boxes_per_side, index_t pts_per_box,
                                                                  std::uint64_t seed = 0x5eed0601);

/// Tolerances reported alongside every spectrum.
inline const std::vector<double> report_tolerances{1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};

/// "rank@1e-05" style metadata key.
std::string rank_key(double eps);
/// Stores rank(eps) under rank_key(eps) for every report tolerance.
void add_rank_metadata(SpectrumResult& r);

} // namespace fds
