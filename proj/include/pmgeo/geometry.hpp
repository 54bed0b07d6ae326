#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmgeo/numerics.hpp"

namespace pmgeo {

/// E = { V y + c : sum_i y_i^2 / r_i^2 <= 1 }, a d-dimensional solid
/// ellipsoid in R^D with orthonormal basis V.
struct EllipsoidSpec {
  Vector center;  // D
  Matrix basis;   // D x d, orthonormal columns
  Vector radii;   // d, all > 0

  Eigen::Index ambient_dim() const noexcept { return center.size(); }
  Eigen::Index intrinsic_dim() const noexcept { return radii.size(); }
};

/// Draw order from Rng(seed): center ~ U[0,1]^D, then a D x d standard normal
/// matrix (column-major) that is orthonormalized, then radii ~ U[lo, hi].
EllipsoidSpec make_ellipsoid(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim, double radius_low,
                             double radius_high, std::uint64_t seed);

/// Root mean square of the radii.
double effective_radius(std::span<const double> radii);
inline double effective_radius(const Vector& r) {
  return effective_radius(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
}

/// Closest point on the surface sum y_i^2/r_i^2 = 1 to y0, in the
/// ellipsoid's own d-dim frame.
struct SurfaceProjection {
  Vector closest;
  double distance = 0.0;
  bool interior = false;  // y0 strictly inside
  int iterations = 0;
};

/// Solves sum (y0_i r_i / (r_i^2 + lambda))^2 = 1 for the unique root with
/// lambda > -min r_i^2 by bracketed Newton (bisection fallback) to a
/// constraint residual of 1e-10. The interior case where y0 has no
/// component along the shortest axes is resolved in closed form. Throws
/// NumericalFailure after 200 iterations.
SurfaceProjection project_to_surface(const Vector& y0, const Vector& radii);

struct BoundaryDistance {
  double distance = 0.0;       // to the surface
  double perpendicular = 0.0;  // |(I - V V^T)(p - c)|
  double parallel = 0.0;       // in-subspace distance to the surface
  bool interior = false;       // in-subspace projection inside the ellipsoid
  /// Distance to the solid ellipsoid: perpendicular part only for interior
  /// projections, otherwise equal to distance.
  double filled_distance() const noexcept { return interior ? perpendicular : distance; }
};

BoundaryDistance boundary_distance_parts(const Vector& point, const EllipsoidSpec& e);
inline double boundary_distance(const Vector& point, const EllipsoidSpec& e) {
  return boundary_distance_parts(point, e).distance;
}

/// (D - d)/6 + max(0, sqrt(d/6) - R_eff)^2
double analytic_expected_sqdist(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim, std::span<const double> radii);

struct DistanceEstimate {
  double mean_sq_dist = 0.0;
  double std = 0.0;  // spread of the squared distance over points
  double sem = 0.0;  // standard error of mean_sq_dist
  std::size_t n_points = 0;
};

struct MonteCarloDistance {
  Eigen::Index ambient_dim = 0;
  Eigen::Index intrinsic_dim = 0;
  double analytic = 0.0;  // closed form on the drawn radii
  DistanceEstimate surface;  // squared distance to the surface y^T H y = 1
  DistanceEstimate filled;   // squared distance to the solid ellipsoid
  /// Squared distance to the boundary of the ellipsoid as a subset of R^D.
  /// For d < D the set has no interior in R^D, so its boundary is the whole
  /// solid and this equals `filled`; for d = D it equals `surface`.
  DistanceEstimate boundary;
  double interior_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// One ellipsoid from make_ellipsoid(D, d, lo, hi, seed); point i drawn from
/// Rng(Rng::derive(seed, i + 1)) uniform in [0,1]^D.
MonteCarloDistance monte_carlo_expected_sqdist(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim,
                                               double radius_low, double radius_high, std::size_t n_points,
                                               std::uint64_t seed);

std::string fig3_csv_header();
std::string fig3_csv_row(const MonteCarloDistance& mc);

}  // namespace pmgeo
