#include "pmgeo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmgeo/error.hpp"
#include "pmgeo/parallel.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

EllipsoidSpec make_ellipsoid(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim, double radius_low,
                             double radius_high, std::uint64_t seed) {
  if (intrinsic_dim < 1 || intrinsic_dim > ambient_dim)
    throw InvalidInput("make_ellipsoid: need 1 <= d <= D (d=" + std::to_string(intrinsic_dim) +
                       ", D=" + std::to_string(ambient_dim) + ")");
  if (!(radius_low > 0.0) || radius_high < radius_low)
    throw InvalidInput("make_ellipsoid: need 0 < radius_low <= radius_high");
  Rng rng(seed);
  EllipsoidSpec e;
  e.center = rng.uniform_vector(ambient_dim);
  e.basis = orthonormalize(rng.normal_matrix(ambient_dim, intrinsic_dim));
  e.radii.resize(intrinsic_dim);
  for (Eigen::Index i = 0; i < intrinsic_dim; ++i) e.radii[i] = rng.uniform(radius_low, radius_high);
  return e;
}

double effective_radius(std::span<const double> radii) {
  if (radii.empty()) throw InvalidInput("effective_radius: no radii");
  double s = 0.0;
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidInput("effective_radius: radii must be positive");
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(radii.size()));
}

SurfaceProjection project_to_surface(const Vector& y0, const Vector& radii) {
  const Eigen::Index d = radii.size();
  if (d == 0 || y0.size() != d) throw InvalidInput("project_to_surface: dimension mismatch");
  if ((radii.array() <= 0.0).any()) throw InvalidInput("project_to_surface: radii must be positive");

  const Eigen::ArrayXd r2 = radii.array().square();
  const double r2_min = r2.minCoeff();
  const Eigen::ArrayXd gap = r2 - r2_min;  // exactly 0 on the shortest axes
  const Eigen::ArrayXd a2 = (y0.array() * radii.array()).square();
  const double s = (y0.array().square() / r2).sum();

  SurfaceProjection out;
  out.interior = s < 1.0;

  // Unknown mu = lambda + r_min^2 > 0, so denominators are gap_i + mu with no
  // cancellation near the shortest axis.
  auto residual = [&](double mu) { return (a2 / (gap + mu).square()).sum() - 1.0; };

  if (out.interior) {
    bool on_short_axes_zero = true;
    for (Eigen::Index i = 0; i < d; ++i)
      if (gap[i] == 0.0 && y0[i] != 0.0) on_short_axes_zero = false;
    if (on_short_axes_zero) {
      double f_lim = -1.0;
      for (Eigen::Index i = 0; i < d; ++i)
        if (gap[i] > 0.0) f_lim += a2[i] / (gap[i] * gap[i]);
      if (f_lim <= 0.0) {
        // Closest point leaves the plane of y0 along the first shortest axis.
        out.closest.resize(d);
        bool placed = false;
        for (Eigen::Index i = 0; i < d; ++i) {
          if (gap[i] > 0.0) {
            out.closest[i] = y0[i] * r2[i] / gap[i];
          } else if (!placed) {
            out.closest[i] = radii[i] * std::sqrt(-f_lim);
            placed = true;
          } else {
            out.closest[i] = 0.0;
          }
        }
        out.distance = (out.closest - y0).norm();
        return out;
      }
    }
  }

  double lo, hi, mu;
  if (out.interior) {
    lo = 0.0;
    hi = r2_min;
    mu = hi;
  } else {
    lo = r2_min;
    hi = r2_min + std::sqrt(r2.maxCoeff()) * y0.norm();
    mu = lo;
  }

  constexpr double kTolerance = 1e-10;
  constexpr int kMaxIterations = 200;
  double f = residual(mu);
  int it = 0;
  while (std::abs(f) > kTolerance) {
    if (++it > kMaxIterations)
      throw NumericalFailure("project_to_surface: no convergence after 200 iterations", f);
    if (f > 0.0)
      lo = mu;
    else
      hi = mu;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;  // bracket at machine resolution
    const double fprime = -2.0 * (a2 / (gap + mu).cube()).sum();
    double next = mu - f / fprime;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    mu = next;
    f = residual(mu);
  }
  out.iterations = it;
  out.closest = (y0.array() * r2 / (gap + mu)).matrix();
  out.distance = (out.closest - y0).norm();
  return out;
}

BoundaryDistance boundary_distance_parts(const Vector& point, const EllipsoidSpec& e) {
  if (point.size() != e.ambient_dim()) throw InvalidInput("boundary_distance: point dimension mismatch");
  if (!point.allFinite()) throw InvalidInput("boundary_distance: non-finite point");
  const Vector z = point - e.center;
  const Vector y0 = e.basis.transpose() * z;
  BoundaryDistance b;
  b.perpendicular = (z - e.basis * y0).norm();
  const SurfaceProjection p = project_to_surface(y0, e.radii);
  b.parallel = p.distance;
  b.interior = p.interior;
  b.distance = std::hypot(b.perpendicular, b.parallel);
  return b;
}

double analytic_expected_sqdist(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim, std::span<const double> radii) {
  if (intrinsic_dim < 1 || intrinsic_dim > ambient_dim) throw InvalidInput("analytic_expected_sqdist: need 1 <= d <= D");
  if (static_cast<Eigen::Index>(radii.size()) != intrinsic_dim)
    throw InvalidInput("analytic_expected_sqdist: need exactly d radii");
  const double D = static_cast<double>(ambient_dim);
  const double d = static_cast<double>(intrinsic_dim);
  const double excess = std::max(0.0, std::sqrt(d / 6.0) - effective_radius(radii));
  return (D - d) / 6.0 + excess * excess;
}

MonteCarloDistance monte_carlo_expected_sqdist(Eigen::Index ambient_dim, Eigen::Index intrinsic_dim,
                                               double radius_low, double radius_high, std::size_t n_points,
                                               std::uint64_t seed) {
  if (n_points < 2) throw InvalidInput("monte_carlo_expected_sqdist: need n_points >= 2");
  const EllipsoidSpec e = make_ellipsoid(ambient_dim, intrinsic_dim, radius_low, radius_high, seed);
  const auto n = static_cast<Eigen::Index>(n_points);

  // Batched projections: Z = X - c, Y0 = Z V, residual = Z - Y0 V^T.
  Matrix z(ambient_dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i) + 1));
    z.col(i) = rng.uniform_vector(ambient_dim) - e.center;
  }
  const Matrix y0 = e.basis.transpose() * z;
  const Vector perp = (z - e.basis * y0).colwise().norm().transpose();

  std::vector<double> sq_surface(n_points), sq_filled(n_points);
  std::vector<char> interior(n_points);
  parallel_for(n, [&](Eigen::Index i) {
    const SurfaceProjection p = project_to_surface(y0.col(i), e.radii);
    const double perp2 = perp[i] * perp[i];
    sq_surface[static_cast<std::size_t>(i)] = perp2 + p.distance * p.distance;
    sq_filled[static_cast<std::size_t>(i)] = p.interior ? perp2 : perp2 + p.distance * p.distance;
    interior[static_cast<std::size_t>(i)] = p.interior ? 1 : 0;
  });

  auto summarize = [&](const std::vector<double>& v) {
    CompensatedMoments m;
    for (double x : v) m.add(x);
    DistanceEstimate est;
    est.mean_sq_dist = m.mean();
    est.std = m.stddev();
    est.sem = est.std / std::sqrt(static_cast<double>(m.count()));
    est.n_points = m.count();
    return est;
  };

  MonteCarloDistance mc;
  mc.ambient_dim = ambient_dim;
  mc.intrinsic_dim = intrinsic_dim;
  mc.analytic = analytic_expected_sqdist(ambient_dim, intrinsic_dim,
                                         std::span<const double>(e.radii.data(), static_cast<std::size_t>(e.radii.size())));
  mc.surface = summarize(sq_surface);
  mc.filled = summarize(sq_filled);
  mc.boundary = intrinsic_dim < ambient_dim ? mc.filled : mc.surface;
  mc.interior_fraction = static_cast<double>(std::count(interior.begin(), interior.end(), 1)) / static_cast<double>(n_points);
  mc.seed = seed;
  return mc;
}

std::string fig3_csv_header() {
  return "d,analytic,mc_boundary_mean,mc_boundary_sigma,mc_filled_mean,mc_surface_mean,mc_surface_sigma,"
         "interior_fraction,n_points,seed";
}

std::string fig3_csv_row(const MonteCarloDistance& mc) {
  std::ostringstream os;
  os.precision(12);
  os << mc.intrinsic_dim << ',' << mc.analytic << ',' << mc.boundary.mean_sq_dist << ',' << mc.boundary.sem << ','
     << mc.filled.mean_sq_dist << ',' << mc.surface.mean_sq_dist << ',' << mc.surface.sem << ','
     << mc.interior_fraction << ',' << mc.boundary.n_points << ',' << mc.seed;
  return os.str();
}

}  // namespace pmgeo
