#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmgeo/sample_set.hpp"

namespace pmgeo {

enum class Estimator { participation_ratio, two_nn };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& s);

struct ScalingPoint {
  Eigen::Index n = 0;
  double estimate = 0.0;
  bool operator==(const ScalingPoint&) const = default;
};

struct DimensionReport {
  Estimator estimator = Estimator::participation_ratio;
  double estimate = 0.0;
  Eigen::Index n_samples = 0;
  bool is_lower_bound = false;
  std::vector<ScalingPoint> scaling;  // n strictly increasing
  /// 2NN only: points dropped because their first neighbour is a duplicate.
  std::size_t dropped_duplicates = 0;
  /// 2NN only: always false, the ratio tail is never trimmed.
  bool trimmed = false;
};

/// (sum l)^2 / sum l^2. Throws DegenerateInput on an all-zero spectrum and
/// InvalidInput on a negative eigenvalue.
double participation_ratio(std::span<const double> eigenvalues);

/// Relative change threshold below which the PR curve counts as plateaued
/// over the last doubling of N.
inline constexpr double kPrPlateauTolerance = 0.02;

/// PR of the sample covariance. The report's scaling curve holds the
/// estimate at N/2 (seeded prefix) and N; is_lower_bound is set when they
/// differ by kPrPlateauTolerance or more.
DimensionReport pr_of_samples(const RowMatrix& samples, std::uint64_t seed = 0);
inline DimensionReport pr_of_samples(const SampleSet& s, std::uint64_t seed = 0) { return pr_of_samples(s.points, seed); }

enum class DuplicatePolicy { drop, raise };

struct TwoNnOptions {
  DuplicatePolicy duplicates = DuplicatePolicy::drop;
};

/// Two-nearest-neighbour intrinsic dimension: mu = r2/r1 per point, sorted
/// ascending (ties by index), regressed through the origin against
/// -log(1 - i/N) for i = 1..N-1. is_lower_bound is always true.
DimensionReport two_nn(const RowMatrix& samples, const TwoNnOptions& opts = {});
inline DimensionReport two_nn(const SampleSet& s, const TwoNnOptions& opts = {}) { return two_nn(s.points, opts); }

/// Closed-form 2NN regression on a set of ratios (sorted internally).
double two_nn_from_ratios(std::vector<double> mu);

struct NeighborPair {
  double r1 = 0.0;
  double r2 = 0.0;
  Eigen::Index first = -1;
  Eigen::Index second = -1;
};

/// Exact first and second Euclidean neighbours of every row. Candidates come
/// from blocked Gram products; each query is certified against a rounding
/// bound and rescanned directly when the certificate fails.
std::vector<NeighborPair> two_nearest(const RowMatrix& points);

/// Estimator on nested prefixes of one seeded shuffle of the rows.
std::vector<ScalingPoint> scaling_curve(const RowMatrix& samples, Estimator estimator,
                                        std::span<const Eigen::Index> n_grid, std::uint64_t seed);

/// Roughly log-spaced grid from lo to hi inclusive, strictly increasing.
std::vector<Eigen::Index> log_grid(Eigen::Index lo, Eigen::Index hi, int points);

/// CSV header + row: estimator,label,n,estimate,lower_bound
std::string dimension_csv_header();
std::string dimension_csv_row(const DimensionReport& r, std::int64_t label);

}  // namespace pmgeo
