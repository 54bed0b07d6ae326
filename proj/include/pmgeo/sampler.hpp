#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmgeo/model.hpp"
#include "pmgeo/sample_set.hpp"

namespace pmgeo {

enum class PgaOptimizer { plain, adam };

std::string to_string(PgaOptimizer o);
PgaOptimizer pga_optimizer_from_string(const std::string& s);

struct PgaConfig {
  double step_size = 0.01;
  double threshold = 0.9;  // stop once p(c|x) > threshold
  int max_iters = 2000;
  PgaOptimizer optimizer = PgaOptimizer::plain;
  double noise_sigma = 0.0;  // Gaussian noise added to every step
  double momentum = 0.0;     // heavy-ball coefficient for the plain ascent
  /// Rerun a failed plain ascent from the same start with Adam.
  bool adam_fallback = true;

  void validate() const;
};

struct PmSampleResult {
  Vector x_final;
  bool success = false;
  int iterations = 0;  // of the run that produced x_final
  double sq_dist_from_init = 0.0;
  double final_prob = 0.0;
  bool used_fallback = false;
  std::uint64_t seed = 0;
};

/// Projected gradient ascent on log p(c|x) from `init`. Noise draws (if any)
/// come from Rng(seed). Every iterate is clipped to [0,1]^D. Iteration t
/// first evaluates p at the current point and stops if p > threshold, so
/// the returned point is the first iterate past the threshold. Throws
/// NumericalFailure (snapshot = current iterate) on a non-finite gradient.
PmSampleResult pga_sample(const MlpModel& model, int c, const PgaConfig& cfg, const Vector& init, std::uint64_t seed);

/// Same, starting from a uniform point of the hypercube drawn from Rng(seed).
PmSampleResult pga_sample(const MlpModel& model, int c, const PgaConfig& cfg, std::uint64_t seed);

struct PmSampling {
  SampleSet samples;  // successes only, in run order
  std::vector<PmSampleResult> runs;
  bool low_yield = false;  // success rate below 50%
};

/// n_samples independent uniform-start runs; run i uses seed
/// Rng::derive(seed, i). Runs execute in parallel; the output order does
/// not depend on scheduling.
PmSampling sample_pm(const MlpModel& model, int c, Eigen::Index n_samples, const PgaConfig& cfg, std::uint64_t seed);

struct PmDistanceStats {
  std::string source;  // init source tag, e.g. "noise" or "data"
  double mean = 0.0;   // mean squared L2 distance init -> final, successes only
  double std = 0.0;
  std::size_t attempts = 0;
  std::size_t successes = 0;
  std::vector<double> sq_distances;
};

/// Runs PGA from each row of `inits` (row i with seed Rng::derive(seed, i))
/// and summarises init-to-final squared distances. The distance to the
/// reached point upper-bounds the distance to the manifold. Throws
/// EmptyResult when no run succeeds.
PmDistanceStats distance_to_pm(const MlpModel& model, int c, const SampleSet& inits, const PgaConfig& cfg,
                               std::uint64_t seed);

std::string pga_runs_csv_header();
std::string pga_run_csv_row(const PmSampleResult& r);

}  // namespace pmgeo
