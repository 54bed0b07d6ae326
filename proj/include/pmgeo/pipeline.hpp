#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pmgeo/config.hpp"
#include "pmgeo/dimension.hpp"
#include "pmgeo/geometry.hpp"
#include "pmgeo/spectral.hpp"

namespace pmgeo {

/// Model names used in file names and CSV keys: "standard", then
/// "at<eps>" per adversarial epsilon (e.g. "at0.03").
std::vector<std::string> toy_model_names(const ToyConfig& t);

struct ToyModelReport {
  std::string name;
  double adversarial_epsilon = 0.0;
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  // Target class, n_pm_samples runs.
  DimensionReport pm_pr;
  DimensionReport pm_two_nn;
  double pm_success_rate = 0.0;
  bool low_yield = false;
  // Per class, n_pm_samples_per_class runs and n_distance_inits inits.
  std::vector<double> class_pm_pr;
  std::vector<double> class_dist_noise;
  std::vector<double> class_dist_data;
  double mean_class_pm_pr = 0.0;
  double mean_dist_noise = 0.0;
  double mean_dist_data = 0.0;
};

struct ToyPipelineResult {
  std::string config_hash;
  DimensionReport data_pr;      // target class, training data
  DimensionReport data_two_nn;
  std::vector<ToyModelReport> models;
};

/// Trains the standard and adversarially trained models and measures each
/// one. Files go to <output_dir>/toy. A failing stage raises an Error of
/// the original kind whose message starts with the stage name; files
/// written before the failure are kept.
ToyPipelineResult cmd_toy_pipeline(const ExperimentConfig& cfg);

/// Default d grid: 12 log-spaced values from 1 to D.
std::vector<Eigen::Index> fig3_d_grid(const EllipsoidConfig& e);

/// Every d uses the same seed, so the centre and the uniform points are
/// shared across the sweep. Writes <output_dir>/ellipsoid/fig3.csv and,
/// when enabled, fig3.svg.
std::vector<MonteCarloDistance> cmd_ellipsoid_fig3(const ExperimentConfig& cfg);

struct SpectralSetReport {
  std::string name;  // "data", a model name, or a control
  SpectrumDensity density;
  RadialPsd psd;
  std::vector<AlignmentScore> alignment;  // against the data subspace; empty for controls
};

struct SpectralSuiteResult {
  Eigen::Index k = 0;  // data directions explaining variance_fraction
  std::vector<SpectralSetReport> sets;
};

/// Reads the data and PM sample sets written by cmd_toy_pipeline and adds
/// white-noise and 1/f^2 controls. Writes <output_dir>/spectral. Missing
/// inputs raise InvalidInput naming the path.
SpectralSuiteResult cmd_spectral_suite(const ExperimentConfig& cfg);

}  // namespace pmgeo
