#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmgeo/attack.hpp"
#include "pmgeo/model.hpp"
#include "pmgeo/sampler.hpp"
#include "pmgeo/synth.hpp"

namespace pmgeo {

/// Synthetic-data pipeline: data, models, sampling and distances.
struct ToyConfig {
  Eigen::Index ambient_dim = 64;
  Eigen::Index n_classes = 10;
  Eigen::Index intrinsic_dim = 4;
  Eigen::Index n_per_class = 5000;
  Eigen::Index n_test_per_class = 300;
  double noise_sigma = 0.005;
  SynthGeometry geometry;

  std::vector<Eigen::Index> hidden = {32};
  Activation activation = Activation::tanh;
  /// Shared by every model; `adversarial` is filled per model from the
  /// epsilons below.
  TrainConfig train{.epochs = 15, .weight_decay = 0.003, .adversarial = {}, .seed = 3};
  std::vector<double> adversarial_epsilons = {0.03, 0.06};
  int adversarial_steps = 7;
  /// PGD step during training as a fraction of epsilon.
  double adversarial_step_fraction = 1.0 / 3.0;

  /// Class reported in full: n_pm_samples PM points, the PM and data
  /// sample files, the dimension scaling curves.
  int target_class = 0;
  Eigen::Index n_pm_samples = 10000;
  /// PR and distances are also computed for every class and averaged;
  /// these are the per-class counts (noise and data inits each).
  Eigen::Index n_pm_samples_per_class = 1000;
  Eigen::Index n_distance_inits = 100;
  /// Sample counts for the dimension scaling curves (empty: log grid).
  std::vector<Eigen::Index> scaling_grid;
  PgaConfig pga;
  AttackConfig attack{.target = {}, .seed = 11};  // robust-accuracy evaluation

  std::uint64_t data_seed = 7;
  std::uint64_t model_seed = 5;
  std::uint64_t sample_seed = 21;
};

struct EllipsoidConfig {
  Eigen::Index ambient_dim = 3072;
  double radius_low = 6.0;
  double radius_high = 30.0;
  /// Values of d (empty: 12-point log grid from 1 to D).
  std::vector<Eigen::Index> d_grid;
  std::size_t n_points = 200;
  std::uint64_t seed = 4;
  bool svg = true;
};

struct SpectralConfig {
  int n_bins = 40;
  double variance_fraction = 0.9;
  int baseline_trials = 200;
  /// Image layout of a sample row: channels x side x side.
  Eigen::Index image_side = 8;
  Eigen::Index image_channels = 1;
  int n_control_images = 256;
  Eigen::Index control_side = 64;  // white-noise and 1/f^2 control images
  std::uint64_t seed = 5;
};

struct ExperimentConfig {
  std::string tag = "default";
  std::filesystem::path output_dir = "out";
  ToyConfig toy;
  EllipsoidConfig ellipsoid;
  SpectralConfig spectral;

  /// Throws InvalidInput on an inconsistent value.
  void validate() const;
};

/// JSON document; every key optional, unknown keys rejected. Seeds are
/// plain integers with fixed defaults, never taken from the clock.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

/// Reads the file, then applies PMGEO_OUTPUT_DIR if set.
ExperimentConfig load_config(const std::filesystem::path& path);

/// CRC32 (hex) of the canonical JSON dump, printed in every CSV.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace pmgeo
