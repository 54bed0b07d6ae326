#pragma once

#include <cstdint>
#include <vector>

#include "pmgeo/model.hpp"
#include "pmgeo/sample_set.hpp"

namespace pmgeo {

/// Synthetic K-class data in [0,1]^D, each class a flat d_nat-dimensional
/// patch plus small Gaussian noise.
///
/// The first K * block_width coordinates form a block split into K groups.
/// Class k has pattern p_k = +1 on its own group (and -1 on the others when
/// signed_pattern is set); one patch direction is p_k itself, with contrast
/// t ~ U[contrast_lo, contrast_hi], so a class point has block value
/// 0.5 + t * p_k. This is a large, sparse class signal whose strength
/// varies from point to point.
///
/// The next weak_width coordinates carry a fixed +/-weak_offset with a
/// random sign per class and coordinate: a small, dense signal present at
/// full strength in every point. Coordinates after those sit at 0.5. The
/// other d_nat - 1 patch directions are random orthonormal directions
/// outside the block, coefficients U[-h, h].
///
/// A classifier that maximises clean margin leans on the dense signal and
/// breaks under L-infinity perturbations of size weak_offset; one trained
/// against larger perturbations has to read the block.
struct SynthGeometry {
  Eigen::Index block_width = 4;
  bool signed_pattern = false;  // true: pattern is -1 on the other groups
  Eigen::Index weak_width = 24;
  double contrast_lo = 0.0;
  double contrast_hi = 0.4;
  double weak_offset = 0.025;
  double patch_half_width = 0.3;
};

struct SynthPatches {
  Eigen::Index ambient_dim = 0;
  Eigen::Index n_classes = 0;
  Eigen::Index intrinsic_dim = 0;
  SynthGeometry geometry;
  std::vector<Vector> centers;  // 0.5 + weak offsets, block left at 0.5
  std::vector<Vector> patterns;  // p_k, zero outside the block
  std::vector<Matrix> bases;     // D x (d_nat - 1), orthonormal, zero on the block
  std::vector<double> half_widths;  // per class, after any shrinking
  std::size_t shrink_retries = 0;   // patches shrunk to fit the hypercube
};

/// Drawn from Rng(seed). A patch whose box would leave [0,1]^D is shrunk by
/// 0.8 until it fits; shrink_retries counts the shrinks.
SynthPatches make_patches(Eigen::Index ambient_dim, Eigen::Index n_classes, Eigen::Index intrinsic_dim,
                          std::uint64_t seed, const SynthGeometry& geometry = {});

/// n_per_class points per class, class-major order, with N(0, noise_sigma^2)
/// noise, clipped to [0,1]^D.
LabeledData draw_points(const SynthPatches& patches, Eigen::Index n_per_class, double noise_sigma, std::uint64_t seed);

struct SynthDataset {
  SynthPatches patches;
  LabeledData data;
  double noise_sigma = 0.0;

  /// Points of one class, tagged source="data" and the class label.
  SampleSet class_samples(int c) const;
};

SynthDataset synth_dataset(Eigen::Index ambient_dim, Eigen::Index n_classes, Eigen::Index intrinsic_dim,
                           Eigen::Index n_per_class, double noise_sigma, std::uint64_t seed,
                           const SynthGeometry& geometry = {});

/// Rows of `data` with the given label / without it.
SampleSet select_class(const LabeledData& data, int label);
SampleSet exclude_class(const LabeledData& data, int label);

}  // namespace pmgeo
