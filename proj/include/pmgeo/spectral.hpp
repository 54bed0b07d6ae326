#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pmgeo/numerics.hpp"
#include "pmgeo/sample_set.hpp"

namespace pmgeo {

/// Eigenvalues below this fraction of the largest are left out of the
/// density and counted instead.
inline constexpr double kSpectrumFloor = 1e-12;

/// Histogram density over log10(eigenvalue). bin_edges has n_bins + 1
/// entries; sum(density[i] * width[i]) == 1.
struct SpectrumDensity {
  std::vector<double> bin_edges;
  std::vector<double> density;
  std::size_t n_eigenvalues = 0;  // retained
  std::size_t n_below_floor = 0;
};

/// All retained eigenvalues equal gives one bin of width 1 around the value.
SpectrumDensity spectrum_density(std::span<const double> eigenvalues, int n_bins);

/// Smallest k whose leading eigenvalues (sorted descending) reach `fraction`
/// of the total.
Eigen::Index pick_k_for_variance(std::span<const double> eigenvalues, double fraction);

/// Sum of the min(k, m) cosines of the principal angles between span(U)
/// and span(V), divided by k = U.cols(). Both inputs must have orthonormal
/// columns (error <= 1e-8). With k <= m this is the mean cosine; with k > m
/// the missing cosines count as zero.
double subspace_alignment(const Matrix& u, const Matrix& v);

struct AlignmentBaseline {
  double mean = 0.0;
  double std = 0.0;  // across trials
  double sem = 0.0;  // std / sqrt(trials)
  int trials = 0;
};

/// Monte Carlo alignment of independent Haar-random subspaces; trial t uses
/// Rng(Rng::derive(seed, t)) for U then V.
AlignmentBaseline random_alignment_baseline(Eigen::Index ambient_dim, Eigen::Index k, Eigen::Index m, int trials,
                                            std::uint64_t seed);

struct AlignmentScore {
  Eigen::Index k = 0;
  Eigen::Index m = 0;
  double score = 0.0;
  AlignmentBaseline baseline;
};

/// m = k, 2k, 4k, ... capped by and always ending at D.
std::vector<Eigen::Index> alignment_m_grid(Eigen::Index k, Eigen::Index ambient_dim);

/// Score of the top-k natural directions against the top-m model directions
/// for every m in the grid. Columns of both bases must be sorted by
/// decreasing variance.
std::vector<AlignmentScore> alignment_sweep(const Matrix& natural_basis, Eigen::Index k, const Matrix& model_basis,
                                            int trials, std::uint64_t seed);

struct RadialPsd {
  std::vector<double> k;      // integer ring radii with positive power
  std::vector<double> power;  // mean power per ring, averaged over images
  double slope = 0.0;         // fitted log-log slope, i.e. -alpha
  double alpha = 0.0;
  double fit_lo = 0.0, fit_hi = 0.0;
  double total_power = 0.0;   // mean AC power per image
};

/// Radially averaged power spectrum of mean-removed square images. Power at
/// integer frequency (fx, fy) (signed, |f| <= n/2) goes to ring
/// round(sqrt(fx^2 + fy^2)), rings 1..n/2. The slope is fitted over rings
/// 2..n/4 (2..n/2 when that leaves fewer than two rings). Throws
/// InvalidInput for non-square or mismatched images, DegenerateInput when
/// there is no AC power.
RadialPsd radial_psd(std::span<const RealGrid> images);

/// Each row of `samples` split into `channels` square side x side images
/// (channel-major), one grid per channel per row.
std::vector<RealGrid> images_from_samples(const SampleSet& samples, Eigen::Index side, Eigen::Index channels = 1);

/// Gaussian random field with power spectrum ~ |f|^-alpha, built by shaping
/// white noise in the Fourier domain (DC removed).
RealGrid power_law_field(Eigen::Index side, double alpha, std::uint64_t seed);

}  // namespace pmgeo
