#include "pmgeo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/SVD>

#include "pmgeo/error.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

SpectrumDensity spectrum_density(std::span<const double> eigenvalues, int n_bins) {
  if (n_bins < 1) throw InvalidInput("spectrum_density: n_bins must be >= 1");
  if (eigenvalues.empty()) throw InvalidInput("spectrum_density: no eigenvalues");
  double top = 0.0;
  for (double l : eigenvalues) {
    if (!std::isfinite(l)) throw InvalidInput("spectrum_density: non-finite eigenvalue");
    top = std::max(top, l);
  }
  SpectrumDensity out;
  std::vector<double> logs;
  for (double l : eigenvalues) {
    if (top > 0.0 && l >= kSpectrumFloor * top)
      logs.push_back(std::log10(l));
    else
      ++out.n_below_floor;
  }
  if (logs.empty()) throw DegenerateInput("spectrum_density: every eigenvalue is below the floor");
  out.n_eigenvalues = logs.size();
  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    out.bin_edges = {lo - 0.5, lo + 0.5};
    out.density = {1.0};
    return out;
  }
  const double width = (hi - lo) / n_bins;
  out.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int i = 0; i <= n_bins; ++i) out.bin_edges[static_cast<std::size_t>(i)] = lo + i * width;
  out.bin_edges.back() = hi;
  std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
  for (double v : logs) {
    auto b = static_cast<std::ptrdiff_t>((v - lo) / width);
    b = std::clamp<std::ptrdiff_t>(b, 0, n_bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  out.density.resize(counts.size());
  const double n = static_cast<double>(logs.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out.density[i] = counts[i] / (n * (out.bin_edges[i + 1] - out.bin_edges[i]));
  return out;
}

Eigen::Index pick_k_for_variance(std::span<const double> eigenvalues, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidInput("pick_k_for_variance: fraction must lie in (0,1]");
  if (eigenvalues.empty()) throw InvalidInput("pick_k_for_variance: no eigenvalues");
  std::vector<double> l(eigenvalues.begin(), eigenvalues.end());
  for (double& v : l) v = std::max(v, 0.0);
  std::sort(l.begin(), l.end(), std::greater<>());
  double total = 0.0;
  for (double v : l) total += v;
  if (!(total > 0.0)) throw DegenerateInput("pick_k_for_variance: zero total variance");
  // Slack of a few ulps so that e.g. 9 of 10 equal values reach 0.9.
  const double target = fraction * total * (1.0 - 1e-12);
  double acc = 0.0;
  for (std::size_t k = 0; k < l.size(); ++k) {
    acc += l[k];
    if (acc >= target) return static_cast<Eigen::Index>(k + 1);
  }
  return static_cast<Eigen::Index>(l.size());
}

double subspace_alignment(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows()) throw InvalidInput("subspace_alignment: ambient dimensions differ");
  if (u.cols() < 1 || v.cols() < 1) throw InvalidInput("subspace_alignment: empty basis");
  if (u.cols() > u.rows() || v.cols() > v.rows()) throw InvalidInput("subspace_alignment: more columns than rows");
  if (orthonormality_error(u) > 1e-8 || orthonormality_error(v) > 1e-8)
    throw InvalidInput("subspace_alignment: basis columns are not orthonormal");
  // The full space contains every subspace.
  if (v.cols() == v.rows()) return 1.0;
  const Matrix c = u.transpose() * v;
  const Vector s = Eigen::JacobiSVD<Matrix>(c).singularValues();
  const double score = s.sum() / static_cast<double>(u.cols());
  return std::clamp(score, 0.0, 1.0);
}

AlignmentBaseline random_alignment_baseline(Eigen::Index ambient_dim, Eigen::Index k, Eigen::Index m, int trials,
                                            std::uint64_t seed) {
  if (k < 1 || m < 1 || k > ambient_dim || m > ambient_dim)
    throw InvalidInput("random_alignment_baseline: need 1 <= k, m <= D");
  if (trials < 1) throw InvalidInput("random_alignment_baseline: trials must be >= 1");
  CompensatedMoments mom;
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    const Matrix u = orthonormalize(rng.normal_matrix(ambient_dim, k));
    const Matrix v = orthonormalize(rng.normal_matrix(ambient_dim, m));
    mom.add(subspace_alignment(u, v));
  }
  AlignmentBaseline b;
  b.trials = trials;
  b.mean = mom.mean();
  b.std = mom.stddev();
  b.sem = b.std / std::sqrt(static_cast<double>(trials));
  return b;
}

std::vector<Eigen::Index> alignment_m_grid(Eigen::Index k, Eigen::Index ambient_dim) {
  if (k < 1 || k > ambient_dim) throw InvalidInput("alignment_m_grid: need 1 <= k <= D");
  std::vector<Eigen::Index> grid;
  for (Eigen::Index m = k; m < ambient_dim; m *= 2) grid.push_back(m);
  grid.push_back(ambient_dim);
  return grid;
}

std::vector<AlignmentScore> alignment_sweep(const Matrix& natural_basis, Eigen::Index k, const Matrix& model_basis,
                                            int trials, std::uint64_t seed) {
  const Eigen::Index D = natural_basis.rows();
  if (model_basis.rows() != D || model_basis.cols() != D || natural_basis.cols() < k)
    throw InvalidInput("alignment_sweep: basis shapes do not match");
  std::vector<AlignmentScore> out;
  const Matrix u = natural_basis.leftCols(k);
  for (Eigen::Index m : alignment_m_grid(k, D)) {
    AlignmentScore s;
    s.k = k;
    s.m = m;
    s.score = subspace_alignment(u, model_basis.leftCols(m));
    s.baseline = random_alignment_baseline(D, k, m, trials, Rng::derive(seed, static_cast<std::uint64_t>(m)));
    out.push_back(s);
  }
  return out;
}

namespace {

Eigen::Index signed_freq(Eigen::Index i, Eigen::Index n) { return i <= n / 2 ? i : i - n; }

}  // namespace

RadialPsd radial_psd(std::span<const RealGrid> images) {
  if (images.empty()) throw InvalidInput("radial_psd: no images");
  const Eigen::Index n = images.front().rows();
  for (const auto& im : images)
    if (im.rows() != im.cols() || im.rows() != n) throw InvalidInput("radial_psd: images must be equal-size squares");
  if (n < 4) throw InvalidInput("radial_psd: images must be at least 4 x 4");
  const Eigen::Index rings = n / 2;
  // Ring membership depends only on n.
  std::vector<Eigen::Index> ring(static_cast<std::size_t>(n * n), 0);
  std::vector<double> ring_size(static_cast<std::size_t>(rings + 1), 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double fy = static_cast<double>(signed_freq(i, n)), fx = static_cast<double>(signed_freq(j, n));
      const auto r = static_cast<Eigen::Index>(std::lround(std::sqrt(fx * fx + fy * fy)));
      ring[static_cast<std::size_t>(i * n + j)] = r;
      if (r <= rings) ring_size[static_cast<std::size_t>(r)] += 1.0;
    }

  std::vector<double> mean_power(static_cast<std::size_t>(rings + 1), 0.0);
  double total = 0.0;
  for (const auto& im : images) {
    if (!im.allFinite()) throw InvalidInput("radial_psd: non-finite pixel");
    const RealGrid centred = im.array() - im.mean();
    const ComplexGrid f = fft2(centred);
    std::vector<double> acc(static_cast<std::size_t>(rings + 1), 0.0);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p = std::norm(f(i, j));
        total += p;
        const Eigen::Index r = ring[static_cast<std::size_t>(i * n + j)];
        if (r >= 1 && r <= rings) acc[static_cast<std::size_t>(r)] += p;
      }
    for (Eigen::Index r = 1; r <= rings; ++r)
      mean_power[static_cast<std::size_t>(r)] += acc[static_cast<std::size_t>(r)] / ring_size[static_cast<std::size_t>(r)];
  }
  const double n_img = static_cast<double>(images.size());
  RadialPsd out;
  out.total_power = total / n_img;
  // Relative floor: rounding leaves ~1e-30 power in a constant image.
  double peak = 0.0;
  for (Eigen::Index r = 1; r <= rings; ++r) peak = std::max(peak, mean_power[static_cast<std::size_t>(r)] / n_img);
  const double pixel_scale = [&] {
    double s = 0.0;
    for (const auto& im : images) s = std::max(s, im.cwiseAbs().maxCoeff());
    return s;
  }();
  const double floor = 1e-24 * std::max(1.0, pixel_scale * pixel_scale) * static_cast<double>(n * n);
  if (!(peak > floor)) throw DegenerateInput("radial_psd: images carry no AC power");
  for (Eigen::Index r = 1; r <= rings; ++r) {
    const double p = mean_power[static_cast<std::size_t>(r)] / n_img;
    if (p > floor) {
      out.k.push_back(static_cast<double>(r));
      out.power.push_back(p);
    }
  }

  auto band = [&](double lo, double hi) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < out.k.size(); ++i)
      if (out.k[i] >= lo && out.k[i] <= hi) {
        xs.push_back(out.k[i]);
        ys.push_back(out.power[i]);
      }
    return std::pair{xs, ys};
  };
  out.fit_lo = 2.0;
  out.fit_hi = static_cast<double>(n / 4);
  auto [xs, ys] = band(out.fit_lo, out.fit_hi);
  if (xs.size() < 2) {
    out.fit_hi = static_cast<double>(rings);
    std::tie(xs, ys) = band(out.fit_lo, out.fit_hi);
  }
  if (xs.size() < 2) throw DegenerateInput("radial_psd: too few rings with power to fit a slope");
  out.slope = fit_slope_loglog(xs, ys).slope;
  out.alpha = -out.slope;
  return out;
}

std::vector<RealGrid> images_from_samples(const SampleSet& samples, Eigen::Index side, Eigen::Index channels) {
  if (side < 1 || channels < 1 || samples.dim() != side * side * channels)
    throw InvalidInput("images_from_samples: row length is not channels * side^2");
  std::vector<RealGrid> out;
  out.reserve(static_cast<std::size_t>(samples.size() * channels));
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    for (Eigen::Index ch = 0; ch < channels; ++ch) {
      RealGrid g(side, side);
      for (Eigen::Index r = 0; r < side; ++r)
        for (Eigen::Index c = 0; c < side; ++c) g(r, c) = samples.points(i, ch * side * side + r * side + c);
      out.push_back(std::move(g));
    }
  return out;
}

RealGrid power_law_field(Eigen::Index side, double alpha, std::uint64_t seed) {
  if (side < 2) throw InvalidInput("power_law_field: side must be >= 2");
  Rng rng(seed);
  RealGrid noise(side, side);
  for (Eigen::Index i = 0; i < side; ++i)
    for (Eigen::Index j = 0; j < side; ++j) noise(i, j) = rng.normal();
  ComplexGrid f = fft2(noise);
  for (Eigen::Index i = 0; i < side; ++i)
    for (Eigen::Index j = 0; j < side; ++j) {
      const double fy = static_cast<double>(signed_freq(i, side)), fx = static_cast<double>(signed_freq(j, side));
      const double r = std::sqrt(fx * fx + fy * fy);
      f(i, j) *= r > 0.0 ? std::pow(r, -alpha / 2.0) : 0.0;
    }
  return ifft2(f).real();
}

}  // namespace pmgeo
