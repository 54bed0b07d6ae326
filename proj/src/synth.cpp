#include "pmgeo/synth.hpp"

#include "pmgeo/rng.hpp"

namespace pmgeo {

SynthPatches make_patches(Eigen::Index ambient_dim, Eigen::Index n_classes, Eigen::Index intrinsic_dim,
                          std::uint64_t seed, const SynthGeometry& g) {
  if (n_classes < 2) throw InvalidInput("synth_dataset: need at least 2 classes");
  const Eigen::Index block = g.block_width * n_classes;
  if (g.block_width < 1 || block >= ambient_dim) throw InvalidInput("synth_dataset: block does not fit in D");
  if (g.weak_width < 0 || g.weak_width > ambient_dim - block)
    throw InvalidInput("synth_dataset: weak_width exceeds the coordinates after the block");
  if (intrinsic_dim < 1 || intrinsic_dim - 1 > ambient_dim - block)
    throw InvalidInput("synth_dataset: need 1 <= d_nat <= D - block + 1");
  if (!(g.contrast_lo >= 0.0 && g.contrast_lo <= g.contrast_hi && g.contrast_hi <= 0.5))
    throw InvalidInput("synth_dataset: contrast range must satisfy 0 <= lo <= hi <= 0.5");
  if (!(g.weak_offset >= 0.0 && g.weak_offset < 0.5) || !(g.patch_half_width >= 0.0))
    throw InvalidInput("synth_dataset: bad patch geometry");

  Rng rng(seed);
  SynthPatches p;
  p.ambient_dim = ambient_dim;
  p.n_classes = n_classes;
  p.intrinsic_dim = intrinsic_dim;
  p.geometry = g;
  const Eigen::Index rest = ambient_dim - block;
  for (Eigen::Index k = 0; k < n_classes; ++k) {
    Vector center = Vector::Constant(ambient_dim, 0.5);
    for (Eigen::Index i = block; i < block + g.weak_width; ++i)
      center[i] += g.weak_offset * ((rng.next_u64() >> 63) ? 1.0 : -1.0);
    Vector pattern = Vector::Zero(ambient_dim);
    for (Eigen::Index i = 0; i < block; ++i) pattern[i] = i / g.block_width == k ? 1.0 : (g.signed_pattern ? -1.0 : 0.0);
    Matrix basis = Matrix::Zero(ambient_dim, intrinsic_dim - 1);
    if (intrinsic_dim > 1) basis.bottomRows(rest) = orthonormalize(rng.normal_matrix(rest, intrinsic_dim - 1));
    // Per-coordinate reach of the box is h * sum_j |B_ij|.
    const Vector reach = basis.cwiseAbs().rowwise().sum();
    double h = g.patch_half_width;
    while (((center.array() + h * reach.array()) > 1.0).any() || ((center.array() - h * reach.array()) < 0.0).any()) {
      h *= 0.8;
      ++p.shrink_retries;
    }
    p.centers.push_back(std::move(center));
    p.patterns.push_back(std::move(pattern));
    p.bases.push_back(std::move(basis));
    p.half_widths.push_back(h);
  }
  return p;
}

LabeledData draw_points(const SynthPatches& patches, Eigen::Index n_per_class, double noise_sigma, std::uint64_t seed) {
  if (n_per_class < 1) throw InvalidInput("synth_dataset: n_per_class must be positive");
  if (!(noise_sigma >= 0.0)) throw InvalidInput("synth_dataset: noise_sigma must be >= 0");
  Rng rng(seed);
  const Eigen::Index D = patches.ambient_dim;
  const SynthGeometry& g = patches.geometry;
  LabeledData out;
  out.points.resize(patches.n_classes * n_per_class, D);
  out.labels.reserve(static_cast<std::size_t>(out.points.rows()));
  Eigen::Index row = 0;
  for (Eigen::Index k = 0; k < patches.n_classes; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    for (Eigen::Index n = 0; n < n_per_class; ++n, ++row) {
      const double t = rng.uniform(g.contrast_lo, g.contrast_hi);
      Vector u(patches.intrinsic_dim - 1);
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = rng.uniform(-patches.half_widths[ks], patches.half_widths[ks]);
      Vector x = patches.centers[ks] + t * patches.patterns[ks] + patches.bases[ks] * u;
      if (noise_sigma > 0.0)
        for (Eigen::Index i = 0; i < D; ++i) x[i] += noise_sigma * rng.normal();
      out.points.row(row) = x.cwiseMax(0.0).cwiseMin(1.0).transpose();
      out.labels.push_back(static_cast<int>(k));
    }
  }
  return out;
}

SampleSet SynthDataset::class_samples(int c) const {
  SampleSet s = select_class(data, c);
  s.meta.source = "data";
  return s;
}

SynthDataset synth_dataset(Eigen::Index ambient_dim, Eigen::Index n_classes, Eigen::Index intrinsic_dim,
                           Eigen::Index n_per_class, double noise_sigma, std::uint64_t seed,
                           const SynthGeometry& geometry) {
  SynthDataset ds;
  ds.patches = make_patches(ambient_dim, n_classes, intrinsic_dim, Rng::derive(seed, 0), geometry);
  ds.data = draw_points(ds.patches, n_per_class, noise_sigma, Rng::derive(seed, 1));
  ds.noise_sigma = noise_sigma;
  return ds;
}

namespace {

SampleSet filter(const LabeledData& data, int label, bool keep_label) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    if ((data.labels[i] == label) == keep_label) rows.push_back(static_cast<Eigen::Index>(i));
  SampleSet s;
  s.points.resize(static_cast<Eigen::Index>(rows.size()), data.points.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) s.points.row(static_cast<Eigen::Index>(i)) = data.points.row(rows[i]);
  s.meta.label = keep_label ? label : -1;
  return s;
}

}  // namespace

SampleSet select_class(const LabeledData& data, int label) { return filter(data, label, true); }
SampleSet exclude_class(const LabeledData& data, int label) { return filter(data, label, false); }

}  // namespace pmgeo
