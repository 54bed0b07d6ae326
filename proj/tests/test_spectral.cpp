#include <cmath>

#include "doctest.h"

#include "pmgeo/error.hpp"
#include "pmgeo/numerics.hpp"
#include "pmgeo/rng.hpp"
#include "pmgeo/spectral.hpp"

using namespace pmgeo;

namespace {

double integral(const SpectrumDensity& s) {
  double total = 0;
  for (std::size_t i = 0; i < s.density.size(); ++i) total += s.density[i] * (s.bin_edges[i + 1] - s.bin_edges[i]);
  return total;
}

Matrix haar(Eigen::Index D, Eigen::Index k, std::uint64_t seed) { return orthonormalize(Rng(seed).normal_matrix(D, k)); }

}  // namespace

TEST_CASE("spectrum density") {
  std::vector<double> flat(10, 3.0);
  const SpectrumDensity one = spectrum_density(flat, 20);
  int occupied = 0;
  for (std::size_t i = 0; i < one.density.size(); ++i)
    if (one.density[i] > 0) {
      ++occupied;
      CHECK(one.density[i] * (one.bin_edges[i + 1] - one.bin_edges[i]) == doctest::Approx(1.0));
    }
  CHECK(occupied == 1);

  // isotropic sample spectrum: narrow
  Rng rng(1);
  RowMatrix iso(5000, 40);
  for (Eigen::Index i = 0; i < iso.size(); ++i) iso.data()[i] = rng.normal();
  const Vector ev = sym_eigenvalues(covariance(iso));
  const SpectrumDensity narrow = spectrum_density({ev.data(), 40}, 30);
  CHECK(ev.maxCoeff() / ev.minCoeff() < 1.5);
  CHECK(std::abs(integral(narrow) - 1.0) < 1e-6);

  // heavy-tailed low-rank construction: lambda_j = 10^(-j/5)
  std::vector<double> tail;
  for (int j = 0; j < 40; ++j) tail.push_back(std::pow(10.0, -j / 5.0));
  const SpectrumDensity broad = spectrum_density(tail, 30);
  CHECK(broad.bin_edges.back() - broad.bin_edges.front() >= 4.0);
  CHECK(std::abs(integral(broad) - 1.0) < 1e-6);
  for (double d : broad.density) CHECK(d >= 0.0);

  std::vector<double> with_zero = {1.0, 0.5, 0.0, 1e-20};
  const SpectrumDensity floor = spectrum_density(with_zero, 5);
  CHECK(floor.n_eigenvalues == 2);
  CHECK(floor.n_below_floor == 2);
  std::vector<double> zeros(4, 0.0);
  CHECK_THROWS_AS(spectrum_density(zeros, 5), DegenerateInput);
}

TEST_CASE("pick k for variance") {
  std::vector<double> a = {9, 1};
  CHECK(pick_k_for_variance(a, 0.9) == 1);
  std::vector<double> u(10, 1.0);
  CHECK(pick_k_for_variance(u, 0.95) == 10);
  CHECK(pick_k_for_variance(u, 0.3) == 3);
  std::vector<double> unsorted = {1, 9};
  CHECK(pick_k_for_variance(unsorted, 0.9) == 1);
}

TEST_CASE("alignment identities") {
  const Matrix u = haar(30, 5, 2);
  CHECK(subspace_alignment(u, u) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix full = haar(30, 30, 3);
  CHECK(subspace_alignment(u, full) == doctest::Approx(1.0).epsilon(1e-12));
  // orthogonal complement pieces
  const Matrix q = haar(30, 10, 4);
  CHECK(subspace_alignment(q.leftCols(5), q.rightCols(5)) < 1e-12);
  // k > m: missing cosines count as zero
  CHECK(subspace_alignment(q.leftCols(4), q.leftCols(2)) == doctest::Approx(0.5));

  Matrix bad = u;
  bad(0, 0) += 1e-6;
  CHECK_THROWS_AS(subspace_alignment(bad, u), InvalidInput);
}

TEST_CASE("alignment invariances") {
  const Matrix u = haar(25, 4, 5), v = haar(25, 4, 6), w = haar(25, 9, 7);
  const Matrix r4 = haar(4, 4, 8), r9 = haar(9, 9, 9);
  CHECK(subspace_alignment(u * r4, v) == doctest::Approx(subspace_alignment(u, v)).epsilon(1e-12));
  CHECK(subspace_alignment(u, w * r9) == doctest::Approx(subspace_alignment(u, w)).epsilon(1e-12));
  CHECK(subspace_alignment(u, v) == doctest::Approx(subspace_alignment(v, u)).epsilon(1e-12));

  // nesting: enlarging V never lowers the sum of squared cosines
  auto sq = [](const Matrix& a, const Matrix& b) { return (a.transpose() * b).squaredNorm(); };
  const Matrix big = haar(25, 12, 10);
  double prev = 0;
  for (Eigen::Index m = 1; m <= 12; ++m) {
    const double s = sq(u, big.leftCols(m));
    CHECK(s >= prev - 1e-12);
    prev = s;
  }
}

TEST_CASE("random alignment baseline") {
  const AlignmentBaseline full = random_alignment_baseline(12, 12, 12, 5, 1);
  CHECK(full.mean == doctest::Approx(1.0));
  const AlignmentBaseline b = random_alignment_baseline(100, 10, 10, 200, 2);
  CHECK(b.sem < 0.01);
  CHECK(b.sem == doctest::Approx(b.std / std::sqrt(200.0)));
  CHECK(b.trials == 200);
  double prev = 0;
  for (Eigen::Index m : alignment_m_grid(10, 100)) {
    const AlignmentBaseline s = random_alignment_baseline(100, 10, m, 50, 3);
    CHECK(s.mean >= prev);
    prev = s.mean;
  }
  CHECK(prev == doctest::Approx(1.0));
  const std::vector<Eigen::Index> grid = alignment_m_grid(10, 100);
  CHECK(grid == std::vector<Eigen::Index>{10, 20, 40, 80, 100});
  CHECK(random_alignment_baseline(50, 5, 5, 20, 4).mean == random_alignment_baseline(50, 5, 5, 20, 4).mean);
}

TEST_CASE("alignment sweep against itself is 1") {
  const Matrix basis = haar(40, 40, 11);
  for (const AlignmentScore& s : alignment_sweep(basis, 6, basis, 20, 12)) {
    CHECK(s.score == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.k == 6);
    CHECK(s.baseline.mean <= 1.0);
  }
}

TEST_CASE("radial PSD on known spectra") {
  Rng rng(13);
  std::vector<RealGrid> white(64);
  for (auto& g : white) {
    g.resize(64, 64);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  }
  const RadialPsd w = radial_psd(white);
  CHECK(std::abs(w.alpha) < 0.1);
  CHECK(w.fit_lo == 2);
  CHECK(w.fit_hi == 16);
  for (std::size_t i = 1; i < w.k.size(); ++i) CHECK(w.k[i] > w.k[i - 1]);
  for (double p : w.power) CHECK(p > 0);

  std::vector<RealGrid> pink;
  for (std::uint64_t s = 0; s < 64; ++s) pink.push_back(power_law_field(64, 2.0, s));
  CHECK(std::abs(radial_psd(pink).alpha - 2.0) < 0.15);

  std::vector<RealGrid> flat = {RealGrid::Constant(16, 16, 0.4)};
  CHECK_THROWS_AS(radial_psd(flat), DegenerateInput);
  std::vector<RealGrid> rect = {RealGrid::Ones(8, 16)};
  CHECK_THROWS_AS(radial_psd(rect), InvalidInput);
}

TEST_CASE("radial PSD is rotation invariant") {
  Rng rng(14);
  RealGrid g(32, 32);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.uniform();
  // 90 degree rotation
  RealGrid r(32, 32);
  for (int x = 0; x < 32; ++x)
    for (int y = 0; y < 32; ++y) r(y, 31 - x) = g(x, y);
  std::vector<RealGrid> a = {g}, b = {r};
  const RadialPsd pa = radial_psd(a), pb = radial_psd(b);
  REQUIRE(pa.power.size() == pb.power.size());
  for (std::size_t i = 0; i < pa.power.size(); ++i) CHECK(pa.power[i] == doctest::Approx(pb.power[i]).epsilon(1e-12));
}

TEST_CASE("images from samples") {
  SampleSet s;
  s.points = RowMatrix::Zero(2, 2 * 16);
  s.points(1, 16 + 5) = 7.0;  // second row, second channel, (1, 1)
  const auto imgs = images_from_samples(s, 4, 2);
  REQUIRE(imgs.size() == 4);
  CHECK(imgs[3](1, 1) == 7.0);
  CHECK_THROWS_AS(images_from_samples(s, 5, 2), InvalidInput);
}
