#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pmgeo/sample_set.hpp"

namespace pmgeo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// C = (1/N) sum (x_i - mean)(x_i - mean)^T. Requires N >= 2.
Matrix covariance(const RowMatrix& samples);
inline Matrix covariance(const SampleSet& s) { return covariance(s.points); }

struct EigenDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column j pairs with eigenvalues[j]
};

/// Full spectrum of a symmetric matrix (LAPACK dsyevd).
///
/// Eigenvalues descending; equal eigenvalues keep LAPACK's relative order
/// reversed, which is deterministic. Each eigenvector is signed so that its
/// largest-magnitude entry (first one on ties) is positive.
EigenDecomposition sym_eig(const Matrix& m);

/// Eigenvalues only, descending. Same solver, skips the vectors.
Vector sym_eigenvalues(const Matrix& m);

/// Orthonormal basis of the column span of a full-rank D x d matrix
/// (Householder QR, R diagonal made positive so that a Gaussian input yields
/// a Haar-distributed frame).
Matrix orthonormalize(const Matrix& a);

/// Max |Q^T Q - I| entry.
double orthonormality_error(const Matrix& q);

using ComplexGrid = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealGrid = RowMatrix;

/// Unnormalised forward 2-D DFT: F(u,v) = sum_{x,y} f(x,y) e^{-2 pi i (ux/rows + vy/cols)}.
ComplexGrid fft2(const RealGrid& image);
ComplexGrid fft2(const ComplexGrid& grid);
/// Inverse with the 1/(rows*cols) factor, so ifft2(fft2(f)) == f.
ComplexGrid ifft2(const ComplexGrid& spectrum);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// OLS on (log x, log y). With through_origin the intercept is pinned at 0
/// and the slope is sum(lx*ly)/sum(lx^2).
LineFit fit_slope_loglog(std::span<const double> xs, std::span<const double> ys, bool through_origin = false);

/// OLS of y on x in linear coordinates.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

/// Neumaier-compensated running sum and sum of squares.
class CompensatedMoments {
 public:
  void add(double x);
  void merge(const CompensatedMoments& other);
  std::size_t count() const noexcept { return n_; }
  double mean() const;
  /// Sample standard deviation (n-1 denominator), 0 for n < 2.
  double stddev() const;

 private:
  static void accumulate(double& sum, double& comp, double x);
  std::size_t n_ = 0;
  double sum_ = 0.0, sum_c_ = 0.0;
  double sq_ = 0.0, sq_c_ = 0.0;
};

/// Pearson / Spearman correlation over paired samples (size >= 2).
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace pmgeo
