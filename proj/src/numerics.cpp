#include "pmgeo/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include <lapacke.h>

#include "pmgeo/error.hpp"

namespace pmgeo {

Matrix covariance(const RowMatrix& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) throw InvalidInput("covariance: need at least 2 samples, got " + std::to_string(n));
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const RowMatrix centered = samples.rowwise() - mean;
  Matrix c = (centered.transpose() * centered) / static_cast<double>(n);
  // Enforce exact symmetry; the product is symmetric only up to rounding.
  return (0.5 * (c + c.transpose())).eval();
}

namespace {

void check_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw InvalidInput(std::string(who) + ": matrix must be square and nonempty");
  if (!m.allFinite()) throw InvalidInput(std::string(who) + ": non-finite entry");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInput(std::string(who) + ": matrix is not symmetric");
}

// Some OpenBLAS kernel sets (seen with AVX-512 builds under virtualisation)
// return silently wrong factorisations. LAPACK results are checked against
// the decomposition contract and recomputed with Eigen when they fail it.
constexpr double kDecompositionTolerance = 1e-9;

bool lapack_eig(const Matrix& m, char jobz, Vector& w, Matrix& q) {
  const auto n = static_cast<lapack_int>(m.rows());
  q = m;
  w.resize(n);
  if (LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'L', n, q.data(), n, w.data()) != 0) return false;
  if (!w.allFinite()) return false;
  if (jobz == 'N') {
    // Trace and Frobenius norm are similarity invariants.
    const double norm = std::max(m.norm(), std::numeric_limits<double>::min());
    return std::abs(w.sum() - m.trace()) <= kDecompositionTolerance * norm * std::sqrt(static_cast<double>(n)) &&
           std::abs(w.norm() - m.norm()) <= kDecompositionTolerance * norm;
  }
  if (orthonormality_error(q) > kDecompositionTolerance) return false;
  const double norm = m.norm();
  if (norm == 0.0) return true;
  return (m - q * w.asDiagonal() * q.transpose()).norm() <= kDecompositionTolerance * norm;
}

void eigen_eig(const Matrix& m, bool vectors, Vector& w, Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalFailure("sym_eig: eigensolver did not converge", 0.0);
  w = solver.eigenvalues();
  if (vectors) q = solver.eigenvectors();
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& m) {
  check_symmetric(m, "sym_eig");
  Vector w;
  Matrix q;
  if (!lapack_eig(m, 'V', w, q)) eigen_eig(m, true, w, q);
  const Eigen::Index n = w.size();
  EigenDecomposition out;
  out.eigenvalues = w.reverse();
  out.eigenvectors = q.rowwise().reverse();
  for (Eigen::Index j = 0; j < n; ++j) {
    auto col = out.eigenvectors.col(j);
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // Relative slack keeps the first of near-equal entries.
      if (std::abs(col[i]) > best * (1.0 + 1e-12)) {
        best = std::abs(col[i]);
        arg = i;
      }
    }
    if (col[arg] < 0.0) col = -col;
  }
  return out;
}

Vector sym_eigenvalues(const Matrix& m) {
  check_symmetric(m, "sym_eigenvalues");
  Vector w;
  Matrix q;
  if (!lapack_eig(m, 'N', w, q)) eigen_eig(m, false, w, q);
  return w.reverse();
}

Matrix orthonormalize(const Matrix& a) {
  const auto rows = static_cast<lapack_int>(a.rows());
  const auto cols = static_cast<lapack_int>(a.cols());
  if (cols == 0 || cols > rows) throw InvalidInput("orthonormalize: need 1 <= cols <= rows");
  if (!a.allFinite()) throw InvalidInput("orthonormalize: non-finite entry");
  Matrix q = a;
  Vector tau(cols);
  Vector rdiag;
  bool ok = LAPACKE_dgeqrf(LAPACK_COL_MAJOR, rows, cols, q.data(), rows, tau.data()) == 0;
  if (ok) {
    rdiag = q.diagonal().head(cols);
    ok = LAPACKE_dorgqr(LAPACK_COL_MAJOR, rows, cols, cols, q.data(), rows, tau.data()) == 0;
  }
  if (ok) ok = orthonormality_error(q) <= kDecompositionTolerance;
  if (!ok) {
    Eigen::HouseholderQR<Matrix> qr(a);
    q = qr.householderQ() * Matrix::Identity(rows, cols);
    rdiag = qr.matrixQR().diagonal().head(cols);
  }
  for (lapack_int j = 0; j < cols; ++j) {
    if (std::abs(rdiag[j]) <= 1e-14 * a.col(j).norm()) throw DegenerateInput("orthonormalize: input is rank deficient");
    if (rdiag[j] < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

double orthonormality_error(const Matrix& q) {
  const Matrix g = q.transpose() * q;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

LineFit fit_line(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidInput("fit_line: need >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw DegenerateInput("fit_line: all x values are equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

LineFit fit_slope_loglog(std::span<const double> xs, std::span<const double> ys, bool through_origin) {
  if (xs.size() != ys.size() || xs.size() < 2) throw InvalidInput("fit_slope_loglog: need >= 2 paired points");
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw InvalidInput("fit_slope_loglog: values must be strictly positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  if (!through_origin) return fit_line(lx, ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += lx[i] * ly[i];
    sxx += lx[i] * lx[i];
  }
  if (sxx == 0.0) throw DegenerateInput("fit_slope_loglog: all log x are zero");
  return {sxy / sxx, 0.0};
}

void CompensatedMoments::accumulate(double& sum, double& comp, double x) {
  const double t = sum + x;
  if (std::abs(sum) >= std::abs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

void CompensatedMoments::add(double x) {
  ++n_;
  accumulate(sum_, sum_c_, x);
  accumulate(sq_, sq_c_, x * x);
}

void CompensatedMoments::merge(const CompensatedMoments& other) {
  n_ += other.n_;
  accumulate(sum_, sum_c_, other.sum_);
  accumulate(sum_, sum_c_, other.sum_c_);
  accumulate(sq_, sq_c_, other.sq_);
  accumulate(sq_, sq_c_, other.sq_c_);
}

double CompensatedMoments::mean() const {
  return n_ == 0 ? 0.0 : (sum_ + sum_c_) / static_cast<double>(n_);
}

double CompensatedMoments::stddev() const {
  if (n_ < 2) return 0.0;
  const double n = static_cast<double>(n_);
  const double m = mean();
  const double var = ((sq_ + sq_c_) - n * m * m) / (n - 1.0);
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidInput("pearson: need >= 2 paired values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("pearson: constant input");
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  return pearson(ra, rb);
}

}  // namespace pmgeo
