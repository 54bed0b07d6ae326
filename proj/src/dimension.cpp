#include "pmgeo/dimension.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "pmgeo/error.hpp"
#include "pmgeo/numerics.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

std::string to_string(Estimator e) {
  return e == Estimator::participation_ratio ? "PR" : "2NN";
}

Estimator estimator_from_string(const std::string& s) {
  if (s == "PR" || s == "pr") return Estimator::participation_ratio;
  if (s == "2NN" || s == "2nn" || s == "twonn") return Estimator::two_nn;
  throw InvalidInput("unknown estimator '" + s + "' (expected PR or 2NN)");
}

double participation_ratio(std::span<const double> eigenvalues) {
  double sum = 0.0, sq = 0.0;
  for (double l : eigenvalues) {
    if (!(l >= 0.0)) throw InvalidInput("participation_ratio: negative or non-finite eigenvalue");
    sum += l;
    sq += l * l;
  }
  if (sq == 0.0) throw DegenerateInput("participation_ratio: all eigenvalues are zero");
  return sum * sum / sq;
}

namespace {

double pr_estimate(const RowMatrix& samples) {
  Vector ev = sym_eigenvalues(covariance(samples));
  // Rounding can leave eigenvalues of order -eps*trace; they carry no variance.
  for (auto& l : ev) l = std::max(l, 0.0);
  return participation_ratio(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())));
}

std::vector<Eigen::Index> shuffled_order(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

RowMatrix take_rows(const RowMatrix& m, const std::vector<Eigen::Index>& order, Eigen::Index n) {
  RowMatrix out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

DimensionReport pr_of_samples(const RowMatrix& samples, std::uint64_t seed) {
  const Eigen::Index n = samples.rows();
  if (n < 2) throw InvalidInput("pr_of_samples: need at least 2 samples");
  DimensionReport r;
  r.estimator = Estimator::participation_ratio;
  r.n_samples = n;
  r.estimate = pr_estimate(samples);
  if (n / 2 >= 2) {
    const auto order = shuffled_order(n, seed);
    const double half = pr_estimate(take_rows(samples, order, n / 2));
    r.scaling = {{n / 2, half}, {n, r.estimate}};
    r.is_lower_bound = std::abs(r.estimate - half) / r.estimate >= kPrPlateauTolerance;
  } else {
    r.scaling = {{n, r.estimate}};
    r.is_lower_bound = true;
  }
  return r;
}

std::vector<NeighborPair> two_nearest(const RowMatrix& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index dim = points.cols();
  if (n < 3) throw InvalidInput("two_nearest: need at least 3 points");
  std::vector<NeighborPair> out(static_cast<std::size_t>(n));

  const Vector sq = points.rowwise().squaredNorm();
  const double sq_max = sq.maxCoeff();
  constexpr int kCandidates = 4;
  const double eps = std::numeric_limits<double>::epsilon();
  const Eigen::Index block = std::clamp<Eigen::Index>((Eigen::Index{1} << 22) / n, 1, 256);

  auto exact_sq = [&](Eigen::Index i, Eigen::Index j) { return (points.row(i) - points.row(j)).squaredNorm(); };

  auto full_scan = [&](Eigen::Index i) {
    NeighborPair p{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), -1, -1};
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = exact_sq(i, j);
      if (d < p.r1) {
        p.r2 = p.r1;
        p.second = p.first;
        p.r1 = d;
        p.first = j;
      } else if (d < p.r2) {
        p.r2 = d;
        p.second = j;
      }
    }
    return p;
  };

  Matrix gram;
  for (Eigen::Index start = 0; start < n; start += block) {
    const Eigen::Index rows = std::min(block, n - start);
    gram.noalias() = points.middleRows(start, rows) * points.transpose();
    for (Eigen::Index b = 0; b < rows; ++b) {
      const Eigen::Index i = start + b;
      std::array<double, kCandidates> cd;
      std::array<Eigen::Index, kCandidates> ci;
      cd.fill(std::numeric_limits<double>::infinity());
      ci.fill(-1);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = sq[i] + sq[j] - 2.0 * gram(b, j);
        if (d < cd[kCandidates - 1]) {
          int k = kCandidates - 1;
          while (k > 0 && cd[k - 1] > d) {
            cd[k] = cd[k - 1];
            ci[k] = ci[k - 1];
            --k;
          }
          cd[k] = d;
          ci[k] = j;
        }
      }
      // Exact distances among the candidates.
      NeighborPair p{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), -1, -1};
      for (int k = 0; k < kCandidates; ++k) {
        if (ci[k] < 0) continue;
        const double d = exact_sq(i, ci[k]);
        const bool before1 = d < p.r1 || (d == p.r1 && ci[k] < p.first);
        const bool before2 = d < p.r2 || (d == p.r2 && ci[k] < p.second);
        if (before1) {
          p.r2 = p.r1;
          p.second = p.first;
          p.r1 = d;
          p.first = ci[k];
        } else if (before2) {
          p.r2 = d;
          p.second = ci[k];
        }
      }
      // Any non-candidate j has approx >= cd.back(), so exact >= cd.back() - bound.
      const double bound = 4.0 * static_cast<double>(dim + 4) * eps * (sq[i] + sq_max);
      const bool certified = ci[kCandidates - 1] < 0 || cd[kCandidates - 1] - bound > p.r2;
      out[static_cast<std::size_t>(i)] = certified ? p : full_scan(i);
    }
  }
  for (auto& p : out) {
    p.r1 = std::sqrt(p.r1);
    p.r2 = std::sqrt(p.r2);
  }
  return out;
}

double two_nn_from_ratios(std::vector<double> mu) {
  const std::size_t n = mu.size();
  if (n < 3) throw DegenerateInput("two_nn: fewer than 3 usable ratios");
  std::stable_sort(mu.begin(), mu.end());
  double num = 0.0, den = 0.0;
  const double nd = static_cast<double>(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double lm = std::log(mu[i - 1]);
    num += lm * std::log(1.0 - static_cast<double>(i) / nd);
    den += lm * lm;
  }
  if (den == 0.0) throw DegenerateInput("two_nn: all neighbour ratios equal 1");
  return -num / den;
}

DimensionReport two_nn(const RowMatrix& samples, const TwoNnOptions& opts) {
  const auto pairs = two_nearest(samples);
  // Sorting (mu, index) pairs makes tie order explicit.
  std::vector<std::pair<double, Eigen::Index>> ratios;
  ratios.reserve(pairs.size());
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].r1 == 0.0) {
      if (opts.duplicates == DuplicatePolicy::raise)
        throw InvalidInput("two_nn: duplicate point at row " + std::to_string(i));
      ++dropped;
      continue;
    }
    ratios.emplace_back(pairs[i].r2 / pairs[i].r1, static_cast<Eigen::Index>(i));
  }
  std::sort(ratios.begin(), ratios.end());
  std::vector<double> mu;
  mu.reserve(ratios.size());
  for (const auto& [m, idx] : ratios) mu.push_back(m);

  DimensionReport r;
  r.estimator = Estimator::two_nn;
  r.n_samples = samples.rows();
  r.estimate = two_nn_from_ratios(std::move(mu));
  r.is_lower_bound = true;
  r.dropped_duplicates = dropped;
  r.scaling = {{r.n_samples, r.estimate}};
  return r;
}

std::vector<ScalingPoint> scaling_curve(const RowMatrix& samples, Estimator estimator,
                                        std::span<const Eigen::Index> n_grid, std::uint64_t seed) {
  if (n_grid.empty()) throw InvalidInput("scaling_curve: empty grid");
  const Eigen::Index min_n = estimator == Estimator::two_nn ? 3 : 2;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] > samples.rows())
      throw InvalidInput("scaling_curve: grid value " + std::to_string(n_grid[k]) + " exceeds N=" +
                         std::to_string(samples.rows()));
    if (n_grid[k] < min_n) throw InvalidInput("scaling_curve: grid value too small");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw InvalidInput("scaling_curve: grid must be strictly increasing");
  }
  const auto order = shuffled_order(samples.rows(), seed);
  std::vector<ScalingPoint> curve;
  for (Eigen::Index n : n_grid) {
    const RowMatrix prefix = take_rows(samples, order, n);
    const double est = estimator == Estimator::participation_ratio ? pr_estimate(prefix) : two_nn(prefix).estimate;
    curve.push_back({n, est});
  }
  return curve;
}

std::vector<Eigen::Index> log_grid(Eigen::Index lo, Eigen::Index hi, int points) {
  if (lo < 1 || hi < lo || points < 1) throw InvalidInput("log_grid: need 1 <= lo <= hi and points >= 1");
  std::vector<Eigen::Index> g;
  if (points == 1 || lo == hi) return {hi};
  const double a = std::log(static_cast<double>(lo));
  const double b = std::log(static_cast<double>(hi));
  for (int k = 0; k < points; ++k) {
    auto v = static_cast<Eigen::Index>(std::llround(std::exp(a + (b - a) * k / (points - 1))));
    v = std::clamp(v, lo, hi);
    if (g.empty() || v > g.back()) g.push_back(v);
  }
  if (g.back() != hi) g.push_back(hi);
  return g;
}

std::string dimension_csv_header() { return "estimator,label,n,estimate,lower_bound"; }

std::string dimension_csv_row(const DimensionReport& r, std::int64_t label) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(r.estimator) << ',' << label << ',' << r.n_samples << ',' << r.estimate << ','
     << (r.is_lower_bound ? 1 : 0);
  return os.str();
}

}  // namespace pmgeo
