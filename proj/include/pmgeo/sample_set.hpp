#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace pmgeo {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SampleMeta {
  std::uint64_t seed = 0;
  std::string source;      // e.g. "pm", "data", "noise"
  std::int64_t label = -1;  // class label, -1 when not class-specific
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
};

/// N points in R^D, one per row.
struct SampleSet {
  RowMatrix points;
  SampleMeta meta;

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }
};

}  // namespace pmgeo
