#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace pmgeo {

/// Deterministic random stream.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The transforms to uniform and normal variates are implemented
/// here rather than through <random> distributions, which are
/// implementation-defined; this keeps runs bit-identical across toolchains.
///
/// Uniform: top 53 bits of one engine draw scaled by 2^-53, giving [0, 1).
/// Normal: Box-Muller on two uniforms, both outputs consumed in order.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "mt19937_64+splitmix64-split";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Seed for an independent child stream: splitmix64 finaliser applied to
  /// seed and stream index. Used to give each worker / sample run its own
  /// stream without shared state.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd uniform_vector(Eigen::Index n);  // U[0,1]^n
  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pmgeo
