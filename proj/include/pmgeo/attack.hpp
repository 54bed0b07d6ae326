#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmgeo/model.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

struct AttackConfig {
  double epsilon = 0.06;  // L-infinity radius
  int steps = 20;
  double step_size = 0.015;
  int restarts = 1;
  /// Targeted mode ascends log p(target|x) and succeeds on argmax == target.
  std::optional<int> target;
  std::uint64_t seed = 0;

  /// epsilon in [0, 0.5), step_size <= epsilon (unless epsilon == 0),
  /// steps >= 0, restarts >= 1.
  void validate() const;
};

struct AttackOutcome {
  Vector adversarial;
  int iterations = 0;  // step at which the prediction flipped
  int restart = 0;
  int predicted = -1;
  double margin = 0.0;  // logit[label] - max other logit at the returned point
};

/// Signed-gradient ascent on cross-entropy, projected each step onto
/// {|x' - x|_inf <= eps} intersected with [0,1]^D. Restart 0 starts at x,
/// later restarts at a uniform point of that set drawn from
/// Rng(Rng::derive(seed, restart)). Returns the first iterate whose argmax
/// (lowest index on ties) differs from label, or nullopt after all restarts.
std::optional<AttackOutcome> pgd_attack(const MlpModel& model, const Vector& x, int label, const AttackConfig& cfg);

struct AttackRecord {
  Eigen::Index index = 0;
  bool clean_correct = false;
  bool attack_success = false;
  int iterations = 0;
  double margin = 0.0;
};

struct RobustAccuracyReport {
  double robust_accuracy = 0.0;
  double clean_accuracy = 0.0;
  std::vector<AttackRecord> records;
};

/// Fraction of points that are classified correctly and survive
/// pgd_attack. Point i is attacked with seed Rng::derive(cfg.seed, i). The
/// value is an upper bound on the true robust accuracy.
RobustAccuracyReport robust_accuracy(const MlpModel& model, const RowMatrix& points, std::span<const int> labels,
                                     const AttackConfig& cfg);

/// Batched untargeted PGD used by adversarial training: random start in the
/// ball, `steps` signed steps, projection after each. Columns are samples.
Matrix linf_pgd_batch(const MlpModel& model, const Matrix& batch, std::span<const int> labels, double epsilon,
                      int steps, double step_size, Rng& rng);

std::string attack_csv_header();
std::string attack_csv_row(const AttackRecord& r);

}  // namespace pmgeo
