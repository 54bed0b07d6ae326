#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmgeo/error.hpp"
#include "pmgeo/numerics.hpp"

namespace pmgeo {

enum class Activation { tanh, softplus, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

/// Fully connected classifier D -> h1 -> ... -> K. Hidden layers use the
/// activation; the last layer is affine and produces logits. layer_dims of
/// size 2 is the softmax-linear model.
struct MlpModel {
  std::vector<Eigen::Index> layer_dims;
  std::vector<Matrix> weights;  // weights[l] is dims[l+1] x dims[l]
  std::vector<Vector> biases;
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;

  Eigen::Index input_dim() const { return layer_dims.front(); }
  Eigen::Index n_classes() const { return layer_dims.back(); }
  std::size_t n_layers() const { return weights.size(); }

  /// Glorot-uniform weights, zero biases, drawn layer by layer from Rng(seed).
  static MlpModel random(std::vector<Eigen::Index> dims, Activation act, std::uint64_t seed);
  static MlpModel zeros(std::vector<Eigen::Index> dims, Activation act = Activation::tanh);

  /// Throws InvalidInput if shapes are inconsistent or a parameter is not finite.
  void validate() const;
};

struct Prediction {
  Vector logits;
  Vector probs;
};

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

Prediction forward(const MlpModel& model, const Vector& x);
/// Logits for a batch, one column per sample (D x B in, K x B out).
Matrix forward_logits(const MlpModel& model, const Matrix& batch);

/// Argmax of the logits; ties go to the lowest class index.
int predict(const MlpModel& model, const Vector& x);
int argmax_lowest(const Vector& v);

struct LogProbGradient {
  Vector gradient;  // d log p(c|x) / dx
  Vector probs;
  double log_prob = 0.0;
};

/// Reverse-mode gradient of log p(c|x) with respect to the input.
LogProbGradient logp_and_grad(const MlpModel& model, const Vector& x, int c);
inline Vector grad_logp(const MlpModel& model, const Vector& x, int c) { return logp_and_grad(model, x, c).gradient; }

/// Input gradients of the per-sample cross-entropy -log p(label_b | x_b) for
/// a batch (D x B), one column per sample, not averaged.
Matrix input_grad_ce(const MlpModel& model, const Matrix& batch, std::span<const int> labels);

struct FiniteDiffOptions {
  double step = 1e-5;
  /// Coordinates checked; every coordinate when D <= this, otherwise a
  /// seeded subset of this size.
  Eigen::Index max_coords = 64;
  std::uint64_t seed = 0;
};

/// Max over checked coordinates of |g_i - fd_i| / max(|g_i|, |fd_i|, 1e-6)
/// where fd_i is the central difference of log p(c|x) with the given step.
/// Tiny steps (e.g. 1e-12) are dominated by cancellation; the result is then
/// meaningless, not a defect of the gradient.
double finite_diff_check(const MlpModel& model, const Vector& x, int c, const FiniteDiffOptions& opts = {});

// Training.

enum class OptimizerKind { sgd_momentum, adam };

std::string to_string(OptimizerKind o);
OptimizerKind optimizer_from_string(const std::string& s);

struct AdversarialTraining {
  double epsilon = 0.06;  // L-infinity radius, < 0.5
  int steps = 7;
  double step_size = 0.02;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::sgd_momentum;
  double momentum = 0.9;
  /// L2 penalty (weight_decay / 2) * |W|^2 on weights, not biases.
  double weight_decay = 0.0;
  std::optional<AdversarialTraining> adversarial;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  double initial_loss = 0.0;           // clean mean cross-entropy before training
  std::vector<double> epoch_loss;      // mean training-objective loss per epoch
  std::vector<double> epoch_clean_loss;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Labeled points, one per row, labels in [0, K).
struct LabeledData {
  RowMatrix points;
  std::vector<int> labels;
};

/// Raised when the loss becomes non-finite; carries the parameters from the
/// end of the last finite epoch.
class TrainingDiverged : public TrainingFailure {
 public:
  TrainingDiverged(const std::string& what, int epoch, MlpModel last_finite)
      : TrainingFailure(what, epoch), last_finite_(std::move(last_finite)) {}
  const MlpModel& last_finite() const noexcept { return last_finite_; }

 private:
  MlpModel last_finite_;
};

/// Minibatch training on mean cross-entropy. Batches come from a seeded
/// shuffle per epoch. With cfg.adversarial set, each batch is replaced by
/// L-infinity PGD perturbations (random start in the ball, signed steps,
/// projection onto ball and hypercube) before the update. Single threaded
/// and deterministic for a fixed seed.
TrainResult train(MlpModel model, const LabeledData& data, const TrainConfig& cfg);

double mean_cross_entropy(const MlpModel& model, const LabeledData& data);
double accuracy(const MlpModel& model, const RowMatrix& points, std::span<const int> labels);

}  // namespace pmgeo
