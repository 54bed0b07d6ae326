#include <cmath>
#include <numeric>

#include "model_internal.hpp"
#include "pmgeo/attack.hpp"
#include "pmgeo/model.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidInput("train: epochs must be >= 0");
  if (batch_size < 1) throw InvalidInput("train: batch_size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidInput("train: learning_rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw InvalidInput("train: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidInput("train: weight_decay must be >= 0");
  if (adversarial) {
    if (!(adversarial->epsilon > 0.0) || adversarial->epsilon >= 0.5)
      throw InvalidInput("train: adversarial epsilon must be in (0, 0.5)");
    if (adversarial->steps < 1 || !(adversarial->step_size > 0.0))
      throw InvalidInput("train: adversarial steps and step_size must be positive");
  }
}

namespace {

struct OptimizerState {
  std::vector<Matrix> mw, vw;
  std::vector<Vector> mb, vb;
  long step = 0;

  explicit OptimizerState(const MlpModel& m) {
    for (std::size_t l = 0; l < m.n_layers(); ++l) {
      mw.push_back(Matrix::Zero(m.weights[l].rows(), m.weights[l].cols()));
      vw.push_back(mw.back());
      mb.push_back(Vector::Zero(m.biases[l].size()));
      vb.push_back(mb.back());
    }
  }
};

template <class P>
void adam_update(P& param, const P& grad, P& m, P& v, double lr, double bc1, double bc2) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

void apply_update(MlpModel& model, const std::vector<Matrix>& gw, const std::vector<Vector>& gb,
                  OptimizerState& st, const TrainConfig& cfg) {
  ++st.step;
  if (cfg.optimizer == OptimizerKind::sgd_momentum) {
    for (std::size_t l = 0; l < model.n_layers(); ++l) {
      st.mw[l] = cfg.momentum * st.mw[l] + gw[l];
      st.mb[l] = cfg.momentum * st.mb[l] + gb[l];
      model.weights[l] -= cfg.learning_rate * st.mw[l];
      model.biases[l] -= cfg.learning_rate * st.mb[l];
    }
    return;
  }
  const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(st.step));
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    adam_update(model.weights[l], gw[l], st.mw[l], st.vw[l], cfg.learning_rate, bc1, bc2);
    adam_update(model.biases[l], gb[l], st.mb[l], st.vb[l], cfg.learning_rate, bc1, bc2);
  }
}

}  // namespace

TrainResult train(MlpModel model, const LabeledData& data, const TrainConfig& cfg) {
  cfg.validate();
  model.validate();
  const Eigen::Index n = data.points.rows();
  if (n == 0) throw InvalidInput("train: empty dataset");
  if (static_cast<Eigen::Index>(data.labels.size()) != n) throw InvalidInput("train: label count mismatch");
  if (data.points.cols() != model.input_dim()) throw InvalidInput("train: data dimension does not match model input");

  TrainResult result;
  result.history.initial_loss = mean_cross_entropy(model, data);
  if (cfg.epochs == 0) {
    result.model = std::move(model);
    return result;
  }

  Rng rng(cfg.seed);
  OptimizerState state(model);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<Matrix> gw;
  std::vector<Vector> gb;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const MlpModel epoch_start = model;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);

    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Matrix batch(data.points.cols(), b);
      std::vector<int> labels(static_cast<std::size_t>(b));
      for (Eigen::Index j = 0; j < b; ++j) {
        const Eigen::Index row = order[static_cast<std::size_t>(start + j)];
        batch.col(j) = data.points.row(row).transpose();
        labels[static_cast<std::size_t>(j)] = data.labels[static_cast<std::size_t>(row)];
      }
      if (cfg.adversarial) {
        const auto& adv = *cfg.adversarial;
        batch = linf_pgd_batch(model, batch, labels, adv.epsilon, adv.steps, adv.step_size, rng);
      }
      const double loss = detail::loss_and_param_grads(model, batch, labels, gw, gb);
      if (!std::isfinite(loss))
        throw TrainingDiverged("train: loss became non-finite in epoch " + std::to_string(epoch), epoch, epoch_start);
      loss_sum += loss * static_cast<double>(b);
      if (cfg.weight_decay > 0.0)
        for (std::size_t l = 0; l < model.n_layers(); ++l) gw[l] += cfg.weight_decay * model.weights[l];
      apply_update(model, gw, gb, state, cfg);
    }
    result.history.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    result.history.epoch_clean_loss.push_back(mean_cross_entropy(model, data));
    if (!std::isfinite(result.history.epoch_clean_loss.back()))
      throw TrainingDiverged("train: clean loss became non-finite in epoch " + std::to_string(epoch), epoch, epoch_start);
    // log-softmax keeps the loss finite long after the weights blow up
    for (std::size_t l = 0; l < model.n_layers(); ++l)
      if (!model.weights[l].allFinite() || !model.biases[l].allFinite())
        throw TrainingDiverged("train: parameters became non-finite in epoch " + std::to_string(epoch), epoch,
                               epoch_start);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace pmgeo
