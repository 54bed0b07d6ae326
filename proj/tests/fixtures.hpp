#pragma once

// Small trained toy models shared by the sampler and attack tests.

#include "pmgeo/model.hpp"
#include "pmgeo/synth.hpp"

namespace fixture {

inline const pmgeo::SynthDataset& toy_data() {
  static const pmgeo::SynthDataset ds = pmgeo::synth_dataset(64, 3, 4, 1000, 0.005, 21);
  return ds;
}

inline const pmgeo::LabeledData& toy_test() {
  static const pmgeo::LabeledData t = pmgeo::draw_points(toy_data().patches, 200, 0.005, 22);
  return t;
}

// adversarial_eps 0 trains the standard model.
inline pmgeo::MlpModel train_toy(double adversarial_eps) {
  pmgeo::TrainConfig cfg;
  cfg.epochs = 8;
  cfg.seed = 23;
  cfg.weight_decay = 0.003;
  if (adversarial_eps > 0) cfg.adversarial = pmgeo::AdversarialTraining{adversarial_eps, 5, adversarial_eps / 3};
  return pmgeo::train(pmgeo::MlpModel::random({64, 16, 3}, pmgeo::Activation::tanh, 24), toy_data().data, cfg).model;
}

inline const pmgeo::MlpModel& standard_model() {
  static const pmgeo::MlpModel m = train_toy(0.0);
  return m;
}

inline const pmgeo::MlpModel& robust_model() {
  static const pmgeo::MlpModel m = train_toy(0.06);
  return m;
}

}  // namespace fixture
