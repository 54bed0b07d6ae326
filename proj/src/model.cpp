#include "pmgeo/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "model_internal.hpp"
#include "pmgeo/rng.hpp"

namespace pmgeo {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::softplus: return "softplus";
    case Activation::relu: return "relu";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "softplus") return Activation::softplus;
  if (s == "relu") return Activation::relu;
  throw InvalidInput("unknown activation '" + s + "'");
}

MlpModel MlpModel::random(std::vector<Eigen::Index> dims, Activation act, std::uint64_t seed) {
  MlpModel m = zeros(std::move(dims), act);
  m.seed = seed;
  Rng rng(seed);
  for (auto& w : m.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
  }
  return m;
}

MlpModel MlpModel::zeros(std::vector<Eigen::Index> dims, Activation act) {
  if (dims.size() < 2) throw InvalidInput("MlpModel: need at least input and output dimensions");
  for (auto d : dims)
    if (d < 1) throw InvalidInput("MlpModel: layer dimensions must be positive");
  MlpModel m;
  m.layer_dims = std::move(dims);
  m.activation = act;
  for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
    m.weights.push_back(Matrix::Zero(m.layer_dims[l + 1], m.layer_dims[l]));
    m.biases.push_back(Vector::Zero(m.layer_dims[l + 1]));
  }
  return m;
}

void MlpModel::validate() const {
  if (layer_dims.size() < 2 || weights.size() + 1 != layer_dims.size() || biases.size() != weights.size())
    throw InvalidInput("MlpModel: inconsistent layer count");
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != layer_dims[l + 1] || weights[l].cols() != layer_dims[l] ||
        biases[l].size() != layer_dims[l + 1])
      throw InvalidInput("MlpModel: layer " + std::to_string(l) + " has incompatible shape");
    if (!weights[l].allFinite() || !biases[l].allFinite())
      throw InvalidInput("MlpModel: non-finite parameter in layer " + std::to_string(l));
  }
}

namespace {

Matrix activate(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::softplus:
      return z.unaryExpr([](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); });
    case Activation::relu: return z.cwiseMax(0.0);
  }
  return z;
}

// Derivative of the activation given pre-activation z and output a.
Matrix activation_slope(const Matrix& z, const Matrix& a, Activation act) {
  switch (act) {
    case Activation::tanh: return (1.0 - a.array().square()).matrix();
    case Activation::softplus: return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    case Activation::relu: return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return a;
}

struct Trace {
  std::vector<Matrix> pre;   // pre-activations of hidden layers
  std::vector<Matrix> post;  // post[0] = input, post[l+1] = act(pre[l])
  Matrix logits;
};

Trace run_forward(const MlpModel& m, const Matrix& x) {
  if (x.rows() != m.input_dim())
    throw InvalidInput("forward: input has dimension " + std::to_string(x.rows()) + ", model expects " +
                       std::to_string(m.input_dim()));
  Trace t;
  t.post.push_back(x);
  const std::size_t L = m.n_layers();
  for (std::size_t l = 0; l + 1 < L; ++l) {
    Matrix z = m.weights[l] * t.post.back();
    z.colwise() += m.biases[l];
    t.post.push_back(activate(z, m.activation));
    t.pre.push_back(std::move(z));
  }
  t.logits = m.weights[L - 1] * t.post.back();
  t.logits.colwise() += m.biases[L - 1];
  return t;
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double mx = p.col(j).maxCoeff();
    p.col(j) = (p.col(j).array() - mx).exp().matrix();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;
};

// Backpropagates d(loss)/d(logits) through the network.
Gradients backward(const MlpModel& m, const Trace& t, Matrix dlogits, bool want_params) {
  const std::size_t L = m.n_layers();
  Gradients g;
  if (want_params) {
    g.weights.resize(L);
    g.biases.resize(L);
  }
  Matrix delta = std::move(dlogits);
  for (std::size_t l = L; l-- > 0;) {
    if (want_params) {
      g.weights[l] = delta * t.post[l].transpose();
      g.biases[l] = delta.rowwise().sum();
    }
    Matrix up = m.weights[l].transpose() * delta;
    if (l == 0) {
      g.input = std::move(up);
      break;
    }
    delta = up.cwiseProduct(activation_slope(t.pre[l - 1], t.post[l], m.activation));
  }
  return g;
}

void check_labels(std::span<const int> labels, Eigen::Index k) {
  for (int c : labels)
    if (c < 0 || c >= k) throw InvalidInput("class index " + std::to_string(c) + " out of range");
}

}  // namespace

Vector softmax(const Vector& logits) { return softmax_columns(logits); }

Vector log_softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

Prediction forward(const MlpModel& model, const Vector& x) {
  Trace t = run_forward(model, x);
  Prediction p;
  p.logits = t.logits.col(0);
  p.probs = softmax(p.logits);
  return p;
}

Matrix forward_logits(const MlpModel& model, const Matrix& batch) { return run_forward(model, batch).logits; }

int argmax_lowest(const Vector& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

int predict(const MlpModel& model, const Vector& x) { return argmax_lowest(forward(model, x).logits); }

LogProbGradient logp_and_grad(const MlpModel& model, const Vector& x, int c) {
  const int labels[1] = {c};
  check_labels(labels, model.n_classes());
  const Trace t = run_forward(model, x);
  LogProbGradient out;
  out.probs = softmax(t.logits.col(0));
  out.log_prob = log_softmax(t.logits.col(0))[c];
  // d log p_c / d logits = e_c - p
  Matrix dlogits = -out.probs;
  dlogits(c, 0) += 1.0;
  out.gradient = backward(model, t, std::move(dlogits), false).input.col(0);
  return out;
}

Matrix input_grad_ce(const MlpModel& model, const Matrix& batch, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != batch.cols()) throw InvalidInput("input_grad_ce: label count mismatch");
  check_labels(labels, model.n_classes());
  const Trace t = run_forward(model, batch);
  Matrix dlogits = softmax_columns(t.logits);
  for (Eigen::Index j = 0; j < batch.cols(); ++j) dlogits(labels[static_cast<std::size_t>(j)], j) -= 1.0;
  return backward(model, t, std::move(dlogits), false).input;
}

double finite_diff_check(const MlpModel& model, const Vector& x, int c, const FiniteDiffOptions& opts) {
  if (!(opts.step > 0.0)) throw InvalidInput("finite_diff_check: step must be positive");
  const Vector g = grad_logp(model, x, c);
  const Eigen::Index dim = x.size();
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(dim));
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  if (dim > opts.max_coords) {
    Rng rng(opts.seed);
    for (Eigen::Index i = 0; i < opts.max_coords; ++i) {
      const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(dim - i)));
      std::swap(coords[static_cast<std::size_t>(i)], coords[j]);
    }
    coords.resize(static_cast<std::size_t>(opts.max_coords));
  }
  double worst = 0.0;
  Vector xp = x;
  for (Eigen::Index i : coords) {
    const double orig = xp[i];
    xp[i] = orig + opts.step;
    const double up = log_softmax(forward(model, xp).logits)[c];
    xp[i] = orig - opts.step;
    const double down = log_softmax(forward(model, xp).logits)[c];
    xp[i] = orig;
    const double fd = (up - down) / (2.0 * opts.step);
    const double scale = std::max({std::abs(g[i]), std::abs(fd), 1e-6});
    worst = std::max(worst, std::abs(g[i] - fd) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training

std::string to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd" || s == "sgd_momentum") return OptimizerKind::sgd_momentum;
  throw InvalidInput("unknown optimizer '" + s + "'");
}

double mean_cross_entropy(const MlpModel& model, const LabeledData& data) {
  const Matrix logits = forward_logits(model, data.points.transpose());
  double total = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j)
    total -= log_softmax(logits.col(j))[data.labels[static_cast<std::size_t>(j)]];
  return total / static_cast<double>(logits.cols());
}

double accuracy(const MlpModel& model, const RowMatrix& points, std::span<const int> labels) {
  if (points.rows() == 0) throw InvalidInput("accuracy: no points");
  const Matrix logits = forward_logits(model, points.transpose());
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j)
    if (argmax_lowest(logits.col(j)) == labels[static_cast<std::size_t>(j)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(points.rows());
}

// Parameter-gradient pass shared with the trainer (train.cpp).
namespace detail {

double loss_and_param_grads(const MlpModel& m, const Matrix& batch, std::span<const int> labels,
                            std::vector<Matrix>& gw, std::vector<Vector>& gb) {
  const Trace t = run_forward(m, batch);
  const double inv_b = 1.0 / static_cast<double>(batch.cols());
  Matrix dlogits = softmax_columns(t.logits);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch.cols(); ++j) {
    const int c = labels[static_cast<std::size_t>(j)];
    loss -= log_softmax(t.logits.col(j))[c];
    dlogits(c, j) -= 1.0;
  }
  dlogits *= inv_b;
  Gradients g = backward(m, t, std::move(dlogits), true);
  gw = std::move(g.weights);
  gb = std::move(g.biases);
  return loss * inv_b;
}

}  // namespace detail

}  // namespace pmgeo
