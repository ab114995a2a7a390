#include "gmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gmc/rng.hpp"

namespace gmc {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<const RowMajorMatrix>;
using MutableWeightMap = Eigen::Map<RowMajorMatrix>;

WeightMap weight_matrix(const ParamVector& p, std::size_t layer) {
  const auto& a = p.arch;
  return WeightMap(p.values.data() + a.weight_offset(layer),
                   static_cast<Eigen::Index>(a.fan_out(layer)),
                   static_cast<Eigen::Index>(a.fan_in(layer)));
}

Eigen::Map<const Eigen::VectorXd> bias_vector(const ParamVector& p,
                                              std::size_t layer) {
  const auto& a = p.arch;
  return Eigen::Map<const Eigen::VectorXd>(
      p.values.data() + a.bias_offset(layer),
      static_cast<Eigen::Index>(a.fan_out(layer)));
}

void check_finite(const Eigen::MatrixXd& m, std::size_t layer,
                  const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite ") + what + " at layer " +
                       std::to_string(layer));
  }
}

void check_feature_width(const ArchSpec& arch, Eigen::Index cols) {
  if (cols != static_cast<Eigen::Index>(arch.input_dim)) {
    throw ConfigError("feature width " + std::to_string(cols) +
                      " does not match architecture input_dim " +
                      std::to_string(arch.input_dim));
  }
}

void check_label(const ArchSpec& arch, int label) {
  if (label < 0 || label >= static_cast<int>(arch.num_classes)) {
    throw ConfigError("label " + std::to_string(label) +
                      " outside [0, " + std::to_string(arch.num_classes) + ")");
  }
}

// All layer activations of a batch: act[0] = input, act[l] = post-ReLU
// output of layer l-1 for l < L, act[L] = logits.
std::vector<Eigen::MatrixXd> forward_trace(const ParamVector& params,
                                           const Eigen::MatrixXd& features) {
  const auto& arch = params.arch;
  check_feature_width(arch, features.cols());
  std::vector<Eigen::MatrixXd> act;
  act.reserve(arch.layer_count() + 1);
  act.push_back(features);
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    Eigen::MatrixXd z =
        (act.back() * weight_matrix(params, l).transpose()).rowwise() +
        bias_vector(params, l).transpose();
    check_finite(z, l, "pre-activation");
    if (l + 1 < arch.layer_count()) z = z.cwiseMax(0.0);
    act.push_back(std::move(z));
  }
  return act;
}

// Row-wise softmax, numerically stabilized.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

// Backprop of an output delta matrix (B x C) through the traced network.
// Writes the flat gradient; rows of delta may carry per-example scaling.
void backprop(const ParamVector& params,
              const std::vector<Eigen::MatrixXd>& act, Eigen::MatrixXd delta,
              Eigen::VectorXd& grad) {
  const auto& arch = params.arch;
  grad.setZero(static_cast<Eigen::Index>(arch.param_count()));
  for (std::size_t l = arch.layer_count(); l-- > 0;) {
    MutableWeightMap gw(grad.data() + arch.weight_offset(l),
                        static_cast<Eigen::Index>(arch.fan_out(l)),
                        static_cast<Eigen::Index>(arch.fan_in(l)));
    gw = delta.transpose() * act[l];
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + arch.bias_offset(l),
                                   static_cast<Eigen::Index>(arch.fan_out(l)));
    gb = delta.colwise().sum();
    if (l > 0) {
      delta = (delta * weight_matrix(params, l)).array() *
              (act[l].array() > 0.0).cast<double>();
      check_finite(delta, l - 1, "gradient");
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ArchSpec / dataset plumbing
// ---------------------------------------------------------------------------

std::size_t ArchSpec::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += fan_in(l) * fan_out(l) + fan_out(l);
  return off;
}

std::size_t ArchSpec::param_count() const {
  return weight_offset(layer_count());
}

void ArchSpec::validate() const {
  if (input_dim == 0) throw ConfigError("input_dim must be positive");
  if (num_classes == 0) throw ConfigError("num_classes must be positive");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden widths must be positive");
}

void TrainConfig::validate() const {
  if (step_size <= 0) throw ConfigError("step_size must be positive");
  if (weight_decay < 0) throw ConfigError("weight_decay must be nonnegative");
  if (minibatch == 0) throw ConfigError("minibatch must be positive");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw ConfigError("adam betas must lie in [0, 1)");
  if (adam_eps <= 0) throw ConfigError("adam_eps must be positive");
}

void WeightedDataset::validate() const {
  const auto n = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      weights.size() != n) {
    throw ConfigError("dataset rows, labels and weights disagree in length");
  }
  if (n > 0) {
    if ((weights.array() < 0.0).any())
      throw ConfigError("dataset weights must be nonnegative");
    if (weights.sum() <= 0.0)
      throw ConfigError("dataset weight sum must be positive");
  }
}

WeightedDataset WeightedDataset::unit_weights(Eigen::MatrixXd features,
                                              std::vector<int> labels) {
  WeightedDataset d;
  d.weights = Eigen::VectorXd::Ones(features.rows());
  d.features = std::move(features);
  d.labels = std::move(labels);
  return d;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

ParamVector init_params(const ArchSpec& arch, const InitSpec& init) {
  arch.validate();
  if (init.scale < 0) throw ConfigError("init scale must be nonnegative");
  ParamVector p{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count())),
                arch};
  Rng rng(init.seed);
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    const double fin = static_cast<double>(arch.fan_in(l));
    double* w = p.values.data() + arch.weight_offset(l);
    const std::size_t count = arch.fan_in(l) * arch.fan_out(l);
    if (init.family == InitFamily::he_uniform) {
      const double bound = init.scale * std::sqrt(6.0 / fin);
      for (std::size_t i = 0; i < count; ++i) w[i] = rng.uniform(-bound, bound);
    } else {
      const double stddev = init.scale * std::sqrt(2.0 / fin);
      for (std::size_t i = 0; i < count; ++i) w[i] = stddev * rng.normal();
    }
    // biases stay zero
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward / gradients
// ---------------------------------------------------------------------------

Eigen::MatrixXd forward(const ParamVector& params,
                        const Eigen::MatrixXd& features) {
  return forward_trace(params, features).back();
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> forward_with_penultimate(
    const ParamVector& params, const Eigen::MatrixXd& features) {
  auto act = forward_trace(params, features);
  const std::size_t layers = params.arch.layer_count();
  return {act[layers], act[layers - 1]};
}

std::pair<double, Eigen::VectorXd> loss_and_grad(const ParamVector& params,
                                                 const Eigen::VectorXd& x,
                                                 int label, double weight) {
  check_label(params.arch, label);
  if (weight < 0) throw ConfigError("example weight must be nonnegative");
  auto act = forward_trace(params, x.transpose());
  const Eigen::MatrixXd& logits = act.back();

  const double lse =
      logits.maxCoeff() +
      std::log((logits.array() - logits.maxCoeff()).exp().sum());
  const double loss = weight * (lse - logits(0, label));

  Eigen::MatrixXd delta = softmax_rows(logits);
  delta(0, label) -= 1.0;
  delta *= weight;

  Eigen::VectorXd grad;
  backprop(params, act, std::move(delta), grad);
  if (!std::isfinite(loss))
    throw NumericError("non-finite loss at output layer");
  return {loss, std::move(grad)};
}

std::vector<Eigen::VectorXd> per_example_grads(const ParamVector& params,
                                               const WeightedDataset& data,
                                               bool use_weights) {
  data.validate();
  std::vector<Eigen::VectorXd> grads;
  grads.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double w = use_weights ? data.weights(i) : 1.0;
    grads.push_back(
        loss_and_grad(params, data.features.row(i), data.labels[static_cast<std::size_t>(i)], w)
            .second);
  }
  return grads;
}

std::vector<Eigen::VectorXd> last_layer_grads(const ParamVector& params,
                                              const WeightedDataset& data) {
  data.validate();
  const auto& arch = params.arch;
  const std::size_t H = arch.penultimate_width();
  const std::size_t C = arch.num_classes;

  auto [logits, penult] = forward_with_penultimate(params, data.features);
  Eigen::MatrixXd delta = softmax_rows(logits);
  for (Eigen::Index i = 0; i < data.size(); ++i)
    delta(i, data.labels[static_cast<std::size_t>(i)]) -= 1.0;

  std::vector<Eigen::VectorXd> grads;
  grads.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(C * H));
    MutableWeightMap gm(g.data(), static_cast<Eigen::Index>(C),
                        static_cast<Eigen::Index>(H));
    gm = delta.row(i).transpose() * penult.row(i);
    grads.push_back(std::move(g));
  }
  return grads;
}

std::pair<double, Eigen::VectorXd> weighted_batch_grad(
    const ParamVector& params, const WeightedDataset& data,
    const std::vector<Eigen::Index>& rows) {
  const auto& arch = params.arch;
  const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(b, data.features.cols());
  Eigen::VectorXd w(b);
  std::vector<int> y(rows.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    x.row(i) = data.features.row(rows[static_cast<std::size_t>(i)]);
    w(i) = data.weights(rows[static_cast<std::size_t>(i)]);
    y[static_cast<std::size_t>(i)] = data.labels[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  }
  const double wsum = w.sum();
  if (wsum <= 0.0) {
    return {0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count()))};
  }

  auto act = forward_trace(params, x);
  const Eigen::MatrixXd& logits = act.back();
  Eigen::VectorXd lse =
      logits.rowwise().maxCoeff().array() +
      (logits.colwise() - logits.rowwise().maxCoeff()).array().exp().rowwise().sum().log();

  double loss = 0.0;
  Eigen::MatrixXd delta = softmax_rows(logits);
  for (Eigen::Index i = 0; i < b; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    check_label(arch, yi);
    loss += w(i) * (lse(i) - logits(i, yi));
    delta(i, yi) -= 1.0;
    delta.row(i) *= w(i) / wsum;
  }
  loss /= wsum;

  Eigen::VectorXd grad;
  backprop(params, act, std::move(delta), grad);
  return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ParamVector train(ParamVector params, const WeightedDataset& data,
                  const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw ConfigError("cannot train on an empty dataset");

  const Eigen::Index dim = params.values.size();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  double beta1_t = 1.0, beta2_t = 1.0;

  Rng rng(config.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  std::vector<Eigen::Index> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += config.minibatch) {
      const std::size_t end = std::min(order.size(), start + config.minibatch);
      batch.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                   order.begin() + static_cast<std::ptrdiff_t>(end));
      auto [loss, grad] = weighted_batch_grad(params, data, batch);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(start / config.minibatch));
      }
      grad += config.weight_decay * params.values;

      beta1_t *= config.adam_beta1;
      beta2_t *= config.adam_beta2;
      m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad;
      v = config.adam_beta2 * v +
          (1.0 - config.adam_beta2) * grad.cwiseProduct(grad);
      const Eigen::VectorXd m_hat = m / (1.0 - beta1_t);
      const Eigen::VectorXd v_hat = v / (1.0 - beta2_t);
      params.values -=
          config.step_size *
          (m_hat.array() / (v_hat.array().sqrt() + config.adam_eps)).matrix();
    }
  }
  return params;
}

}  // namespace gmc
