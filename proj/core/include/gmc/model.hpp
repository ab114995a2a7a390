#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "gmc/common.hpp"

namespace gmc {

// ---------------------------------------------------------------------------
// Architecture and parameter layout
// ---------------------------------------------------------------------------

/// Fully-connected classifier: input -> hidden[0] -> ... -> num_classes,
/// ReLU between layers, raw logits at the output.
///
/// Flat parameter layout, layer by layer: the weight matrix of layer l
/// (fan_out x fan_in, row-major) followed by its bias (fan_out).
struct ArchSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t num_classes = 0;

  std::size_t layer_count() const { return hidden.size() + 1; }
  std::size_t fan_in(std::size_t layer) const {
    return layer == 0 ? input_dim : hidden[layer - 1];
  }
  std::size_t fan_out(std::size_t layer) const {
    return layer == hidden.size() ? num_classes : hidden[layer];
  }
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) + fan_in(layer) * fan_out(layer);
  }
  /// Total parameter count D.
  std::size_t param_count() const;
  /// Width H of the penultimate representation: the last hidden layer, or
  /// the input itself for a single linear layer.
  std::size_t penultimate_width() const {
    return hidden.empty() ? input_dim : hidden.back();
  }

  void validate() const;
  bool operator==(const ArchSpec&) const = default;
};

enum class InitFamily : std::uint8_t { he_uniform, he_normal };

/// Initialization distribution p(theta): fan-in-scaled He draws times a
/// scale multiplier, biases zero.
struct InitSpec {
  InitFamily family = InitFamily::he_uniform;
  double scale = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const InitSpec&) const = default;
};

struct ParamVector {
  Eigen::VectorXd values;
  ArchSpec arch;

  Eigen::Index size() const { return values.size(); }
};

struct TrainConfig {
  double step_size = 3e-4;
  double weight_decay = 1e-4;
  std::size_t minibatch = 100;
  std::size_t epochs = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Labeled rows with per-example nonnegative loss weights.
struct WeightedDataset {
  Eigen::MatrixXd features;   // N x input_dim
  std::vector<int> labels;    // in [0, C)
  Eigen::VectorXd weights;    // >= 0, sum > 0 when N > 0

  Eigen::Index size() const { return features.rows(); }
  void validate() const;

  static WeightedDataset unit_weights(Eigen::MatrixXd features,
                                      std::vector<int> labels);
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Deterministic draw from the initialization distribution.
ParamVector init_params(const ArchSpec& arch, const InitSpec& init);

/// Logits for a batch of feature rows (B x input_dim -> B x C).
Eigen::MatrixXd forward(const ParamVector& params,
                        const Eigen::MatrixXd& features);

/// Forward pass that also returns the penultimate-layer activations
/// (B x H), for the last-layer gradient fast path.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> forward_with_penultimate(
    const ParamVector& params, const Eigen::MatrixXd& features);

/// Weighted cross-entropy loss of one example and its exact gradient
/// w.r.t. all D parameters.
std::pair<double, Eigen::VectorXd> loss_and_grad(const ParamVector& params,
                                                 const Eigen::VectorXd& x,
                                                 int label, double weight);

/// Per-example gradients in dataset order. Weights are applied only when
/// use_weights is set; otherwise every example counts with weight 1.
std::vector<Eigen::VectorXd> per_example_grads(const ParamVector& params,
                                               const WeightedDataset& data,
                                               bool use_weights);

/// Per-example gradients w.r.t. the output-layer weight matrix only:
/// vec((softmax(s_i) - onehot(y_i)) h(x_i)^T), row-major, length C*H.
/// Costs one forward pass; no backprop.
std::vector<Eigen::VectorXd> last_layer_grads(const ParamVector& params,
                                              const WeightedDataset& data);

/// Gradient of the weight-normalized batch loss
/// (sum_i w_i l_i) / (sum_i w_i) over the given row subset.
std::pair<double, Eigen::VectorXd> weighted_batch_grad(
    const ParamVector& params, const WeightedDataset& data,
    const std::vector<Eigen::Index>& rows);

/// Adam with coupled L2 weight decay over shuffled weighted minibatches.
/// Deterministic in (params, data, config).
ParamVector train(ParamVector params, const WeightedDataset& data,
                  const TrainConfig& config);

}  // namespace gmc
