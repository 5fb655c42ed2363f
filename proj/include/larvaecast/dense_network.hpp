#pragma once

// Feed-forward regressor: Xavier initialization, forward pass with inverted
// dropout, MSE loss and analytic gradients. Batches are stored column-wise,
// one example per column.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "larvaecast/error.hpp"
#include "larvaecast/random.hpp"
#include "larvaecast/tensor.hpp"

namespace larvaecast::nn {

enum class Activation { kRelu, kIdentity };
enum class Mode { kTrain, kEval };

inline const char* to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

/// Weights and biases of a dense stack. Doubles as the gradient record and
/// as the Adam moment accumulators, so all three share one shape.
template <typename Scalar_>
struct DenseParameters {
  using Scalar = Scalar_;

  std::vector<Matrix<Scalar>> weights;  // layer i: fan_out x fan_in
  std::vector<Vector<Scalar>> biases;   // layer i: fan_out

  DenseParameters zeros_like() const {
    DenseParameters out;
    for (const auto& w : weights) out.weights.push_back(Matrix<Scalar>::Zero(w.rows(), w.cols()));
    for (const auto& b : biases) out.biases.push_back(Vector<Scalar>::Zero(b.size()));
    return out;
  }

  std::vector<FlatView<Scalar>> views() {
    std::vector<FlatView<Scalar>> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out.push_back(flat(weights[i]));
      out.push_back(flat(biases[i]));
    }
    return out;
  }

  std::vector<ConstFlatView<Scalar>> views() const {
    std::vector<ConstFlatView<Scalar>> out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      out.push_back(flat(weights[i]));
      out.push_back(flat(biases[i]));
    }
    return out;
  }

  friend bool operator==(const DenseParameters& a, const DenseParameters& b) {
    if (a.weights.size() != b.weights.size() || a.biases.size() != b.biases.size()) return false;
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
      if (a.weights[i].rows() != b.weights[i].rows() || a.weights[i].cols() != b.weights[i].cols() ||
          a.weights[i] != b.weights[i] || a.biases[i].size() != b.biases[i].size() ||
          a.biases[i] != b.biases[i])
        return false;
    }
    return true;
  }
};

template <typename Scalar_>
struct DenseNetwork {
  using Scalar = Scalar_;

  std::vector<Eigen::Index> layer_dims;
  std::vector<Activation> activations;  // one per weight layer
  double dropout_rate = 0.0;
  DenseParameters<Scalar> params;

  std::size_t num_layers() const { return params.weights.size(); }
  Eigen::Index input_width() const { return layer_dims.front(); }
  Eigen::Index output_width() const { return layer_dims.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& view : params.views()) n += static_cast<std::size_t>(view.size());
    return n;
  }

  /// Throws ShapeError/ConfigError if the tensors disagree with layer_dims.
  void validate() const {
    if (layer_dims.size() < 2) throw ConfigError("dense network needs at least two layer dims");
    for (auto d : layer_dims)
      if (d < 1) throw ConfigError("dense network layer dims must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ConfigError("dropout rate must lie in [0, 1)");
    const std::size_t layers = layer_dims.size() - 1;
    if (params.weights.size() != layers || params.biases.size() != layers ||
        activations.size() != layers)
      throw ShapeError("dense network: layer count does not match layer dims");
    for (std::size_t i = 0; i < layers; ++i) {
      require_shape(params.weights[i], layer_dims[i + 1], layer_dims[i],
                    "dense weights[" + std::to_string(i) + "]");
      require_shape(params.biases[i], layer_dims[i + 1], 1, "dense biases[" + std::to_string(i) + "]");
    }
  }

  friend bool operator==(const DenseNetwork& a, const DenseNetwork& b) {
    return a.layer_dims == b.layer_dims && a.activations == b.activations &&
           a.dropout_rate == b.dropout_rate && a.params == b.params;
  }
};

using DenseNetworkd = DenseNetwork<double>;

/// The abundance regressor: six inputs, six hidden layers of 64, one output.
inline std::vector<Eigen::Index> abundance_layer_dims() { return {6, 64, 64, 64, 64, 64, 64, 1}; }
inline constexpr double kAbundanceDropout = 0.2;

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Hidden layers use relu, the output layer is the identity.
template <typename Scalar = double>
DenseNetwork<Scalar> xavier_init(const std::vector<Eigen::Index>& layer_dims, std::uint64_t seed,
                                 double dropout_rate = 0.0) {
  if (layer_dims.size() < 2) throw ConfigError("xavier_init: need at least input and output dims");
  for (auto d : layer_dims)
    if (d < 1) throw ConfigError("xavier_init: layer dims must be positive");

  DenseNetwork<Scalar> net;
  net.layer_dims = layer_dims;
  net.dropout_rate = dropout_rate;
  RandomStream rng(seed);
  const std::size_t layers = layer_dims.size() - 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const Eigen::Index fan_in = layer_dims[i];
    const Eigen::Index fan_out = layer_dims[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix<Scalar> w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
    net.params.weights.push_back(std::move(w));
    net.params.biases.push_back(Vector<Scalar>::Zero(fan_out));
    net.activations.push_back(i + 1 == layers ? Activation::kIdentity : Activation::kRelu);
  }
  net.validate();
  return net;
}

/// Everything the backward pass needs from one forward pass.
template <typename Scalar>
struct DenseCache {
  Mode mode = Mode::kEval;
  std::vector<Matrix<Scalar>> inputs;           // input to layer i (post dropout)
  std::vector<Matrix<Scalar>> pre_activations;  // z_i
  std::vector<Matrix<Scalar>> masks;            // scaled keep masks; empty in eval mode
};

template <typename Scalar>
struct DenseForward {
  Matrix<Scalar> prediction;  // output_width x batch
  DenseCache<Scalar> cache;
};

/// Scaled keep mask for inverted dropout: entries are 0 or 1/(1-rate).
template <typename Scalar>
Matrix<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, RandomStream& rng) {
  Matrix<Scalar> mask(rows, cols);
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < rate ? Scalar(0) : keep_scale;
  return mask;
}

/// Forward pass on a batch (input_width x batch). In train mode every hidden
/// activation is multiplied by an inverted-dropout mask drawn from `rng`.
template <typename Scalar, typename Derived>
DenseForward<Scalar> forward(const DenseNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& x,
                             Mode mode, RandomStream* rng = nullptr) {
  if (x.rows() != net.input_width())
    throw ShapeError("dense forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(net.input_width()));
  const bool use_dropout = mode == Mode::kTrain && net.dropout_rate > 0.0;
  if (use_dropout && rng == nullptr) throw ConfigError("dense forward: train mode needs a random stream");

  DenseForward<Scalar> out;
  out.cache.mode = mode;
  Matrix<Scalar> a = x.template cast<Scalar>();
  const std::size_t layers = net.num_layers();
  for (std::size_t i = 0; i < layers; ++i) {
    Matrix<Scalar> z = (net.params.weights[i] * a).colwise() + net.params.biases[i];
    out.cache.inputs.push_back(std::move(a));
    if (net.activations[i] == Activation::kRelu)
      a = z.cwiseMax(Scalar(0));
    else
      a = z;
    out.cache.pre_activations.push_back(std::move(z));
    if (i + 1 < layers) {
      if (use_dropout) {
        Matrix<Scalar> mask = dropout_mask<Scalar>(a.rows(), a.cols(), net.dropout_rate, *rng);
        a.array() *= mask.array();
        out.cache.masks.push_back(std::move(mask));
      } else {
        out.cache.masks.emplace_back();
      }
    }
  }
  out.prediction = std::move(a);
  return out;
}

/// Eval-mode prediction without keeping a cache.
template <typename Scalar, typename Derived>
Matrix<Scalar> predict(const DenseNetwork<Scalar>& net, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != net.input_width()) throw ShapeError("dense predict: input width mismatch");
  Matrix<Scalar> a = x.template cast<Scalar>();
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    Matrix<Scalar> z = (net.params.weights[i] * a).colwise() + net.params.biases[i];
    a = net.activations[i] == Activation::kRelu ? Matrix<Scalar>(z.cwiseMax(Scalar(0))) : z;
  }
  return a;
}

/// Mean of squared element-wise differences.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mse_loss(const Eigen::MatrixBase<DerivedA>& pred,
                                   const Eigen::MatrixBase<DerivedB>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("mse_loss: prediction and target shapes differ");
  if (pred.size() == 0) throw ShapeError("mse_loss: empty input");
  return (pred - target).squaredNorm() / static_cast<typename DerivedA::Scalar>(pred.size());
}

/// Gradient of mse_loss(prediction, target) with respect to every parameter.
/// Dropout masks recorded in the cache are replayed.
template <typename Scalar, typename DerivedP, typename DerivedT>
DenseParameters<Scalar> backward(const DenseNetwork<Scalar>& net, const DenseCache<Scalar>& cache,
                                 const Eigen::MatrixBase<DerivedP>& prediction,
                                 const Eigen::MatrixBase<DerivedT>& target) {
  const std::size_t layers = net.num_layers();
  if (cache.inputs.size() != layers || cache.pre_activations.size() != layers ||
      cache.masks.size() + 1 != layers)
    throw ShapeError("dense backward: cache does not belong to this network");
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw ShapeError("dense backward: prediction and target shapes differ");
  require_shape(cache.pre_activations.back(), net.output_width(), prediction.cols(),
                "dense backward: cached output");

  DenseParameters<Scalar> grads = net.params.zeros_like();
  Matrix<Scalar> delta = (prediction - target) * (Scalar(2) / static_cast<Scalar>(prediction.size()));
  for (std::size_t k = layers; k-- > 0;) {
    if (k + 1 < layers && cache.masks[k].size() != 0) delta.array() *= cache.masks[k].array();
    if (net.activations[k] == Activation::kRelu)
      delta.array() *= (cache.pre_activations[k].array() > Scalar(0)).template cast<Scalar>();
    grads.weights[k].noalias() = delta * cache.inputs[k].transpose();
    grads.biases[k] = delta.rowwise().sum();
    if (k > 0) delta = net.params.weights[k].transpose() * delta;
  }
  return grads;
}

/// Convenience overload that reads the prediction from the cache.
template <typename Scalar, typename DerivedT>
DenseParameters<Scalar> backward(const DenseNetwork<Scalar>& net, const DenseForward<Scalar>& fwd,
                                 const Eigen::MatrixBase<DerivedT>& target) {
  return backward(net, fwd.cache, fwd.prediction, target);
}

}  // namespace larvaecast::nn
