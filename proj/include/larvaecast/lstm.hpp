#pragma once

// Single-layer LSTM followed by a dense head that maps the final hidden
// state to a block of `output_len` future values. Sequences are stored as
// one (input_size x batch) matrix per time step.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "larvaecast/dense_network.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/preprocess.hpp"
#include "larvaecast/random.hpp"
#include "larvaecast/series.hpp"
#include "larvaecast/tensor.hpp"
#include "larvaecast/training.hpp"

namespace larvaecast::nn {

enum Gate : std::size_t { kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3 };
inline constexpr std::size_t kGateCount = 4;

template <typename Scalar_>
struct LstmParameters {
  using Scalar = Scalar_;

  std::array<Matrix<Scalar>, kGateCount> input_weights;      // hidden x input
  std::array<Matrix<Scalar>, kGateCount> recurrent_weights;  // hidden x hidden
  std::array<Vector<Scalar>, kGateCount> gate_biases;        // hidden
  Matrix<Scalar> head_weights;                               // output_len x hidden
  Vector<Scalar> head_bias;                                  // output_len

  LstmParameters zeros_like() const {
    LstmParameters out;
    for (std::size_t k = 0; k < kGateCount; ++k) {
      out.input_weights[k] = Matrix<Scalar>::Zero(input_weights[k].rows(), input_weights[k].cols());
      out.recurrent_weights[k] = Matrix<Scalar>::Zero(recurrent_weights[k].rows(), recurrent_weights[k].cols());
      out.gate_biases[k] = Vector<Scalar>::Zero(gate_biases[k].size());
    }
    out.head_weights = Matrix<Scalar>::Zero(head_weights.rows(), head_weights.cols());
    out.head_bias = Vector<Scalar>::Zero(head_bias.size());
    return out;
  }

  template <typename Self>
  static auto collect(Self& self) {
    std::vector<decltype(flat(self.head_bias))> out;
    for (std::size_t k = 0; k < kGateCount; ++k) {
      out.push_back(flat(self.input_weights[k]));
      out.push_back(flat(self.recurrent_weights[k]));
      out.push_back(flat(self.gate_biases[k]));
    }
    out.push_back(flat(self.head_weights));
    out.push_back(flat(self.head_bias));
    return out;
  }

  std::vector<FlatView<Scalar>> views() { return collect(*this); }
  std::vector<ConstFlatView<Scalar>> views() const { return collect(*this); }

  friend bool operator==(const LstmParameters& a, const LstmParameters& b) {
    const auto va = a.views();
    const auto vb = b.views();
    if (va.size() != vb.size()) return false;
    for (std::size_t i = 0; i < va.size(); ++i)
      if (va[i].size() != vb[i].size() || !(va[i] == vb[i]).all()) return false;
    return a.head_weights.rows() == b.head_weights.rows() && a.head_weights.cols() == b.head_weights.cols() &&
           a.input_weights[0].cols() == b.input_weights[0].cols();
  }
};

template <typename Scalar_>
struct LstmModel {
  using Scalar = Scalar_;

  Eigen::Index hidden_size = 0;
  Eigen::Index input_size = 0;
  Eigen::Index output_len = 0;
  double input_dropout_rate = 0.0;
  LstmParameters<Scalar> params;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& v : params.views()) n += static_cast<std::size_t>(v.size());
    return n;
  }

  void validate() const {
    if (hidden_size < 1 || input_size < 1 || output_len < 1)
      throw ConfigError("lstm: sizes must be positive");
    if (!(input_dropout_rate >= 0.0 && input_dropout_rate < 1.0))
      throw ConfigError("lstm: dropout rate must lie in [0, 1)");
    for (std::size_t k = 0; k < kGateCount; ++k) {
      require_shape(params.input_weights[k], hidden_size, input_size, "lstm input weights");
      require_shape(params.recurrent_weights[k], hidden_size, hidden_size, "lstm recurrent weights");
      require_shape(params.gate_biases[k], hidden_size, 1, "lstm gate bias");
    }
    require_shape(params.head_weights, output_len, hidden_size, "lstm head weights");
    require_shape(params.head_bias, output_len, 1, "lstm head bias");
  }

  friend bool operator==(const LstmModel& a, const LstmModel& b) {
    return a.hidden_size == b.hidden_size && a.input_size == b.input_size && a.output_len == b.output_len &&
           a.input_dropout_rate == b.input_dropout_rate && a.params == b.params;
  }
};

using LstmModeld = LstmModel<double>;

/// Lookback (T_x) and horizon (T_y) of the sliding windows.
struct WindowConfig {
  std::size_t lookback = 20;
  std::size_t horizon = 10;

  void validate() const {
    if (lookback < 1 || horizon < 1) throw ConfigError("window lookback and horizon must be positive");
    if (horizon > lookback) throw ConfigError("window horizon must not exceed lookback");
  }
};

inline constexpr Eigen::Index kClimateHiddenSize = 32;
inline constexpr double kClimateInputDropout = 0.2;

/// Xavier-uniform weights, zero biases except the forget gate at 1.
template <typename Scalar = double>
LstmModel<Scalar> init_lstm(Eigen::Index hidden_size, Eigen::Index input_size, Eigen::Index output_len,
                            std::uint64_t seed, double input_dropout_rate = 0.0) {
  if (hidden_size < 1 || input_size < 1 || output_len < 1) throw ConfigError("init_lstm: sizes must be positive");
  LstmModel<Scalar> model;
  model.hidden_size = hidden_size;
  model.input_size = input_size;
  model.output_len = output_len;
  model.input_dropout_rate = input_dropout_rate;
  RandomStream rng(seed);
  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix<Scalar> m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
    return m;
  };
  for (std::size_t k = 0; k < kGateCount; ++k) {
    model.params.input_weights[k] = glorot(hidden_size, input_size);
    model.params.recurrent_weights[k] = glorot(hidden_size, hidden_size);
    model.params.gate_biases[k] = Vector<Scalar>::Constant(hidden_size, k == kForget ? Scalar(1) : Scalar(0));
  }
  model.params.head_weights = glorot(output_len, hidden_size);
  model.params.head_bias = Vector<Scalar>::Zero(output_len);
  model.validate();
  return model;
}

/// The climate forecaster: 1 input, 32 units, 10-value head.
inline LstmModeld climate_lstm(std::uint64_t seed, Eigen::Index horizon = 10) {
  return init_lstm<double>(kClimateHiddenSize, 1, horizon, seed, kClimateInputDropout);
}

template <typename Scalar>
struct LstmCellCache {
  Matrix<Scalar> x, h_prev, c_prev;
  std::array<Matrix<Scalar>, kGateCount> gates;  // post-nonlinearity
  Matrix<Scalar> c, tanh_c;
};

template <typename Scalar>
struct LstmCellOutput {
  Matrix<Scalar> h;
  Matrix<Scalar> c;
  LstmCellCache<Scalar> cache;
};

template <typename Scalar>
Matrix<Scalar> sigmoid(const Matrix<Scalar>& z) {
  return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
}

/// One LSTM step on a batch (columns).
template <typename Scalar>
LstmCellOutput<Scalar> lstm_cell(const LstmModel<Scalar>& model, const Matrix<Scalar>& x,
                                 const Matrix<Scalar>& h_prev, const Matrix<Scalar>& c_prev) {
  const Eigen::Index batch = x.cols();
  require_shape(x, model.input_size, batch, "lstm_cell input");
  require_shape(h_prev, model.hidden_size, batch, "lstm_cell h_prev");
  require_shape(c_prev, model.hidden_size, batch, "lstm_cell c_prev");

  LstmCellOutput<Scalar> out;
  auto& cache = out.cache;
  const auto& p = model.params;
  for (std::size_t k = 0; k < kGateCount; ++k) {
    Matrix<Scalar> z = p.input_weights[k] * x + p.recurrent_weights[k] * h_prev;
    z.colwise() += p.gate_biases[k];
    cache.gates[k] = k == kCandidate ? Matrix<Scalar>(z.array().tanh().matrix()) : sigmoid(z);
  }
  cache.c = cache.gates[kForget].cwiseProduct(c_prev) + cache.gates[kInput].cwiseProduct(cache.gates[kCandidate]);
  cache.tanh_c = cache.c.array().tanh().matrix();
  out.h = cache.gates[kOutput].cwiseProduct(cache.tanh_c);
  out.c = cache.c;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  return out;
}

template <typename Scalar>
struct LstmCache {
  Mode mode = Mode::kEval;
  std::vector<LstmCellCache<Scalar>> steps;
  Matrix<Scalar> h_final;
};

template <typename Scalar>
struct LstmForward {
  Matrix<Scalar> prediction;  // output_len x batch
  LstmCache<Scalar> cache;
};

/// Unrolls the cell from h0 = c0 = 0 over `sequence` and applies the head to
/// the final hidden state. Train mode drops input values (inverted dropout).
template <typename Scalar>
LstmForward<Scalar> lstm_forward(const LstmModel<Scalar>& model, std::span<const Matrix<Scalar>> sequence,
                                 Mode mode, RandomStream* rng = nullptr) {
  if (sequence.empty()) throw ShapeError("lstm_forward: empty sequence");
  const Eigen::Index batch = sequence.front().cols();
  const bool use_dropout = mode == Mode::kTrain && model.input_dropout_rate > 0.0;
  if (use_dropout && rng == nullptr) throw ConfigError("lstm_forward: train mode needs a random stream");

  LstmForward<Scalar> out;
  out.cache.mode = mode;
  Matrix<Scalar> h = Matrix<Scalar>::Zero(model.hidden_size, batch);
  Matrix<Scalar> c = Matrix<Scalar>::Zero(model.hidden_size, batch);
  for (const auto& step : sequence) {
    require_shape(step, model.input_size, batch, "lstm_forward step");
    Matrix<Scalar> x = step;
    if (use_dropout)
      x.array() *= dropout_mask<Scalar>(x.rows(), x.cols(), model.input_dropout_rate, *rng).array();
    auto cell = lstm_cell(model, x, h, c);
    h = std::move(cell.h);
    c = std::move(cell.c);
    out.cache.steps.push_back(std::move(cell.cache));
  }
  out.prediction = model.params.head_weights * h;
  out.prediction.colwise() += model.params.head_bias;
  out.cache.h_final = std::move(h);
  return out;
}

/// Splits lookback x batch univariate windows into one 1 x batch step each.
template <typename Derived>
std::vector<Matrix<typename Derived::Scalar>> univariate_sequence(const Eigen::MatrixBase<Derived>& windows) {
  std::vector<Matrix<typename Derived::Scalar>> steps;
  steps.reserve(static_cast<std::size_t>(windows.rows()));
  for (Eigen::Index t = 0; t < windows.rows(); ++t) steps.emplace_back(windows.row(t));
  return steps;
}

/// Single univariate window convenience overload.
template <typename Scalar>
LstmForward<Scalar> lstm_forward(const LstmModel<Scalar>& model, const Vector<Scalar>& window, Mode mode,
                                 RandomStream* rng = nullptr) {
  if (model.input_size != 1) throw ShapeError("lstm_forward: vector window needs a univariate model");
  const auto steps = univariate_sequence(window);
  return lstm_forward(model, std::span<const Matrix<Scalar>>(steps), mode, rng);
}

/// Backpropagation through time of mse_loss(prediction, target).
template <typename Scalar>
LstmParameters<Scalar> lstm_backward(const LstmModel<Scalar>& model, const LstmForward<Scalar>& fwd,
                                     const Matrix<Scalar>& target) {
  const auto& cache = fwd.cache;
  require_shape(target, fwd.prediction.rows(), fwd.prediction.cols(), "lstm_backward target");
  require_shape(fwd.prediction, model.output_len, fwd.prediction.cols(), "lstm_backward prediction");
  require_shape(cache.h_final, model.hidden_size, fwd.prediction.cols(), "lstm_backward cache");
  if (cache.steps.empty()) throw ShapeError("lstm_backward: empty cache");

  const auto& p = model.params;
  LstmParameters<Scalar> grads = p.zeros_like();
  const Matrix<Scalar> dpred = (fwd.prediction - target) * (Scalar(2) / static_cast<Scalar>(target.size()));
  grads.head_weights.noalias() = dpred * cache.h_final.transpose();
  grads.head_bias = dpred.rowwise().sum();

  Matrix<Scalar> dh = p.head_weights.transpose() * dpred;
  Matrix<Scalar> dc = Matrix<Scalar>::Zero(dh.rows(), dh.cols());
  std::array<Matrix<Scalar>, kGateCount> dz;
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const auto& s = cache.steps[t];
    const auto& gi = s.gates[kInput];
    const auto& gf = s.gates[kForget];
    const auto& go = s.gates[kOutput];
    const auto& gg = s.gates[kCandidate];
    dc.array() += dh.array() * go.array() * (Scalar(1) - s.tanh_c.array().square());
    const auto one = Scalar(1);
    dz[kOutput] = (dh.array() * s.tanh_c.array() * go.array() * (one - go.array())).matrix();
    dz[kInput] = (dc.array() * gg.array() * gi.array() * (one - gi.array())).matrix();
    dz[kForget] = (dc.array() * s.c_prev.array() * gf.array() * (one - gf.array())).matrix();
    dz[kCandidate] = (dc.array() * gi.array() * (one - gg.array().square())).matrix();
    dc = dc.cwiseProduct(gf);
    dh.setZero();
    for (std::size_t k = 0; k < kGateCount; ++k) {
      grads.input_weights[k].noalias() += dz[k] * s.x.transpose();
      grads.recurrent_weights[k].noalias() += dz[k] * s.h_prev.transpose();
      grads.gate_biases[k] += dz[k].rowwise().sum();
      dh.noalias() += p.recurrent_weights[k].transpose() * dz[k];
    }
  }
  return grads;
}

/// One standardized (input, target) training pair. Both halves are scaled by
/// the statistics of the input window, which are kept for inversion.
struct WindowPair {
  Eigen::VectorXd input;
  Eigen::VectorXd target;
  StandardScaler scaler;
};

/// All stride-1 windows of `series` with lookback + horizon values each.
inline std::vector<WindowPair> make_windows(const RegionSeries& series, const WindowConfig& cfg) {
  cfg.validate();
  const std::size_t span_len = cfg.lookback + cfg.horizon;
  if (series.values.size() < span_len)
    throw DataError("series " + series.label() + " has " + std::to_string(series.values.size()) +
                    " values; windows need at least " + std::to_string(span_len));
  std::vector<WindowPair> pairs;
  const auto values = Eigen::Map<const Eigen::VectorXd>(series.values.data(),
                                                        static_cast<Eigen::Index>(series.values.size()));
  const auto lookback = static_cast<Eigen::Index>(cfg.lookback);
  const auto horizon = static_cast<Eigen::Index>(cfg.horizon);
  for (Eigen::Index start = 0; start + lookback + horizon <= values.size(); ++start) {
    WindowPair pair;
    pair.scaler = fit_scaler(values.segment(start, lookback));
    pair.input = pair.scaler.apply(values.segment(start, lookback));
    pair.target = pair.scaler.apply(values.segment(start + lookback, horizon));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

/// Trains a fresh univariate LSTM on pooled window pairs with the same
/// optimizer, batching and plateau rule as the abundance regressor.
inline TrainingResult<LstmModeld> train_lstm(std::span<const WindowPair> pairs, const TrainConfig& cfg,
                                             Eigen::Index hidden_size = kClimateHiddenSize,
                                             double input_dropout_rate = kClimateInputDropout) {
  cfg.validate();
  if (pairs.empty()) throw ConfigError("train_lstm: no window pairs");
  const auto lookback = pairs.front().input.size();
  const auto horizon = pairs.front().target.size();
  Eigen::MatrixXd inputs(lookback, static_cast<Eigen::Index>(pairs.size()));
  Eigen::MatrixXd targets(horizon, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].input.size() != lookback || pairs[i].target.size() != horizon)
      throw ShapeError("train_lstm: window pairs have inconsistent lengths");
    inputs.col(static_cast<Eigen::Index>(i)) = pairs[i].input;
    targets.col(static_cast<Eigen::Index>(i)) = pairs[i].target;
  }

  TrainingResult<LstmModeld> result{
      init_lstm<double>(hidden_size, 1, horizon, derive_seed(cfg.seed, 0x157A), input_dropout_rate), {}};
  std::vector<Eigen::Index> idx;
  result.log = run_minibatch_training(
      result.model, pairs.size(), cfg,
      [&](const LstmModeld& model, std::span<const std::size_t> batch, RandomStream& rng) {
        idx.assign(batch.begin(), batch.end());
        const Eigen::MatrixXd x = inputs(Eigen::all, idx);
        const Eigen::MatrixXd y = targets(Eigen::all, idx);
        const auto steps = univariate_sequence(x);
        auto fwd = lstm_forward(model, std::span<const Eigen::MatrixXd>(steps), Mode::kTrain, &rng);
        const double loss = mse_loss(fwd.prediction, y);
        return std::pair{loss, lstm_backward(model, fwd, y)};
      });
  return result;
}

/// A trained univariate LSTM bound to its window configuration; maps a
/// standardized lookback window to a standardized horizon block.
struct LstmForecaster {
  LstmModeld model;
  WindowConfig windows;

  Eigen::VectorXd operator()(const Eigen::VectorXd& standardized_window) const {
    if (static_cast<std::size_t>(standardized_window.size()) != windows.lookback)
      throw ShapeError("forecaster: window has " + std::to_string(standardized_window.size()) +
                       " values, expected " + std::to_string(windows.lookback));
    return lstm_forward(model, standardized_window, Mode::kEval).prediction.col(0);
  }
};

}  // namespace larvaecast::nn
