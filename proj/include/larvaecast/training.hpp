#pragma once

// Optimizer and mini-batch loop shared by the dense regressor and the LSTM.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "larvaecast/dense_network.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/random.hpp"

namespace larvaecast::nn {

struct TrainConfig {
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t max_epochs = 5000;
  std::size_t plateau_patience = 50;
  double plateau_tolerance = 1e-4;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 > 0.0 && beta1 < beta2 && beta2 < 1.0))
      throw ConfigError("Adam moments must satisfy 0 < beta1 < beta2 < 1");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (plateau_patience < 1) throw ConfigError("plateau_patience must be >= 1");
    if (!(plateau_tolerance > 0.0)) throw ConfigError("plateau_tolerance must be positive");
  }
};

/// A parameter set exposes flat views of its tensors and can produce a
/// zero-filled copy of itself.
template <typename P>
concept ParameterSet = requires(P& p, const P& cp) {
  typename P::Scalar;
  { cp.zeros_like() } -> std::same_as<P>;
  p.views();
  cp.views();
};

template <ParameterSet Params>
struct AdamState {
  Params first_moment;
  Params second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros_like(const Params& params) {
    return AdamState{params.zeros_like(), params.zeros_like(), 0};
  }
};

/// One bias-corrected Adam update of `params` in place.
template <ParameterSet Params>
void adam_step(Params& params, const Params& grads, AdamState<Params>& state, const TrainConfig& cfg) {
  using Scalar = typename Params::Scalar;
  auto theta = params.views();
  const auto g = grads.views();
  auto m = state.first_moment.views();
  auto v = state.second_moment.views();
  if (g.size() != theta.size() || m.size() != theta.size() || v.size() != theta.size())
    throw ShapeError("adam_step: gradient/state tensor count differs from parameters");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (g[i].size() != theta[i].size() || m[i].size() != theta[i].size() || v[i].size() != theta[i].size())
      throw ShapeError("adam_step: tensor " + std::to_string(i) + " has mismatched size");
  }

  ++state.step_count;
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar step = static_cast<Scalar>(state.step_count);
  const Scalar correction1 = Scalar(1) - std::pow(b1, step);
  const Scalar correction2 = Scalar(1) - std::pow(b2, step);
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (Scalar(1) - b1) * g[i];
    v[i] = b2 * v[i] + (Scalar(1) - b2) * g[i].square();
    theta[i] -= lr * (m[i] / correction1) / ((v[i] / correction2).sqrt() + eps);
  }
}

/// Stops once the best loss seen has improved by less than `tolerance`
/// (relative) over the last `patience` epochs.
class PlateauDetector {
public:
  PlateauDetector(std::size_t patience, double tolerance) : patience_(patience), tolerance_(tolerance) {}

  /// Records one epoch loss; returns true when training should stop.
  bool push(double loss) {
    const double best = best_.empty() ? loss : std::min(best_.back(), loss);
    best_.push_back(best);
    if (!std::isfinite(loss)) return true;
    if (best_.size() <= patience_) return false;
    const double before = best_[best_.size() - 1 - patience_];
    const double improvement = before - best;
    if (before == 0.0) return true;
    return improvement / std::abs(before) < tolerance_;
  }

private:
  std::size_t patience_;
  double tolerance_;
  std::vector<double> best_;
};

struct TrainingLog {
  std::vector<double> epoch_losses;
  bool plateaued = false;
};

template <typename Model>
struct TrainingResult {
  Model model;
  TrainingLog log;
};

/// Shuffled mini-batch Adam loop. `loss_and_grad(model, batch, rng)` returns
/// the batch loss and a gradient record congruent with `model.params`.
/// The shuffle and all dropout draws for epoch e come from a stream seeded
/// by (cfg.seed, e), so runs are reproducible epoch by epoch.
template <typename Model, typename LossGrad>
TrainingLog run_minibatch_training(Model& model, std::size_t n_examples, const TrainConfig& cfg,
                                   LossGrad&& loss_and_grad) {
  cfg.validate();
  if (n_examples == 0) throw ConfigError("training set is empty");

  auto state = AdamState<decltype(model.params)>::zeros_like(model.params);
  PlateauDetector plateau(cfg.plateau_patience, cfg.plateau_tolerance);
  TrainingLog log;
  std::vector<std::size_t> order(n_examples);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    RandomStream rng(derive_seed(cfg.seed, epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_examples; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n_examples - start);
      const std::span<const std::size_t> batch(order.data() + start, count);
      const auto [loss, grads] = loss_and_grad(std::as_const(model), batch, rng);
      adam_step(model.params, grads, state, cfg);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(count);
    }
    epoch_loss /= static_cast<double>(n_examples);
    log.epoch_losses.push_back(epoch_loss);
    if (plateau.push(epoch_loss)) {
      log.plateaued = true;
      break;
    }
  }
  return log;
}

/// Trains the abundance regressor on standardized features (n x width,
/// one example per row) against log-transformed targets.
template <typename Scalar = double>
TrainingResult<DenseNetwork<Scalar>> train_abundance(const Matrix<Scalar>& features,
                                                     const Vector<Scalar>& targets,
                                                     const TrainConfig& cfg,
                                                     std::vector<Eigen::Index> layer_dims = abundance_layer_dims(),
                                                     double dropout_rate = kAbundanceDropout) {
  cfg.validate();
  if (features.rows() == 0) throw ConfigError("train_abundance: dataset is empty");
  if (targets.size() != features.rows()) throw ShapeError("train_abundance: target count differs from rows");
  if (static_cast<std::size_t>(features.rows()) < cfg.batch_size)
    throw ConfigError("train_abundance: fewer examples than one batch");
  if (layer_dims.front() != features.cols() || layer_dims.back() != 1)
    throw ConfigError("train_abundance: layer dims do not match feature width / scalar target");

  TrainingResult<DenseNetwork<Scalar>> result{xavier_init<Scalar>(layer_dims, derive_seed(cfg.seed, 0xA11CE), dropout_rate), {}};
  const Matrix<Scalar> columns = features.transpose();
  std::vector<Eigen::Index> idx;
  result.log = run_minibatch_training(
      result.model, static_cast<std::size_t>(features.rows()), cfg,
      [&](const DenseNetwork<Scalar>& net, std::span<const std::size_t> batch, RandomStream& rng) {
        idx.assign(batch.begin(), batch.end());
        const Matrix<Scalar> x = columns(Eigen::all, idx);
        const Matrix<Scalar> y = targets(idx).transpose();
        auto fwd = forward(net, x, Mode::kTrain, &rng);
        const Scalar loss = mse_loss(fwd.prediction, y);
        return std::pair{loss, backward(net, fwd, y)};
      });
  return result;
}

}  // namespace larvaecast::nn
