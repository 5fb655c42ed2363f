#include "doctest.h"
#include "larvaecast/dense_network.hpp"
#include "larvaecast/error.hpp"
#include "larvaecast/stats.hpp"
#include "larvaecast/training.hpp"

using namespace larvaecast;
using namespace larvaecast::nn;

namespace {

DenseParameters<double> scalar_params(double w, double b) {
  DenseParameters<double> p;
  p.weights.push_back(Eigen::MatrixXd::Constant(1, 1, w));
  p.biases.push_back(Eigen::VectorXd::Constant(1, b));
  return p;
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.batch_size == 8);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.beta1 = 0.9995;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("Adam first step moves each parameter by about lr against the gradient sign") {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  auto params = scalar_params(1.0, -2.0);
  auto state = AdamState<DenseParameters<double>>::zeros_like(params);
  adam_step(params, scalar_params(3.7, -0.002), state, cfg);
  CHECK(params.weights[0](0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-9));
  CHECK(params.biases[0](0) == doctest::Approx(-2.0 + 0.01).epsilon(1e-6));
  CHECK(state.step_count == 1);
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  TrainConfig cfg;
  auto params = scalar_params(0.3, 0.4);
  auto state = AdamState<DenseParameters<double>>::zeros_like(params);
  adam_step(params, params.zeros_like(), state, cfg);
  CHECK(params == scalar_params(0.3, 0.4));
  CHECK(state.step_count == 1);
}

TEST_CASE("Adam reproduces the hand-evaluated recurrences for two steps") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  const double g = 0.5;
  auto params = scalar_params(1.0, 0.0);
  auto state = AdamState<DenseParameters<double>>::zeros_like(params);

  adam_step(params, scalar_params(g, g), state, cfg);
  // m1 = 0.1 g, v1 = 0.001 g^2, m_hat = g, v_hat = g^2
  CHECK(state.first_moment.weights[0](0, 0) == doctest::Approx(0.05));
  CHECK(state.second_moment.weights[0](0, 0) == doctest::Approx(0.00025));
  const double theta1 = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(params.weights[0](0, 0) == doctest::Approx(theta1).epsilon(1e-14));

  adam_step(params, scalar_params(g, g), state, cfg);
  // m2 = 0.9 * 0.05 + 0.1 * 0.5 = 0.095, v2 = 0.999 * 0.00025 + 0.001 * 0.25 = 0.00049975
  CHECK(state.first_moment.weights[0](0, 0) == doctest::Approx(0.095));
  CHECK(state.second_moment.weights[0](0, 0) == doctest::Approx(0.00049975));
  const double m_hat = 0.095 / (1.0 - 0.81);
  const double v_hat = 0.00049975 / (1.0 - 0.998001);
  const double theta2 = theta1 - 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(params.weights[0](0, 0) == doctest::Approx(theta2).epsilon(1e-14));
  CHECK(state.step_count == 2);
}

TEST_CASE("Adam rejects incongruent gradients") {
  TrainConfig cfg;
  auto params = scalar_params(1.0, 1.0);
  auto state = AdamState<DenseParameters<double>>::zeros_like(params);
  auto grads = scalar_params(1.0, 1.0);
  grads.weights[0] = Eigen::MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(adam_step(params, grads, state, cfg), ShapeError);
}

TEST_CASE("plateau detector") {
  SUBCASE("constant loss halts after patience epochs without improvement") {
    PlateauDetector detector(50, 1e-4);
    std::size_t epochs = 0;
    while (!detector.push(0.7)) ++epochs;
    CHECK(epochs == 50);
  }
  SUBCASE("steady improvement keeps training") {
    PlateauDetector detector(5, 1e-4);
    double loss = 1.0;
    for (int i = 0; i < 200; ++i) {
      CHECK_FALSE(detector.push(loss));
      loss *= 0.99;
    }
  }
  SUBCASE("tiny relative improvement counts as a plateau") {
    PlateauDetector detector(3, 1e-4);
    CHECK_FALSE(detector.push(1.0));
    CHECK_FALSE(detector.push(1.0 - 1e-6));
    CHECK_FALSE(detector.push(1.0 - 2e-6));
    CHECK(detector.push(1.0 - 3e-6));
  }
  SUBCASE("non-finite loss stops immediately") {
    PlateauDetector detector(10, 1e-4);
    CHECK(detector.push(std::numeric_limits<double>::quiet_NaN()));
  }
}

TEST_CASE("train_abundance learns a linear signal") {
  RandomStream rng(31);
  const Eigen::Index n = 200;
  Eigen::MatrixXd x(n, 6);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rng.normal();
    y(i) = 0.5 * x(i, 0) - 0.2 * x(i, 1) + rng.normal(0.0, 0.05);
  }
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.max_epochs = 300;
  const auto result = train_abundance(x, y, cfg);
  const Eigen::VectorXd pred = predict(result.model, x.transpose()).transpose();
  const double r = stats::pearson_r(std::span(pred.data(), n), std::span(y.data(), n));
  MESSAGE("linear signal training R = " << r << " after " << result.log.epoch_losses.size() << " epochs");
  CHECK(r >= 0.95);
}

TEST_CASE("train_abundance memorizes a single repeated example") {
  Eigen::MatrixXd x = Eigen::RowVectorXd::LinSpaced(6, -1.0, 1.0).replicate(8, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(8, 1.7);
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.max_epochs = 3000;
  cfg.plateau_tolerance = 1e-6;
  const auto result = train_abundance(x, y, cfg, {6, 16, 16, 1}, 0.0);
  CHECK(result.log.epoch_losses.back() < 1e-6);
  CHECK(predict(result.model, x.row(0).transpose())(0, 0) == doctest::Approx(1.7).epsilon(1e-3));
}

TEST_CASE("train_abundance is bit-reproducible for a seed") {
  RandomStream rng(4);
  Eigen::MatrixXd x(40, 6);
  Eigen::VectorXd y(40);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.normal();
  TrainConfig cfg;
  cfg.seed = 99;
  cfg.max_epochs = 20;
  const auto a = train_abundance(x, y, cfg);
  const auto b = train_abundance(x, y, cfg);
  CHECK(a.model == b.model);
  CHECK(a.log.epoch_losses == b.log.epoch_losses);
  cfg.seed = 100;
  CHECK_FALSE(train_abundance(x, y, cfg).model == a.model);
}

TEST_CASE("train_abundance rejects degenerate inputs") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train_abundance(Eigen::MatrixXd(0, 6), Eigen::VectorXd(0), cfg), ConfigError);
  CHECK_THROWS_AS(train_abundance(Eigen::MatrixXd(Eigen::MatrixXd::Zero(4, 6)), Eigen::VectorXd(Eigen::VectorXd::Zero(4)), cfg),
                  ConfigError);
  CHECK_THROWS_AS(train_abundance(Eigen::MatrixXd(Eigen::MatrixXd::Zero(10, 6)), Eigen::VectorXd(Eigen::VectorXd::Zero(9)), cfg),
                  ShapeError);
}
