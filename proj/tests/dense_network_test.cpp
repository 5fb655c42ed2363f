#include "doctest.h"
#include "larvaecast/dense_network.hpp"
#include "larvaecast/error.hpp"
#include "test_support.hpp"

using namespace larvaecast;
using namespace larvaecast::nn;

namespace {

DenseNetworkd single_layer(Eigen::MatrixXd w, Eigen::VectorXd b, Activation act) {
  DenseNetworkd net;
  net.layer_dims = {w.cols(), w.rows()};
  net.activations = {act};
  net.params.weights = {std::move(w)};
  net.params.biases = {std::move(b)};
  net.validate();
  return net;
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("abundance architecture has 21313 parameters") {
  const auto net = xavier_init(abundance_layer_dims(), 1, kAbundanceDropout);
  CHECK(net.parameter_count() == 21313);
  CHECK(net.parameter_count() == (6 * 64 + 64) + 5 * (64 * 64 + 64) + (64 + 1));
  CHECK(net.activations.back() == Activation::kIdentity);
  for (std::size_t i = 0; i + 1 < net.activations.size(); ++i) CHECK(net.activations[i] == Activation::kRelu);
}

TEST_CASE("xavier_init bounds, zero biases and determinism") {
  const auto tiny = xavier_init({1, 1}, 3);
  CHECK(std::abs(tiny.params.weights[0](0, 0)) <= std::sqrt(3.0));
  CHECK(tiny.params.biases[0](0) == 0.0);

  const auto a = xavier_init(abundance_layer_dims(), 42);
  const auto b = xavier_init(abundance_layer_dims(), 42);
  CHECK(a == b);
  CHECK_FALSE(a == xavier_init(abundance_layer_dims(), 43));
  for (std::size_t i = 0; i < a.num_layers(); ++i) {
    const double bound = std::sqrt(6.0 / static_cast<double>(a.layer_dims[i] + a.layer_dims[i + 1]));
    CHECK(a.params.weights[i].cwiseAbs().maxCoeff() <= bound);
    CHECK(a.params.biases[i].isZero());
  }

  CHECK_THROWS_AS(xavier_init({}, 1), ConfigError);
  CHECK_THROWS_AS(xavier_init({4}, 1), ConfigError);
  CHECK_THROWS_AS(xavier_init({4, 0, 1}, 1), ConfigError);
}

TEST_CASE("forward pass examples") {
  const auto identity2 = single_layer(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero(), Activation::kRelu);
  const Eigen::Vector2d x(-1.0, 2.0);
  const auto out = forward(identity2, x, Mode::kEval).prediction;
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 0) == 2.0);

  auto zero = xavier_init({6, 16, 16, 1}, 5);
  for (auto v : zero.params.views()) v.setZero();
  RandomStream rng(1);
  CHECK(predict(zero, random_matrix(6, 4, rng)).isZero());

  CHECK_THROWS_AS(forward(zero, Eigen::VectorXd::Ones(5), Mode::kEval), ShapeError);
  CHECK_THROWS_AS(forward(xavier_init({6, 4, 1}, 1, 0.5), Eigen::VectorXd::Ones(6), Mode::kTrain), ConfigError);
}

TEST_CASE("train-mode dropout masks are exactly 0 or 1/(1-p)") {
  auto net = xavier_init({6, 64, 64, 1}, 9, 0.2);
  RandomStream data(2);
  const Eigen::MatrixXd x = random_matrix(6, 16, data);
  RandomStream rng(77);
  const auto fwd = forward(net, x, Mode::kTrain, &rng);
  REQUIRE(fwd.cache.masks.size() == 2);
  std::size_t dropped = 0;
  for (const auto& mask : fwd.cache.masks)
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
      const double m = mask.data()[i];
      CHECK((m == 0.0 || m == 1.25));
      dropped += m == 0.0;
    }
  CHECK(dropped > 0);
  // The masked activation feeding layer 1 is relu(z0) * mask, elementwise.
  const Eigen::MatrixXd expected = fwd.cache.pre_activations[0].cwiseMax(0.0).cwiseProduct(fwd.cache.masks[0]);
  CHECK(fwd.cache.inputs[1] == expected);

  const auto eval = forward(net, x, Mode::kEval);
  for (const auto& mask : eval.cache.masks) CHECK(mask.size() == 0);
}

TEST_CASE("inverted dropout preserves the expected activation") {
  RandomStream rng(2024);
  const auto mask = dropout_mask<double>(1, 200000, 0.2, rng);
  CHECK(mask.mean() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("eval forward is pure") {
  const auto net = xavier_init({6, 16, 16, 1}, 11, 0.2);
  RandomStream rng(3);
  const Eigen::MatrixXd x = random_matrix(6, 10, rng);
  CHECK(predict(net, x) == predict(net, x));
}

TEST_CASE("mse_loss examples") {
  CHECK(mse_loss(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2)) == 0.0);
  CHECK(mse_loss(Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 1.0)) == 4.0);
  CHECK(mse_loss(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, -1)) == 1.0);
  CHECK_THROWS_AS(mse_loss(Eigen::VectorXd(Eigen::Vector2d(0, 0)), Eigen::VectorXd(Eigen::Vector3d(1, -1, 0))), ShapeError);
}

TEST_CASE("backward by hand") {
  auto zero = single_layer(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), Activation::kIdentity);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd target0 = Eigen::VectorXd::Zero(1);
  const auto g0 = backward(zero, forward(zero, one, Mode::kEval), target0);
  CHECK(g0.weights[0].isZero());
  CHECK(g0.biases[0].isZero());

  auto unit = single_layer(Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), Activation::kIdentity);
  const auto g = backward(unit, forward(unit, Eigen::VectorXd::Constant(1, 2.0), Mode::kEval), target0);
  CHECK(g.weights[0](0, 0) == doctest::Approx(8.0));
  CHECK(g.biases[0](0) == doctest::Approx(4.0));
}

TEST_CASE("dense gradients match central differences") {
  const std::vector<std::vector<Eigen::Index>> shapes = {{6, 8, 1}, {6, 16, 16, 1}, {3, 5, 4, 2}};
  for (std::uint64_t trial = 0; trial < 12; ++trial) {
    const auto& dims = shapes[trial % shapes.size()];
    auto net = xavier_init(dims, 100 + trial);
    RandomStream rng(trial);
    for (auto& b : net.params.biases)
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.normal(0.0, 0.1);
    const Eigen::MatrixXd x = random_matrix(dims.front(), 3, rng);
    const Eigen::MatrixXd y = random_matrix(dims.back(), 3, rng);
    const auto grads = backward(net, forward(net, x, Mode::kEval), y);
    const auto check = testing::check_gradients<DenseParameters<double>>(
        net.params, grads, [&](const DenseParameters<double>& p) {
          auto probe = net;
          probe.params = p;
          return mse_loss(predict(probe, x), y);
        });
    CAPTURE(trial);
    CHECK(check.worst < 1e-4);
  }
}

TEST_CASE("backward replays train-mode dropout masks") {
  auto net = xavier_init({4, 8, 8, 1}, 21, 0.3);
  RandomStream data(5);
  const Eigen::MatrixXd x = random_matrix(4, 6, data);
  const Eigen::MatrixXd y = random_matrix(1, 6, data);
  RandomStream rng(8);
  const auto fwd = forward(net, x, Mode::kTrain, &rng);
  const auto grads = backward(net, fwd, y);
  // With the masks frozen the network is a deterministic function again.
  const auto check = testing::check_gradients<DenseParameters<double>>(net.params, grads, [&](const DenseParameters<double>& p) {
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      Eigen::MatrixXd z = (p.weights[i] * a).colwise() + p.biases[i];
      a = i + 1 < p.weights.size() ? Eigen::MatrixXd(z.cwiseMax(0.0).cwiseProduct(fwd.cache.masks[i])) : z;
    }
    return mse_loss(a, y);
  });
  CHECK(check.worst < 1e-4);
}

TEST_CASE("backward rejects mismatched caches") {
  const auto net = xavier_init({3, 4, 1}, 2);
  const auto other = xavier_init({3, 4, 4, 1}, 2);
  const auto fwd = forward(other, Eigen::VectorXd::Ones(3), Mode::kEval);
  CHECK_THROWS_AS(backward(net, fwd, Eigen::VectorXd::Zero(1)), ShapeError);
}
