#include "doctest.h"
#include "larvaecast/error.hpp"
#include "larvaecast/lstm.hpp"
#include "test_support.hpp"

using namespace larvaecast;
using namespace larvaecast::nn;

namespace {

LstmModeld zero_model(Eigen::Index hidden, Eigen::Index input, Eigen::Index output) {
  auto m = init_lstm(hidden, input, output, 1);
  for (auto v : m.params.views()) v.setZero();
  return m;
}

void randomize(LstmModeld& model, RandomStream& rng, double sd) {
  for (auto v : model.params.views())
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal(0.0, sd);
}

double sigmoid_scalar(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Loop-by-loop cell written without Eigen expressions.
std::pair<std::vector<double>, std::vector<double>> reference_cell(const LstmModeld& m, const std::vector<double>& x,
                                                                   const std::vector<double>& h_prev,
                                                                   const std::vector<double>& c_prev) {
  const auto& p = m.params;
  std::vector<double> h(static_cast<std::size_t>(m.hidden_size)), c(h.size());
  for (Eigen::Index u = 0; u < m.hidden_size; ++u) {
    double pre[4];
    for (std::size_t k = 0; k < 4; ++k) {
      double s = p.gate_biases[k](u);
      for (Eigen::Index j = 0; j < m.input_size; ++j) s += p.input_weights[k](u, j) * x[static_cast<std::size_t>(j)];
      for (Eigen::Index j = 0; j < m.hidden_size; ++j)
        s += p.recurrent_weights[k](u, j) * h_prev[static_cast<std::size_t>(j)];
      pre[k] = s;
    }
    const double i = sigmoid_scalar(pre[0]), f = sigmoid_scalar(pre[1]), o = sigmoid_scalar(pre[2]);
    const double g = std::tanh(pre[3]);
    const auto uu = static_cast<std::size_t>(u);
    c[uu] = f * c_prev[uu] + i * g;
    h[uu] = o * std::tanh(c[uu]);
  }
  return {h, c};
}

Eigen::MatrixXd column(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("climate LSTM has 4682 parameters") {
  const auto model = climate_lstm(1);
  CHECK(model.parameter_count() == 4682);
  CHECK(model.parameter_count() == 4 * (32 * 1 + 32 * 32 + 32) + (32 * 10 + 10));
  CHECK(model.output_len == 10);
  CHECK(model.input_dropout_rate == 0.2);
  CHECK(model.params.gate_biases[kForget].isConstant(1.0));
  CHECK(model.params.gate_biases[kInput].isZero());
  CHECK(model == climate_lstm(1));
}

TEST_CASE("lstm_cell gate algebra on a zero model") {
  const auto model = zero_model(3, 1, 2);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 4.2);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 1);
  const auto out = lstm_cell(model, x, zero, zero);
  for (std::size_t k : {kInput, kForget, kOutput}) CHECK(out.cache.gates[k].isConstant(0.5));
  CHECK(out.cache.gates[kCandidate].isZero());
  CHECK(out.c.isZero());
  CHECK(out.h.isZero());

  const Eigen::MatrixXd c0 = Eigen::MatrixXd::Constant(3, 1, 1.6);
  const auto carried = lstm_cell(model, x, zero, c0);
  CHECK(carried.c.isConstant(0.8));
  CHECK(carried.h.isConstant(0.5 * std::tanh(0.8)));

  CHECK_THROWS_AS(lstm_cell(model, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 1)), zero, zero), ShapeError);
}

TEST_CASE("lstm_cell matches a hand-stepped reference") {
  RandomStream rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto model = init_lstm(5, 2, 3, 40 + trial);
    randomize(model, rng, 0.7);
    std::vector<double> x = {rng.normal(), rng.normal()}, h(5), c(5);
    for (auto& v : h) v = rng.normal(0.0, 0.5);
    for (auto& v : c) v = rng.normal(0.0, 0.5);
    const auto out = lstm_cell(model, column(x), column(h), column(c));
    const auto [rh, rc] = reference_cell(model, x, h, c);
    for (std::size_t u = 0; u < 5; ++u) {
      CHECK(out.h(static_cast<Eigen::Index>(u), 0) == doctest::Approx(rh[u]).epsilon(1e-13));
      CHECK(out.c(static_cast<Eigen::Index>(u), 0) == doctest::Approx(rc[u]).epsilon(1e-13));
    }
  }
}

TEST_CASE("lstm_forward examples") {
  const auto zero = zero_model(32, 1, 10);
  const Eigen::VectorXd window = Eigen::VectorXd::LinSpaced(20, -1.0, 1.0);
  CHECK(lstm_forward(zero, window, Mode::kEval).prediction.isZero());

  const auto model = climate_lstm(5);
  const auto a = lstm_forward(model, window, Mode::kEval).prediction;
  const auto b = lstm_forward(model, window, Mode::kEval).prediction;
  CHECK(a.rows() == 10);
  CHECK(a == b);
  CHECK(a.allFinite());

  // Head reads the final hidden state only.
  const auto fwd = lstm_forward(model, window, Mode::kEval);
  const Eigen::MatrixXd head = model.params.head_weights * fwd.cache.h_final + model.params.head_bias;
  CHECK(fwd.prediction.isApprox(head, 1e-15));

  CHECK_THROWS_AS(lstm_forward(model, window, Mode::kTrain), ConfigError);
  CHECK_THROWS_AS(lstm_forward(init_lstm(4, 2, 1, 1), window, Mode::kEval), ShapeError);
  const LstmForecaster forecaster{model, {20, 10}};
  CHECK_THROWS_AS(forecaster(Eigen::VectorXd::Zero(19)), ShapeError);
  CHECK(forecaster(window) == a.col(0));
}

TEST_CASE("lstm outputs stay finite for extreme inputs") {
  auto model = climate_lstm(2);
  RandomStream rng(8);
  randomize(model, rng, 5.0);
  const Eigen::VectorXd window = Eigen::VectorXd::Constant(20, 1e6);
  CHECK(lstm_forward(model, window, Mode::kEval).prediction.allFinite());
}

TEST_CASE("train-mode input dropout zeroes or rescales input steps") {
  auto model = zero_model(2, 1, 1);
  model.input_dropout_rate = 0.2;
  RandomStream rng(3);
  const Eigen::VectorXd window = Eigen::VectorXd::Ones(400);
  const auto fwd = lstm_forward(model, window, Mode::kTrain, &rng);
  std::size_t dropped = 0;
  for (const auto& step : fwd.cache.steps) {
    const double v = step.x(0, 0);
    CHECK((v == 0.0 || v == 1.25));
    dropped += v == 0.0;
  }
  CHECK(dropped > 40);
  CHECK(dropped < 120);
}

TEST_CASE("lstm_backward examples") {
  const auto zero = zero_model(3, 1, 2);
  const Eigen::VectorXd window = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  const auto g0 = lstm_backward(zero, lstm_forward(zero, window, Mode::kEval), Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 1)));
  for (const auto& v : g0.views()) CHECK(v.isZero());

  const auto model = init_lstm(4, 1, 2, 9);
  const auto fwd = lstm_forward(model, window, Mode::kEval);
  const Eigen::MatrixXd target = Eigen::Vector2d(0.3, -0.4);
  const auto g = lstm_backward(model, fwd, target);
  const Eigen::VectorXd expected = 2.0 * (fwd.prediction - target) / 2.0;
  CHECK(g.head_bias.isApprox(expected, 1e-15));

  CHECK_THROWS_AS(lstm_backward(model, fwd, Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 1))), ShapeError);
}

TEST_CASE("BPTT gradients match central differences") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    auto model = init_lstm(4, 1, 2, 300 + trial);
    RandomStream rng(trial);
    randomize(model, rng, 0.5);
    Eigen::MatrixXd windows(5, 3), target(2, 3);
    for (Eigen::Index i = 0; i < windows.size(); ++i) windows.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < target.size(); ++i) target.data()[i] = rng.normal();
    const auto steps = univariate_sequence(windows);
    const std::span<const Eigen::MatrixXd> seq(steps);
    const auto grads = lstm_backward(model, lstm_forward(model, seq, Mode::kEval), target);
    const auto check = testing::check_gradients<LstmParameters<double>>(
        model.params, grads, [&](const LstmParameters<double>& p) {
          auto probe = model;
          probe.params = p;
          return mse_loss(lstm_forward(probe, seq, Mode::kEval).prediction, target);
        });
    CAPTURE(trial);
    CHECK(check.worst < 1e-4);
  }
}

TEST_CASE("make_windows counts and standardization") {
  RegionSeries series{"R", VariableKind::kSummerTmean, 1979, {}};
  for (int i = 0; i < 43; ++i) series.values.push_back(10.0 + 0.1 * i * i);
  CHECK(make_windows(series, {20, 10}).size() == 14);

  series.values.resize(30);
  const auto one = make_windows(series, {20, 10});
  REQUIRE(one.size() == 1);
  CHECK(one[0].input.mean() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::sqrt(one[0].input.array().square().mean()) == doctest::Approx(1.0));
  // The target is scaled by the input window's statistics.
  CHECK(one[0].scaler.invert(one[0].target)(0) == doctest::Approx(series.values[20]));

  const RegionSeries constant{"C", VariableKind::kSummerPrecip, 2000, std::vector<double>(30, 7.0)};
  const auto flat_pairs = make_windows(constant, {20, 10});
  CHECK(flat_pairs[0].input.isZero());
  CHECK(flat_pairs[0].target.isZero());
  CHECK(flat_pairs[0].scaler.std == 1.0);

  series.values.resize(29);
  CHECK_THROWS_AS(make_windows(series, {20, 10}), DataError);
  CHECK_THROWS_AS(make_windows(series, {5, 10}), ConfigError);
}

TEST_CASE("train_lstm learns linear-trend continuation") {
  std::vector<WindowPair> train, held_out;
  RandomStream rng(17);
  for (int s = 0; s < 12; ++s) {
    RegionSeries series{"R" + std::to_string(s), VariableKind::kSummerTmean, 1979, {}};
    const double slope = (s % 2 == 0 ? 1.0 : -1.0) * rng.uniform(0.05, 0.5);
    const double intercept = rng.uniform(-10.0, 30.0);
    for (int t = 0; t < 43; ++t) series.values.push_back(intercept + slope * t);
    auto pairs = make_windows(series, {20, 10});
    auto& dest = s < 9 ? train : held_out;
    dest.insert(dest.end(), pairs.begin(), pairs.end());
  }
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.max_epochs = 400;
  const auto result = train_lstm(train, cfg);
  double mse = 0.0;
  for (const auto& pair : held_out)
    mse += mse_loss(lstm_forward(result.model, pair.input, Mode::kEval).prediction, pair.target);
  mse /= static_cast<double>(held_out.size());
  MESSAGE("held-out standardized MSE = " << mse << " after " << result.log.epoch_losses.size() << " epochs");
  CHECK(mse < 0.05);
}

TEST_CASE("train_lstm memorizes one pair and is reproducible") {
  WindowPair pair;
  pair.input = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
  pair.target = Eigen::Vector3d(0.2, -0.1, 0.4);
  const std::vector<WindowPair> pairs(8, pair);
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.max_epochs = 2000;
  cfg.plateau_tolerance = 1e-6;
  const auto result = train_lstm(pairs, cfg, 8, 0.0);
  CHECK(result.log.epoch_losses.back() < 1e-6);
  CHECK(result.model == train_lstm(pairs, cfg, 8, 0.0).model);
  CHECK_THROWS_AS(train_lstm(std::vector<WindowPair>{}, cfg), ConfigError);
}
