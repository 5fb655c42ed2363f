#pragma once

// Recursive multi-step climate forecasting. Each region's window is
// standardized, pushed through the block predictor, de-standardized, rolled
// forward by one block and re-standardized, `rounds` times.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "larvaecast/error.hpp"
#include "larvaecast/preprocess.hpp"
#include "larvaecast/series.hpp"
#include "larvaecast/tensor.hpp"

namespace larvaecast {

struct ForecastConfig {
  std::size_t lookback = 20;
  std::size_t horizon = 10;
  std::size_t rounds = 3;
  double sigma_floor = kSigmaFloor;

  void validate() const {
    if (lookback < 1 || horizon < 1 || rounds < 1) throw ConfigError("forecast: l, p and t must be positive");
    if (horizon > lookback) throw ConfigError("forecast: horizon p must not exceed lookback l");
    if (!(sigma_floor > 0.0)) throw ConfigError("forecast: sigma_floor must be positive");
  }

  /// Smallest number of rounds whose p*t block reaches `target_year`.
  static std::size_t rounds_to_reach(int last_observed_year, int target_year, std::size_t horizon) {
    if (target_year <= last_observed_year) throw ConfigError("target year must follow the last observed year");
    const auto needed = static_cast<std::size_t>(target_year - last_observed_year);
    return (needed + horizon - 1) / horizon;
  }
};

/// One region's forecast input: its last `lookback` observed values.
struct ForecastInput {
  std::string region_id;
  VariableKind variable = VariableKind::kSummerTmean;
  int last_year = 0;
  Eigen::VectorXd window;
};

struct ForecastResult {
  std::string region_id;
  VariableKind variable = VariableKind::kSummerTmean;
  int start_year = 0;
  std::vector<double> values;  // length horizon * rounds

  int year_at(std::size_t i) const { return start_year + static_cast<int>(i); }
};

/// Maps a standardized lookback window to a standardized horizon block.
using BlockPredictor = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Observer for the de-standardized rolled window after each round.
using RollObserver = std::function<void(std::size_t round, const Eigen::VectorXd& rolled_window)>;

/// Forecasts one window; returns horizon * rounds values in original units.
inline std::vector<double> forecast_window(const BlockPredictor& predict, const Eigen::VectorXd& window,
                                          const ForecastConfig& cfg, const RollObserver& observe = {}) {
  cfg.validate();
  if (static_cast<std::size_t>(window.size()) != cfg.lookback)
    throw ShapeError("forecast: window has " + std::to_string(window.size()) + " values, expected l=" +
                     std::to_string(cfg.lookback));
  const auto lookback = static_cast<Eigen::Index>(cfg.lookback);
  const auto horizon = static_cast<Eigen::Index>(cfg.horizon);

  std::vector<double> out;
  out.reserve(cfg.horizon * cfg.rounds);
  StandardScaler scaler = fit_scaler(window, cfg.sigma_floor);
  Eigen::VectorXd x = scaler.apply(window);
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    Eigen::VectorXd y = predict(x);
    if (y.size() != horizon)
      throw ShapeError("forecast: predictor returned " + std::to_string(y.size()) + " values, expected p=" +
                       std::to_string(cfg.horizon));
    y = scaler.invert(y);
    x = scaler.invert(x);
    out.insert(out.end(), y.data(), y.data() + y.size());

    Eigen::VectorXd rolled(lookback);
    rolled << x.tail(lookback - horizon), y;
    x = std::move(rolled);
    if (observe) observe(round, x);
    scaler = fit_scaler(x, cfg.sigma_floor);
    x = scaler.apply(x);
  }
  return out;
}

/// Forecasts every region independently; results keep input order.
inline std::vector<ForecastResult> forecast(const BlockPredictor& predict, const std::vector<ForecastInput>& inputs,
                                            const ForecastConfig& cfg) {
  cfg.validate();
  std::vector<ForecastResult> results;
  results.reserve(inputs.size());
  for (const auto& input : inputs) {
    ForecastResult r;
    r.region_id = input.region_id;
    r.variable = input.variable;
    r.start_year = input.last_year + 1;
    r.values = forecast_window(predict, input.window, cfg);
    results.push_back(std::move(r));
  }
  return results;
}

/// Constant adjustments between mean and min / max temperature.
struct OffsetK {
  double k_min = 0.0;
  double k_max = 0.0;

  friend bool operator==(const OffsetK&, const OffsetK&) = default;
};

struct MinMaxSeries {
  std::vector<double> min;
  std::vector<double> max;
};

/// min = mean - k_min, max = mean + k_max over the whole horizon.
inline MinMaxSeries derive_min_max(std::span<const double> mean, const OffsetK& k) {
  MinMaxSeries out;
  out.min.reserve(mean.size());
  out.max.reserve(mean.size());
  for (double v : mean) {
    out.min.push_back(v - k.k_min);
    out.max.push_back(v + k.k_max);
  }
  return out;
}

}  // namespace larvaecast
