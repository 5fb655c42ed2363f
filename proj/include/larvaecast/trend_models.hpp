#pragma once

// Auxiliary climate models: the damped periodic trend curve, MAE-optimal
// mean-to-extreme offsets, and the linear days-of-precipitation model.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "larvaecast/forecast_engine.hpp"
#include "larvaecast/series.hpp"

namespace larvaecast {

/// T(t) = lambda*t - exp(-alpha*t) * sin(theta*t) * gamma * t^beta + phi,
/// with t in years since the first year of the series.
struct TrendParams {
  double lambda = 0.01;
  double alpha = -0.01;
  double theta = 0.6;
  double gamma = 0.5;
  double beta = 0.03;
  double phi = 0.0;

  std::array<double, 6> to_array() const { return {lambda, alpha, theta, gamma, beta, phi}; }
  static TrendParams from_array(const std::array<double, 6>& a) { return {a[0], a[1], a[2], a[3], a[4], a[5]}; }

  friend bool operator==(const TrendParams&, const TrendParams&) = default;
};

/// Published approximate parameters with the given intercept.
inline TrendParams approximate_trend_params(double phi) {
  TrendParams p;
  p.phi = phi;
  return p;
}

double eval_trend(const TrendParams& params, double t);

struct TrendFit {
  TrendParams params;
  double sse = 0.0;
  std::size_t iterations = 0;
};

struct NelderMeadOptions {
  std::size_t max_iterations = 10000;
  double diameter_tolerance = 1e-8;
};

struct NelderMeadResult {
  std::vector<double> best;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization. Deterministic for a given start.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {});

/// Least-squares fit of the trend curve, started from the approximate
/// parameters with phi set to the first observed value.
TrendFit fit_trend(std::span<const double> values, const NelderMeadOptions& options = {});
TrendFit fit_trend(const RegionSeries& series, const NelderMeadOptions& options = {});

enum class ExtremeKind { kMin, kMax };

/// k minimizing mean |T_mean +- k - S|: the median of per-year differences
/// (mean - min, or max - mean); even counts take the central midpoint.
double estimate_k(std::span<const double> mean_series, std::span<const double> extreme_series, ExtremeKind kind);

OffsetK estimate_offsets(std::span<const double> mean_series, std::span<const double> min_series,
                         std::span<const double> max_series);

/// days = slope * amount_mm + intercept, clamped to [0, 31].
struct LinearModel {
  double slope = 0.0;
  double intercept = 0.0;

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// Ordinary least squares. Throws DataError for constant x.
LinearModel fit_linear(std::span<const double> x, std::span<const double> y);

double predict_days(const LinearModel& model, double amount_mm);

}  // namespace larvaecast
