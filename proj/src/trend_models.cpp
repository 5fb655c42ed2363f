#include "larvaecast/trend_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "larvaecast/error.hpp"

namespace larvaecast {

double eval_trend(const TrendParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("eval_trend: t must be >= 0, got " + std::to_string(t));
  const double power = t == 0.0 ? 0.0 : std::pow(t, p.beta);
  return p.lambda * t - std::exp(-p.alpha * t) * std::sin(p.theta * t) * p.gamma * power + p.phi;
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options) {
  const std::size_t n = start.size();
  if (n == 0) throw ConfigError("nelder_mead: empty parameter vector");
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  std::vector<std::vector<double>> simplex(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) {
    double& v = simplex[i + 1][i];
    v = v != 0.0 ? v * 1.05 : 0.00025;
  }
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = objective(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s(n + 1);
    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = std::move(simplex[order[i]]);
      f[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(f);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(simplex[i][j] - simplex[0][j]));
    return d;
  };
  auto along = [&](const std::vector<double>& from, const std::vector<double>& to, double scale) {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = from[j] + scale * (to[j] - from[j]);
    return p;
  };

  NelderMeadResult result;
  sort_simplex();
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (diameter() < options.diameter_tolerance) {
      result.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);

    const auto reflected = along(centroid, simplex[n], -kReflect);
    const double f_reflected = objective(reflected);
    if (f_reflected < values[0]) {
      const auto expanded = along(centroid, simplex[n], -kExpand);
      const double f_expanded = objective(expanded);
      if (f_expanded < f_reflected) {
        simplex[n] = expanded;
        values[n] = f_expanded;
      } else {
        simplex[n] = reflected;
        values[n] = f_reflected;
      }
    } else if (f_reflected < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = f_reflected;
    } else {
      const bool outside = f_reflected < values[n];
      const auto contracted = outside ? along(centroid, reflected, kContract) : along(centroid, simplex[n], kContract);
      const double f_contracted = objective(contracted);
      if (f_contracted < (outside ? f_reflected : values[n])) {
        simplex[n] = contracted;
        values[n] = f_contracted;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = along(simplex[0], simplex[i], kShrink);
          values[i] = objective(simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  result.best = simplex[0];
  result.value = values[0];
  result.iterations = iter;
  return result;
}

TrendFit fit_trend(std::span<const double> values, const NelderMeadOptions& options) {
  if (values.size() < 6)
    throw DataError("fit_trend: need at least 6 values, got " + std::to_string(values.size()));
  auto sse = [values](std::span<const double> a) {
    const auto p = TrendParams::from_array({a[0], a[1], a[2], a[3], a[4], a[5]});
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double r = eval_trend(p, static_cast<double>(i)) - values[i];
      total += r * r;
    }
    return std::isfinite(total) ? total : std::numeric_limits<double>::infinity();
  };
  const auto start = approximate_trend_params(values.front()).to_array();
  const auto nm = nelder_mead(sse, std::vector<double>(start.begin(), start.end()), options);
  TrendFit fit;
  fit.params = TrendParams::from_array({nm.best[0], nm.best[1], nm.best[2], nm.best[3], nm.best[4], nm.best[5]});
  fit.sse = nm.value;
  fit.iterations = nm.iterations;
  return fit;
}

TrendFit fit_trend(const RegionSeries& series, const NelderMeadOptions& options) {
  if (series.values.size() < 6)
    throw DataError("fit_trend: series " + series.label() + " has fewer than 6 values");
  return fit_trend(std::span<const double>(series.values), options);
}

double estimate_k(std::span<const double> mean_series, std::span<const double> extreme_series, ExtremeKind kind) {
  if (mean_series.empty()) throw DataError("estimate_k: empty series");
  if (mean_series.size() != extreme_series.size())
    throw DataError("estimate_k: mean and extreme series lengths differ (" + std::to_string(mean_series.size()) +
                    " vs " + std::to_string(extreme_series.size()) + ")");
  std::vector<double> diffs(mean_series.size());
  for (std::size_t i = 0; i < diffs.size(); ++i)
    diffs[i] = kind == ExtremeKind::kMin ? mean_series[i] - extreme_series[i] : extreme_series[i] - mean_series[i];
  std::sort(diffs.begin(), diffs.end());
  const std::size_t mid = diffs.size() / 2;
  return diffs.size() % 2 == 1 ? diffs[mid] : 0.5 * (diffs[mid - 1] + diffs[mid]);
}

OffsetK estimate_offsets(std::span<const double> mean_series, std::span<const double> min_series,
                         std::span<const double> max_series) {
  return {estimate_k(mean_series, min_series, ExtremeKind::kMin),
          estimate_k(mean_series, max_series, ExtremeKind::kMax)};
}

LinearModel fit_linear(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("fit_linear: x and y lengths differ");
  if (x.size() < 2) throw DataError("fit_linear: need at least two points");
  const auto n = static_cast<double>(x.size());
  const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mean_x) * (x[i] - mean_x);
    sxy += (x[i] - mean_x) * (y[i] - mean_y);
  }
  if (!(sxx > 0.0)) throw DataError("fit_linear: degenerate regression, x is constant");
  LinearModel m;
  m.slope = sxy / sxx;
  m.intercept = mean_y - m.slope * mean_x;
  return m;
}

double predict_days(const LinearModel& model, double amount_mm) {
  if (!(amount_mm >= 0.0)) throw DomainError("predict_days: negative precipitation amount");
  return std::clamp(model.slope * amount_mm + model.intercept, 0.0, 31.0);
}

}  // namespace larvaecast
