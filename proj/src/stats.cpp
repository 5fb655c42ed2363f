#include "larvaecast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "larvaecast/error.hpp"

namespace larvaecast::stats {

namespace {

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kTolerance = 1e-12;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kTolerance) return h;
  }
  throw InvariantError("incomplete beta continued fraction did not converge");
}

}  // namespace

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson_r: lengths differ");
  if (x.size() < 3) throw DataError("pearson_r: need at least 3 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson_r: degenerate correlation, input is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // Use the symmetry relation where the continued fraction converges fastest.
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double dof) {
  if (!(dof > 0.0)) throw DomainError("student_t_upper_tail: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double two_sided = incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

double correlation_p_value(double r, std::size_t n, Tail tail) {
  if (n < 3) throw DomainError("correlation_p_value: n must be >= 3, got " + std::to_string(n));
  if (!(std::abs(r) <= 1.0)) throw DomainError("correlation_p_value: |r| must not exceed 1");
  if (std::abs(r) == 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = r * std::sqrt(dof / (1.0 - r * r));
  const double one = student_t_upper_tail(std::abs(t), dof);
  if (tail == Tail::kTwo) return std::min(1.0, 2.0 * one);
  return r >= 0.0 ? one : 1.0 - one;
}

CorrelationReport correlate(std::span<const double> predicted, std::span<const double> truth, Tail tail) {
  CorrelationReport rep;
  rep.r = pearson_r(truth, predicted);
  rep.n = truth.size();
  rep.tail = tail;
  const double dof = static_cast<double>(rep.n - 2);
  rep.t_stat = std::abs(rep.r) < 1.0 ? rep.r * std::sqrt(dof / (1.0 - rep.r * rep.r))
                                      : std::copysign(std::numeric_limits<double>::infinity(), rep.r);
  rep.p_value = correlation_p_value(rep.r, rep.n, tail);
  return rep;
}

ResidualSummary residual_summary(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw ShapeError("residual_summary: lengths differ");
  ResidualSummary s;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double residual = truth[i] - predicted[i];
    if (residual > 0.0) {
      ++s.n_positive;
      s.max_positive = std::max(s.max_positive, residual);
    } else if (residual < 0.0) {
      ++s.n_negative;
      s.max_negative = std::min(s.max_negative, residual);
    } else {
      ++s.n_zero;
    }
  }
  return s;
}

}  // namespace larvaecast::stats
