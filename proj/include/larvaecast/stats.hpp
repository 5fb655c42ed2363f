#pragma once

#include <cstddef>
#include <span>

namespace larvaecast::stats {

enum class Tail { kOne, kTwo };

struct CorrelationReport {
  double r = 0.0;
  std::size_t n = 0;
  double t_stat = 0.0;
  double p_value = 1.0;
  Tail tail = Tail::kOne;
};

/// Residual = truth - prediction. Positive residuals are underestimates.
struct ResidualSummary {
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t n_zero = 0;
  double max_positive = 0.0;
  double max_negative = 0.0;  // most negative residual, <= 0
};

/// Product-moment correlation. Throws on constant input or n < 3.
double pearson_r(std::span<const double> x, std::span<const double> y);

/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

/// Student-t tail probability P(T > t) with `dof` degrees of freedom.
double student_t_upper_tail(double t, double dof);

/// p-value of the t-test for zero correlation. One-tailed tests the
/// direction of r. |r| = 1 gives 0.
double correlation_p_value(double r, std::size_t n, Tail tail = Tail::kOne);

CorrelationReport correlate(std::span<const double> predicted, std::span<const double> truth,
                            Tail tail = Tail::kOne);

ResidualSummary residual_summary(std::span<const double> predicted, std::span<const double> truth);

}  // namespace larvaecast::stats
