#pragma once

// Z-score scalers and the log10(count + offset) target transform.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "larvaecast/error.hpp"
#include "larvaecast/tensor.hpp"

namespace larvaecast {

/// Standard deviations below this are replaced by 1.
inline constexpr double kSigmaFloor = 1e-9;

/// Population mean / standard deviation of one variable.
struct StandardScaler {
  double mean = 0.0;
  double std = 1.0;

  double apply(double v) const { return (v - mean) / std; }
  double invert(double v) const { return v * std + mean; }

  template <typename Derived>
  auto apply(const Eigen::MatrixBase<Derived>& v) const {
    return ((v.array() - mean) / std).matrix();
  }
  template <typename Derived>
  auto invert(const Eigen::MatrixBase<Derived>& v) const {
    return (v.array() * std + mean).matrix();
  }

  friend bool operator==(const StandardScaler&, const StandardScaler&) = default;
};

/// Fits mean and population std; std < sigma_floor becomes 1.
template <typename Derived>
StandardScaler fit_scaler(const Eigen::DenseBase<Derived>& values, double sigma_floor = kSigmaFloor) {
  if (values.size() == 0) throw DataError("fit_scaler: no values");
  // Plain left-to-right sums so the result does not depend on how Eigen
  // vectorizes a reduction.
  const Eigen::Index n = values.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += static_cast<double>(values.derived().coeff(i));
  StandardScaler s;
  s.mean = sum / static_cast<double>(n);
  double squares = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = static_cast<double>(values.derived().coeff(i)) - s.mean;
    squares += d * d;
  }
  s.std = std::sqrt(squares / static_cast<double>(n));
  if (!(s.std >= sigma_floor)) s.std = 1.0;
  return s;
}

inline StandardScaler fit_scaler(std::span<const double> values, double sigma_floor = kSigmaFloor) {
  return fit_scaler(Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Eigen::Index>(values.size())),
                    sigma_floor);
}

/// One scaler per feature column, fitted on the training split only.
struct FeatureScaler {
  std::vector<StandardScaler> columns;
  std::size_t fit_rows = 0;

  std::size_t width() const { return columns.size(); }

  /// Scales every row of an n x width matrix.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != columns.size())
      throw ShapeError("FeatureScaler: matrix width differs from fitted width");
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      out.col(c) = columns[j].apply(rows.col(c));
    }
    return out;
  }

  Eigen::MatrixXd invert(const Eigen::MatrixXd& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != columns.size())
      throw ShapeError("FeatureScaler: matrix width differs from fitted width");
    Eigen::MatrixXd out(rows.rows(), rows.cols());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      out.col(c) = columns[j].invert(rows.col(c));
    }
    return out;
  }

  friend bool operator==(const FeatureScaler&, const FeatureScaler&) = default;
};

inline FeatureScaler fit_feature_scaler(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw DataError("fit_feature_scaler: no rows");
  FeatureScaler out;
  out.fit_rows = static_cast<std::size_t>(rows.rows());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) out.columns.push_back(fit_scaler(rows.col(c)));
  return out;
}

/// log10(count + offset). With offset 1, zero counts map to zero.
struct LogCountTransform {
  double offset = 1.0;

  double forward(double count) const {
    if (!(count >= 0.0)) throw DomainError("log transform: negative count " + std::to_string(count));
    return std::log10(count + offset);
  }

  double inverse(double value) const { return std::pow(10.0, value) - offset; }

  friend bool operator==(const LogCountTransform&, const LogCountTransform&) = default;
};

inline double log_transform(double count, double offset = 1.0) {
  return LogCountTransform{offset}.forward(count);
}

}  // namespace larvaecast
