#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "larvaecast/error.hpp"

namespace larvaecast {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Flat, mutable view over the storage of one parameter tensor.
template <typename Scalar>
using FlatView = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

template <typename Scalar>
using ConstFlatView = Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, 1>>;

template <typename Derived>
auto flat(Eigen::PlainObjectBase<Derived>& tensor) {
  using Scalar = typename Derived::Scalar;
  return FlatView<Scalar>(tensor.data(), tensor.size());
}

template <typename Derived>
auto flat(const Eigen::PlainObjectBase<Derived>& tensor) {
  using Scalar = typename Derived::Scalar;
  return ConstFlatView<Scalar>(tensor.data(), tensor.size());
}

/// Throws ShapeError unless `tensor` is rows x cols.
template <typename Derived>
void require_shape(const Eigen::EigenBase<Derived>& tensor, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (tensor.rows() != rows || tensor.cols() != cols) {
    throw ShapeError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(tensor.rows()) + "x" +
                     std::to_string(tensor.cols()));
  }
}

}  // namespace larvaecast
