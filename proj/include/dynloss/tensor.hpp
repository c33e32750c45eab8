// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The dynloss Authors

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dynloss::ad {

using Shape = std::vector<std::size_t>;

/// Number of elements described by a shape. Throws if any dimension is zero
/// or the shape is empty.
std::size_t shape_numel(const Shape& shape);

/// Renders a shape as "[2,3]" for diagnostics.
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Scalars are shape {1}.
///
/// A tensor that requires grad carries a same-shape gradient buffer; the
/// buffer is absent otherwise.
class Tensor {
 public:
  Tensor();
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  /// Value of a one-element tensor.
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  /// Enabling allocates a zeroed gradient buffer; disabling drops it.
  void set_requires_grad(bool on);
  bool has_grad() const { return !grad_.empty(); }
  std::span<const double> grad() const { return grad_; }
  std::span<double> grad() { return grad_; }
  void zero_grad();

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<double> values_;
  bool requires_grad_ = false;
  std::vector<double> grad_;
};

}  // namespace dynloss::ad
