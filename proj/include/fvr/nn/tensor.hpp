// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_NN_TENSOR_HPP_
#define FVR_NN_TENSOR_HPP_

#include <cstddef>
#include <string>
#include <vector>

namespace fvr::nn {

/// Dense row-major tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Same data under a new shape of equal element count.
  Tensor reshaped(std::vector<int> shape) const;
  void fill(double v);
  bool all_finite() const;

  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t element_count(const std::vector<int>& shape);

/// Throws Error(kShapeMismatch) unless t has exactly the given shape.
void expect_shape(const Tensor& t, const std::vector<int>& shape, const char* what);

}  // namespace fvr::nn

#endif  // FVR_NN_TENSOR_HPP_
