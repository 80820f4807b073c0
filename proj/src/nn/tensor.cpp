// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fvr/error.hpp"

namespace fvr::nn {

std::size_t element_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int e : shape) {
    if (e < 1) throw Error(ErrorCode::kShapeMismatch, "tensor extents must be positive");
    n *= static_cast<std::size_t>(e);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "data length does not match shape " + shape_string());
  }
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
  if (element_count(shape) != data_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "cannot reshape " + shape_string());
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    if (a) s += 'x';
    s += std::to_string(shape_[a]);
  }
  return s + "]";
}

void expect_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
  if (t.shape() != shape) {
    std::string expected = "[";
    for (std::size_t a = 0; a < shape.size(); ++a) {
      if (a) expected += 'x';
      expected += std::to_string(shape[a]);
    }
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": got " + t.shape_string() + ", expected " + expected + "]");
  }
}

}  // namespace fvr::nn
