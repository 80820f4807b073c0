// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_NN_LAYERS_HPP_
#define FVR_NN_LAYERS_HPP_

#include <array>

#include "fvr/nn/tensor.hpp"

namespace fvr::nn {

// Feature maps are single-sample tensors: [C, H, W] in 2D, [C, D, H, W] in 3D.
// Convolutions are cross-correlations with zero padding.

struct Conv3dSpec {
  int in_channels = 1;
  int out_channels = 1;
  std::array<int, 3> kernel{3, 3, 3};   // depth, height, width
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> padding{1, 1, 1};

  /// Weight shape [out, in, kd, kh, kw]; bias shape [out].
  std::vector<int> weight_shape() const;
  /// Output [out, D', H', W'] for an input [in, D, H, W].
  std::vector<int> output_shape(const std::vector<int>& input_shape) const;
};

struct Conv2dSpec {
  int in_channels = 1;
  int out_channels = 1;
  std::array<int, 2> kernel{3, 3};
  std::array<int, 2> stride{1, 1};
  std::array<int, 2> padding{1, 1};

  Conv3dSpec as_3d() const;
  std::vector<int> weight_shape() const;  // [out, in, kh, kw]
};

struct ConvGrads {
  Tensor d_input;
  Tensor d_weight;
  Tensor d_bias;
};

Tensor conv3d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const Conv3dSpec& spec);
/// With need_input_grad false, d_input is left empty (first layers).
ConvGrads conv3d_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out,
                          const Conv3dSpec& spec, bool need_input_grad = true);

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const Conv2dSpec& spec);
ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out,
                          const Conv2dSpec& spec, bool need_input_grad = true);

Tensor relu_forward(const Tensor& x);
/// Gradient passes where the forward input was positive.
Tensor relu_backward(const Tensor& x, const Tensor& d_out);

/// [C, ...] -> [C] channel means.
Tensor global_avg_pool_forward(const Tensor& x);
Tensor global_avg_pool_backward(const std::vector<int>& input_shape, const Tensor& d_out);

struct DenseGrads {
  Tensor d_input;
  Tensor d_weight;
  Tensor d_bias;
};

/// y = W x + b with W [out, in], x flattened to [in].
Tensor fully_connected_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);
DenseGrads fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out);

/// Joins [C, D1, H, W] and [C, D2, H, W] into [C, D1 + D2, H, W].
Tensor concat_depth(const Tensor& a, const Tensor& b);
/// Splits a depth-concatenated gradient back into its two parts.
std::array<Tensor, 2> split_depth(const Tensor& d, int depth_a);

}  // namespace fvr::nn

#endif  // FVR_NN_LAYERS_HPP_
