// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/nn/layers.hpp"

#include <algorithm>

#include <Eigen/Core>

#include "fvr/error.hpp"

namespace fvr::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

int out_extent(int n, int k, int s, int p) { return (n + 2 * p - k) / s + 1; }

void check_spec(const Conv3dSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (spec.kernel[a] < 1 || spec.stride[a] < 1 || spec.padding[a] < 0) {
      throw Error(ErrorCode::kShapeMismatch, "invalid convolution geometry");
    }
  }
  if (spec.in_channels < 1 || spec.out_channels < 1) {
    throw Error(ErrorCode::kShapeMismatch, "channel counts must be >= 1");
  }
}

struct Geometry {
  int c, d, h, w;     // input
  int od, oh, ow;     // output
  int rows, cols;     // im2col matrix
};

Geometry geometry(const Tensor& x, const Conv3dSpec& spec) {
  check_spec(spec);
  if (x.rank() != 4 || x.dim(0) != spec.in_channels) {
    throw Error(ErrorCode::kShapeMismatch,
                "conv3d input " + x.shape_string() + " does not have " +
                    std::to_string(spec.in_channels) + " channels");
  }
  Geometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), 0, 0, 0, 0, 0};
  g.od = out_extent(g.d, spec.kernel[0], spec.stride[0], spec.padding[0]);
  g.oh = out_extent(g.h, spec.kernel[1], spec.stride[1], spec.padding[1]);
  g.ow = out_extent(g.w, spec.kernel[2], spec.stride[2], spec.padding[2]);
  if (g.od < 1 || g.oh < 1 || g.ow < 1) {
    throw Error(ErrorCode::kShapeMismatch, "kernel larger than padded input " + x.shape_string());
  }
  g.rows = g.c * spec.kernel[0] * spec.kernel[1] * spec.kernel[2];
  g.cols = g.od * g.oh * g.ow;
  return g;
}

// Row r of the column matrix holds input tap (c, kz, ky, kx) for every
// output position; out-of-range taps read zero.
template <bool kScatter>
void im2col(const Geometry& g, const Conv3dSpec& spec, const double* in, double* cols,
            double* in_grad) {
  const auto [kd, kh, kw] = spec.kernel;
  const auto [sd, sh, sw] = spec.stride;
  const auto [pd, ph, pw] = spec.padding;
  std::size_t r = 0;
  for (int c = 0; c < g.c; ++c) {
    for (int kz = 0; kz < kd; ++kz) {
      for (int ky = 0; ky < kh; ++ky) {
        for (int kx = 0; kx < kw; ++kx, ++r) {
          double* row = cols + r * static_cast<std::size_t>(g.cols);
          std::size_t p = 0;
          for (int oz = 0; oz < g.od; ++oz) {
            const int iz = oz * sd - pd + kz;
            const bool z_ok = iz >= 0 && iz < g.d;
            for (int oy = 0; oy < g.oh; ++oy) {
              const int iy = oy * sh - ph + ky;
              const bool zy_ok = z_ok && iy >= 0 && iy < g.h;
              const std::size_t base =
                  ((static_cast<std::size_t>(c) * g.d + (zy_ok ? iz : 0)) * g.h + (zy_ok ? iy : 0)) *
                  g.w;
              for (int ox = 0; ox < g.ow; ++ox, ++p) {
                const int ix = ox * sw - pw + kx;
                const bool ok = zy_ok && ix >= 0 && ix < g.w;
                if constexpr (kScatter) {
                  if (ok) in_grad[base + ix] += row[p];
                } else {
                  row[p] = ok ? in[base + ix] : 0.0;
                }
              }
            }
          }
        }
      }
    }
  }
}

void check_params(const Tensor& weight, const Tensor& bias, const Conv3dSpec& spec) {
  expect_shape(weight, spec.weight_shape(), "conv3d weight");
  expect_shape(bias, {spec.out_channels}, "conv3d bias");
}

}  // namespace

std::vector<int> Conv3dSpec::weight_shape() const {
  return {out_channels, in_channels, kernel[0], kernel[1], kernel[2]};
}

std::vector<int> Conv3dSpec::output_shape(const std::vector<int>& s) const {
  if (s.size() != 4) throw Error(ErrorCode::kShapeMismatch, "conv3d expects a rank-4 input");
  return {out_channels, out_extent(s[1], kernel[0], stride[0], padding[0]),
          out_extent(s[2], kernel[1], stride[1], padding[1]),
          out_extent(s[3], kernel[2], stride[2], padding[2])};
}

Conv3dSpec Conv2dSpec::as_3d() const {
  return {in_channels, out_channels, {1, kernel[0], kernel[1]}, {1, stride[0], stride[1]},
          {0, padding[0], padding[1]}};
}

std::vector<int> Conv2dSpec::weight_shape() const {
  return {out_channels, in_channels, kernel[0], kernel[1]};
}

Tensor conv3d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const Conv3dSpec& spec) {
  const Geometry g = geometry(x, spec);
  check_params(weight, bias, spec);
  RowMatrix cols(g.rows, g.cols);
  im2col<false>(g, spec, x.data(), cols.data(), nullptr);
  Tensor y({spec.out_channels, g.od, g.oh, g.ow});
  MatMap ym(y.data(), spec.out_channels, g.cols);
  const ConstMatMap wm(weight.data(), spec.out_channels, g.rows);
  ym.noalias() = wm * cols;
  ym.colwise() += ConstVecMap(bias.data(), spec.out_channels);
  return y;
}

ConvGrads conv3d_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out,
                          const Conv3dSpec& spec, bool need_input_grad) {
  const Geometry g = geometry(x, spec);
  expect_shape(weight, spec.weight_shape(), "conv3d weight");
  expect_shape(d_out, {spec.out_channels, g.od, g.oh, g.ow}, "conv3d output gradient");
  RowMatrix cols(g.rows, g.cols);
  im2col<false>(g, spec, x.data(), cols.data(), nullptr);
  const ConstMatMap dy(d_out.data(), spec.out_channels, g.cols);
  const ConstMatMap wm(weight.data(), spec.out_channels, g.rows);

  ConvGrads out{Tensor(), Tensor(spec.weight_shape()), Tensor({spec.out_channels})};
  MatMap(out.d_weight.data(), spec.out_channels, g.rows).noalias() = dy * cols.transpose();
  VecMap(out.d_bias.data(), spec.out_channels) = dy.rowwise().sum();
  if (!need_input_grad) return out;
  out.d_input = Tensor(x.shape());
  RowMatrix dcols = wm.transpose() * dy;
  im2col<true>(g, spec, nullptr, dcols.data(), out.d_input.data());
  return out;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias,
                      const Conv2dSpec& spec) {
  if (x.rank() != 3) throw Error(ErrorCode::kShapeMismatch, "conv2d expects [C, H, W]");
  expect_shape(weight, spec.weight_shape(), "conv2d weight");
  const Conv3dSpec s3 = spec.as_3d();
  const Tensor y = conv3d_forward(x.reshaped({x.dim(0), 1, x.dim(1), x.dim(2)}),
                                  weight.reshaped(s3.weight_shape()), bias, s3);
  return y.reshaped({y.dim(0), y.dim(2), y.dim(3)});
}

ConvGrads conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out,
                          const Conv2dSpec& spec, bool need_input_grad) {
  if (x.rank() != 3 || d_out.rank() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d expects [C, H, W]");
  }
  expect_shape(weight, spec.weight_shape(), "conv2d weight");
  const Conv3dSpec s3 = spec.as_3d();
  ConvGrads g = conv3d_backward(
      x.reshaped({x.dim(0), 1, x.dim(1), x.dim(2)}), weight.reshaped(s3.weight_shape()),
      d_out.reshaped({d_out.dim(0), 1, d_out.dim(1), d_out.dim(2)}), s3, need_input_grad);
  if (need_input_grad) g.d_input = g.d_input.reshaped(x.shape());
  g.d_weight = g.d_weight.reshaped(spec.weight_shape());
  return g;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& d_out) {
  expect_shape(d_out, x.shape(), "relu gradient");
  Tensor d = d_out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(x[i] > 0.0)) d[i] = 0.0;
  }
  return d;
}

Tensor global_avg_pool_forward(const Tensor& x) {
  if (x.rank() < 2) throw Error(ErrorCode::kShapeMismatch, "pooling expects [C, ...]");
  const int c = x.dim(0);
  const std::size_t per = x.size() / static_cast<std::size_t>(c);
  Tensor y({c});
  for (int ch = 0; ch < c; ++ch) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += x[ch * per + i];
    y[static_cast<std::size_t>(ch)] = s / static_cast<double>(per);
  }
  return y;
}

Tensor global_avg_pool_backward(const std::vector<int>& input_shape, const Tensor& d_out) {
  Tensor d(input_shape);
  const int c = input_shape.at(0);
  expect_shape(d_out, {c}, "pool gradient");
  const std::size_t per = d.size() / static_cast<std::size_t>(c);
  for (int ch = 0; ch < c; ++ch) {
    const double g = d_out[static_cast<std::size_t>(ch)] / static_cast<double>(per);
    for (std::size_t i = 0; i < per; ++i) d[ch * per + i] = g;
  }
  return d;
}

Tensor fully_connected_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || static_cast<std::size_t>(weight.dim(1)) != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dense weight " + weight.shape_string() +
                                               " does not fit input " + x.shape_string());
  }
  const int out = weight.dim(0), in = weight.dim(1);
  expect_shape(bias, {out}, "dense bias");
  Tensor y({out});
  VecMap(y.data(), out).noalias() =
      ConstMatMap(weight.data(), out, in) * ConstVecMap(x.data(), in) +
      ConstVecMap(bias.data(), out);
  return y;
}

DenseGrads fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out) {
  const int out = weight.dim(0), in = weight.dim(1);
  if (static_cast<std::size_t>(in) != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dense input size mismatch");
  }
  expect_shape(d_out, {out}, "dense output gradient");
  DenseGrads g{Tensor(x.shape()), Tensor(weight.shape()), d_out};
  const ConstVecMap dy(d_out.data(), out);
  MatMap(g.d_weight.data(), out, in).noalias() = dy * ConstVecMap(x.data(), in).transpose();
  VecMap(g.d_input.data(), in).noalias() = ConstMatMap(weight.data(), out, in).transpose() * dy;
  return g;
}

Tensor concat_depth(const Tensor& a, const Tensor& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
      a.dim(3) != b.dim(3)) {
    throw Error(ErrorCode::kShapeMismatch,
                "cannot concatenate " + a.shape_string() + " and " + b.shape_string());
  }
  const int c = a.dim(0);
  const std::size_t plane = static_cast<std::size_t>(a.dim(2)) * a.dim(3);
  const std::size_t na = a.dim(1) * plane, nb = b.dim(1) * plane;
  Tensor y({c, a.dim(1) + b.dim(1), a.dim(2), a.dim(3)});
  for (int ch = 0; ch < c; ++ch) {
    double* dst = y.data() + ch * (na + nb);
    std::copy_n(a.data() + ch * na, na, dst);
    std::copy_n(b.data() + ch * nb, nb, dst + na);
  }
  return y;
}

std::array<Tensor, 2> split_depth(const Tensor& d, int depth_a) {
  if (d.rank() != 4 || depth_a < 1 || depth_a >= d.dim(1)) {
    throw Error(ErrorCode::kShapeMismatch, "invalid depth split of " + d.shape_string());
  }
  const int c = d.dim(0), depth_b = d.dim(1) - depth_a;
  const std::size_t plane = static_cast<std::size_t>(d.dim(2)) * d.dim(3);
  const std::size_t na = depth_a * plane, nb = depth_b * plane;
  std::array<Tensor, 2> out{Tensor({c, depth_a, d.dim(2), d.dim(3)}),
                            Tensor({c, depth_b, d.dim(2), d.dim(3)})};
  for (int ch = 0; ch < c; ++ch) {
    const double* src = d.data() + ch * (na + nb);
    std::copy_n(src, na, out[0].data() + ch * na);
    std::copy_n(src + na, nb, out[1].data() + ch * nb);
  }
  return out;
}

}  // namespace fvr::nn
