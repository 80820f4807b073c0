// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_IMAGE_HPP_
#define FVR_IMAGE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "fvr/geometry.hpp"

namespace fvr {

/// 2D image with isotropic in-plane spacing (mm/pixel), row-major pixels.
/// Pixel (i, j) sits at plane coordinate ((j - (W-1)/2) s, (i - (H-1)/2) s).
struct Frame2D {
  int height = 0;
  int width = 0;
  double spacing = 1.0;
  std::vector<float> pixels;

  Frame2D() = default;
  Frame2D(int h, int w, double s, float fill = 0.0f);

  std::size_t size() const { return pixels.size(); }
  float& at(int i, int j) { return pixels[static_cast<std::size_t>(i) * width + j]; }
  float at(int i, int j) const { return pixels[static_cast<std::size_t>(i) * width + j]; }

  std::vector<double> as_double() const { return {pixels.begin(), pixels.end()}; }

  friend bool operator==(const Frame2D&, const Frame2D&) = default;
};

struct Spacing3 {
  double z = 1.0;
  double y = 1.0;
  double x = 1.0;
  friend bool operator==(const Spacing3&, const Spacing3&) = default;
};

/// 3D image, depth-major then row-major. The volume center is the physical
/// origin: voxel (k, i, j) sits at
/// ((j - (W-1)/2) sx, (i - (H-1)/2) sy, (k - (D-1)/2) sz).
struct Volume3D {
  int depth = 0;
  int height = 0;
  int width = 0;
  Spacing3 spacing;
  std::vector<float> voxels;

  Volume3D() = default;
  Volume3D(int d, int h, int w, Spacing3 s, float fill = 0.0f);

  std::size_t size() const { return voxels.size(); }
  std::size_t index(int k, int i, int j) const {
    return (static_cast<std::size_t>(k) * height + i) * width + j;
  }
  float& at(int k, int i, int j) { return voxels[index(k, i, j)]; }
  float at(int k, int i, int j) const { return voxels[index(k, i, j)]; }

  /// Physical position of a voxel center.
  Vec3 voxel_to_world(double k, double i, double j) const;
  /// Continuous voxel coordinates (k, i, j) of a physical point.
  Vec3 world_to_voxel(const Vec3& p) const;
  /// True when the point's continuous voxel coordinates are within
  /// [0, n-1] on every axis (all trilinear neighbors exist).
  bool contains(const Vec3& p) const;

  friend bool operator==(const Volume3D&, const Volume3D&) = default;
};

/// Centered size x size window; throws Error(kTooSmall) if either dim < size.
Frame2D center_crop_frame(const Frame2D& f, int size = 128);

/// Min-max rescale into [0, 1]; constant inputs map to all zeros.
void normalize_intensity(std::span<float> values);
void normalize_intensity(std::span<double> values);
Frame2D normalize_intensity(Frame2D f);
Volume3D normalize_intensity(Volume3D v);

}  // namespace fvr

#endif  // FVR_IMAGE_HPP_
