// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_SAMPLER_HPP_
#define FVR_SAMPLER_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"

namespace fvr {

/// Physical sample positions of an H x W sampling plane under a pose.
struct SampleGrid {
  int height = 0;
  int width = 0;
  double spacing = 1.0;
  std::vector<Vec3> points;  // row-major

  const Vec3& at(int i, int j) const { return points[static_cast<std::size_t>(i) * width + j]; }
};

/// Resampled slice in double precision. Pixels whose sample point lacks any
/// of its 8 trilinear neighbors are exactly 0 and flagged outside.
struct SampledSlice {
  int height = 0;
  int width = 0;
  double spacing = 1.0;
  std::vector<double> values;
  std::vector<std::uint8_t> inside;

  std::size_t size() const { return values.size(); }
  std::size_t inside_count() const;
  Frame2D to_frame() const;
};

/// d(pixel)/d(theta_k) for k in (tx, ty, tz, ax, ay, az), per pixel, in
/// intensity/mm and intensity/degree.
struct SliceJacobian {
  int height = 0;
  int width = 0;
  std::vector<std::array<double, 6>> rows;  // row-major pixels

  const std::array<double, 6>& at(int i, int j) const {
    return rows[static_cast<std::size_t>(i) * width + j];
  }
};

/// point(i, j) = M(theta) * ((j - (W-1)/2) s, (i - (H-1)/2) s, 0).
SampleGrid affine_grid(const RigidParams& theta, int height_px, int width_px, double spacing_mm);

/// Trilinear interpolation at every grid point, zero padding outside.
SampledSlice resample(const Volume3D& v, const SampleGrid& g);

/// Shorthand for resample(v, affine_grid(theta, h, w, s)).
SampledSlice sample_slice(const Volume3D& v, const RigidParams& theta, int height_px,
                          int width_px, double spacing_mm);

std::pair<SampledSlice, SliceJacobian> resample_with_jacobian(const Volume3D& v,
                                                              const RigidParams& theta,
                                                              int height_px, int width_px,
                                                              double spacing_mm);

/// Central differences of resample over each pose component with the given
/// step (mm for translations, degrees for rotations).
SliceJacobian finite_diff_jacobian(const Volume3D& v, const RigidParams& theta, int height_px,
                                   int width_px, double spacing_mm, double step);

/// Pixels that stay inside and in the same trilinear cell under every +/-step
/// perturbation of every pose component. Elsewhere the analytic gradient is
/// one-sided, so finite-difference checks restrict themselves to this mask.
std::vector<std::uint8_t> fd_stable_mask(const Volume3D& v, const RigidParams& theta,
                                         int height_px, int width_px, double spacing_mm,
                                         double step);

/// Chain rule: dL/dtheta = sum_p dL/dpixel_p * J_p.
std::array<double, 6> accumulate_gradient(const SliceJacobian& jac,
                                          std::span<const double> dloss_dpixel);

}  // namespace fvr

#endif  // FVR_SAMPLER_HPP_
