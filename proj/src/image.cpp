// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fvr/error.hpp"

namespace fvr {

Frame2D::Frame2D(int h, int w, double s, float fill)
    : height(h), width(w), spacing(s), pixels(static_cast<std::size_t>(h) * w, fill) {
  if (h < 1 || w < 1 || !(s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "frame dims and spacing must be positive");
  }
}

Volume3D::Volume3D(int d, int h, int w, Spacing3 s, float fill)
    : depth(d),
      height(h),
      width(w),
      spacing(s),
      voxels(static_cast<std::size_t>(d) * h * w, fill) {
  if (d < 1 || h < 1 || w < 1 || !(s.x > 0.0 && s.y > 0.0 && s.z > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "volume dims and spacing must be positive");
  }
}

Vec3 Volume3D::voxel_to_world(double k, double i, double j) const {
  return {(j - 0.5 * (width - 1)) * spacing.x, (i - 0.5 * (height - 1)) * spacing.y,
          (k - 0.5 * (depth - 1)) * spacing.z};
}

Vec3 Volume3D::world_to_voxel(const Vec3& p) const {
  return {p.z() / spacing.z + 0.5 * (depth - 1), p.y() / spacing.y + 0.5 * (height - 1),
          p.x() / spacing.x + 0.5 * (width - 1)};
}

bool Volume3D::contains(const Vec3& p) const {
  const Vec3 v = world_to_voxel(p);
  return v[0] >= 0.0 && v[0] <= depth - 1 && v[1] >= 0.0 && v[1] <= height - 1 &&
         v[2] >= 0.0 && v[2] <= width - 1;
}

Frame2D center_crop_frame(const Frame2D& f, int size) {
  if (size < 1) throw Error(ErrorCode::kInvalidArgument, "crop size must be positive");
  if (f.height < size || f.width < size) {
    throw Error(ErrorCode::kTooSmall, "frame " + std::to_string(f.height) + "x" +
                                          std::to_string(f.width) + " smaller than crop " +
                                          std::to_string(size));
  }
  const int oi = (f.height - size) / 2;
  const int oj = (f.width - size) / 2;
  Frame2D out(size, size, f.spacing);
  for (int i = 0; i < size; ++i) {
    std::copy_n(&f.pixels[static_cast<std::size_t>(i + oi) * f.width + oj], size,
                &out.pixels[static_cast<std::size_t>(i) * size]);
  }
  return out;
}

namespace {

template <typename T>
void normalize_span(std::span<T> values) {
  if (values.empty()) return;
  for (T v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "cannot normalize non-finite data");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(values.begin(), values.end(), T(0));
    return;
  }
  // Division (not a reciprocal multiply) keeps the max at exactly 1, which makes
  // the operation idempotent.
  const double range = hi - lo;
  for (T& v : values) {
    v = static_cast<T>(std::clamp((static_cast<double>(v) - lo) / range, 0.0, 1.0));
  }
}

}  // namespace

void normalize_intensity(std::span<float> values) { normalize_span(values); }
void normalize_intensity(std::span<double> values) { normalize_span(values); }

Frame2D normalize_intensity(Frame2D f) {
  normalize_span(std::span<float>(f.pixels));
  return f;
}

Volume3D normalize_intensity(Volume3D v) {
  normalize_span(std::span<float>(v.voxels));
  return v;
}

}  // namespace fvr
