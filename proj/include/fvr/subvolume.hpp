// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_SUBVOLUME_HPP_
#define FVR_SUBVOLUME_HPP_

#include <utility>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"
#include "fvr/phantom.hpp"

namespace fvr {

struct SubvolumeSpec {
  int crop_d = 32;
  int crop_h = 128;
  int crop_w = 128;
  int frame_range = 10;  // R: init frame drawn from [n - R, n + R]
  /// Isotropic subvolume voxel spacing; <= 0 means the source x spacing.
  double spacing = 0.0;
};

struct Subvolume {
  Volume3D volume;
  /// Maps subvolume physical coordinates to source-volume coordinates. It
  /// equals params_to_matrix(init_pose), so the init plane is z = 0 of the
  /// subvolume and poses map into it with inverse(world_from_sub) * M(pose).
  HomTransform world_from_sub;
};

/// Trilinearly resamples a crop_d x crop_h x crop_w box whose axes follow the
/// init plane and whose center is the init plane center. For odd crop_d the
/// middle depth slice is exactly the init slice; for even crop_d the init
/// plane sits halfway between slices crop_d/2 - 1 and crop_d/2.
/// Throws Error(kOutOfBounds) when the box leaves v.
Subvolume crop_subvolume(const Volume3D& v, const RigidParams& init_pose,
                         const SubvolumeSpec& spec = {});

/// Maps a source-volume pose into the subvolume frame.
RigidParams pose_in_subvolume(const Subvolume& sub, const RigidParams& world_pose);

/// True when all corners of the plane lie within the subvolume's depth extent
/// (|z| <= (crop_d - 1) / 2 * spacing). In-plane overhang is allowed: frames and
/// subvolume share the same in-plane size, so any in-plane motion pushes some
/// pixels outside and those are zero-padded by the sampler.
bool plane_within_depth(const Subvolume& sub, const RigidParams& pose_in_sub, int height_px,
                        int width_px, double spacing_mm);

/// One frame-to-volume registration sample.
struct RegistrationPair {
  Frame2D frame;           // center-cropped target frame (fixed image)
  Volume3D subvolume;      // moving image, cropped at the init frame
  HomTransform world_from_sub;
  RigidParams init_pose;   // source-volume pose of the init frame
  RigidParams target_pose; // source-volume pose of the target frame
  RigidParams label;       // relative_params(target_pose, init_pose)
  int frame_index = 0;
  int init_index = 0;
};

/// Builds the pair for target frame n initialized at frame init. The frame is
/// center-cropped to crop_h x crop_w (which must be square with an even
/// surplus so the crop stays centered). Throws kOutOfBounds / kTooSmall.
RegistrationPair make_pair(const SweepDataset& ds, int n, int init, const SubvolumeSpec& spec);

}  // namespace fvr

#endif  // FVR_SUBVOLUME_HPP_
