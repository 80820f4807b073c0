// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/subvolume.hpp"

#include <cmath>
#include <string>

#include "fvr/error.hpp"
#include "fvr/sampler.hpp"

namespace fvr {

Subvolume crop_subvolume(const Volume3D& v, const RigidParams& init_pose,
                         const SubvolumeSpec& spec) {
  if (spec.crop_d < 1 || spec.crop_h < 1 || spec.crop_w < 1) {
    throw Error(ErrorCode::kInvalidArgument, "crop dims must be positive");
  }
  const double s = spec.spacing > 0.0 ? spec.spacing : v.spacing.x;
  Subvolume out{Volume3D(spec.crop_d, spec.crop_h, spec.crop_w, {s, s, s}),
                params_to_matrix(init_pose)};
  const Volume3D& sub = out.volume;
  for (int ck : {0, spec.crop_d - 1}) {
    for (int ci : {0, spec.crop_h - 1}) {
      for (int cj : {0, spec.crop_w - 1}) {
        if (!v.contains(out.world_from_sub.apply(sub.voxel_to_world(ck, ci, cj)))) {
          throw Error(ErrorCode::kOutOfBounds, "subvolume box leaves the source volume");
        }
      }
    }
  }
  for (int k = 0; k < spec.crop_d; ++k) {
    SampleGrid g{spec.crop_h, spec.crop_w, s, {}};
    g.points.reserve(static_cast<std::size_t>(spec.crop_h) * spec.crop_w);
    for (int i = 0; i < spec.crop_h; ++i) {
      for (int j = 0; j < spec.crop_w; ++j) {
        g.points.push_back(out.world_from_sub.apply(sub.voxel_to_world(k, i, j)));
      }
    }
    const SampledSlice slice = resample(v, g);
    float* dst = &out.volume.voxels[out.volume.index(k, 0, 0)];
    for (std::size_t p = 0; p < slice.values.size(); ++p) dst[p] = static_cast<float>(slice.values[p]);
  }
  return out;
}

RigidParams pose_in_subvolume(const Subvolume& sub, const RigidParams& world_pose) {
  return matrix_to_params(inverse(sub.world_from_sub) * params_to_matrix(world_pose));
}

bool plane_within_depth(const Subvolume& sub, const RigidParams& pose_in_sub, int height_px,
                        int width_px, double spacing_mm) {
  const double half_depth = 0.5 * (sub.volume.depth - 1) * sub.volume.spacing.z;
  const SliceCorners c = slice_corners(pose_in_sub, height_px, width_px, spacing_mm);
  for (const Vec3& p : c.points) {
    if (std::abs(p.z()) > half_depth) return false;
  }
  return true;
}

RegistrationPair make_pair(const SweepDataset& ds, int n, int init, const SubvolumeSpec& spec) {
  const int count = static_cast<int>(ds.size());
  if (n < 0 || n >= count || init < 0 || init >= count) {
    throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  }
  if (spec.crop_h != spec.crop_w) {
    throw Error(ErrorCode::kInvalidArgument, "frame crop must be square");
  }
  const Frame2D& src = ds.frames[n];
  if ((src.height - spec.crop_h) % 2 != 0 || (src.width - spec.crop_w) % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame surplus over the crop must be even to stay centered");
  }
  RegistrationPair pair;
  pair.frame = center_crop_frame(src, spec.crop_h);
  SubvolumeSpec sub_spec = spec;
  if (sub_spec.spacing <= 0.0) sub_spec.spacing = src.spacing;
  Subvolume sub = crop_subvolume(ds.volume, ds.poses[init], sub_spec);
  pair.subvolume = std::move(sub.volume);
  pair.world_from_sub = sub.world_from_sub;
  pair.init_pose = ds.poses[init];
  pair.target_pose = ds.poses[n];
  pair.label = relative_params(ds.poses[n], ds.poses[init]);
  pair.frame_index = n;
  pair.init_index = init;
  return pair;
}

}  // namespace fvr
