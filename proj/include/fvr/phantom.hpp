// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_PHANTOM_HPP_
#define FVR_PHANTOM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fvr/geometry.hpp"
#include "fvr/image.hpp"

namespace fvr {

/// Smooth synthetic volume: 5-15 anisotropic Gaussian blobs plus a faint
/// band-limited speckle, normalized to [0, 1]. Blob sizes and positions scale
/// with the physical extent, so the same seed gives the same anatomy at any
/// voxel spacing. Requires every dim >= 48.
Volume3D phantom_generate(std::uint64_t seed, int depth, int height, int width,
                          double spacing_mm);

/// The blob field alone (no speckle), normalized to [0, 1].
Volume3D phantom_base_field(std::uint64_t seed, int depth, int height, int width,
                            double spacing_mm);

enum class Trajectory { kLinear, kFan };

const char* to_string(Trajectory t);
Trajectory parse_trajectory(const std::string& s);

struct SweepOptions {
  int frame_height = 144;
  int frame_width = 144;
  /// Frame pixel spacing; <= 0 means the volume's x spacing.
  double frame_spacing = 0.0;
  /// Linear sweeps: translation along the plane normal per frame (mm).
  double step_mm = 0.5;
  /// Fan sweeps: rotation about the pivot axis per frame (degrees).
  double fan_step_deg = 0.5;
  /// Fan pivot axis runs parallel to x through (y = -fan_pivot_mm, z = 0).
  double fan_pivot_mm = 30.0;
  /// Scales the smooth per-frame pose jitter; 0 disables it.
  double jitter_scale = 1.0;
  /// Random orientation (+/- degrees per axis) and offset (+/- mm in x, y)
  /// of the whole sweep.
  double base_rotation_deg = 6.0;
  double base_offset_mm = 2.0;
};

struct SweepDataset {
  Volume3D volume;
  std::vector<Frame2D> frames;
  std::vector<RigidParams> poses;  // frame plane pose in the volume frame
  std::uint64_t seed = 0;
  Trajectory trajectory = Trajectory::kLinear;

  std::size_t size() const { return frames.size(); }
  friend bool operator==(const SweepDataset&, const SweepDataset&) = default;
};

/// Generates per-frame poses along the trajectory and renders each frame as
/// sample_slice(v, pose). Throws Error(kOutOfBounds) if a frame leaves v and
/// Error(kInvalidArgument) for n_frames < 21.
SweepDataset sweep_simulate(const Volume3D& v, std::uint64_t seed, int n_frames,
                            Trajectory trajectory, const SweepOptions& opts = {});

/// Per-frame poses only (no rendering).
std::vector<RigidParams> sweep_poses(std::uint64_t seed, int n_frames, Trajectory trajectory,
                                     const SweepOptions& opts = {});

}  // namespace fvr

#endif  // FVR_PHANTOM_HPP_
