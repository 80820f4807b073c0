// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fvr/error.hpp"
#include "fvr/sampler.hpp"

namespace fvr {
namespace {

constexpr int kMinPhantomDim = 48;
constexpr double kSpeckleAmplitude = 0.05;

std::vector<double> gaussian_profile(int n, double spacing, double center, double sigma) {
  std::vector<double> g(n);
  for (int a = 0; a < n; ++a) {
    const double x = (a - 0.5 * (n - 1)) * spacing - center;
    g[a] = std::exp(-0.5 * x * x / (sigma * sigma));
  }
  return g;
}

void blob_field(std::mt19937_64& rng, Volume3D& v) {
  const double ex = v.width * v.spacing.x, ey = v.height * v.spacing.y,
               ez = v.depth * v.spacing.z;
  const double emin = std::min({ex, ey, ez});
  std::uniform_int_distribution<int> count_dist(5, 15);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_blobs = count_dist(rng);
  std::vector<double> field(v.size(), 0.0);
  for (int b = 0; b < n_blobs; ++b) {
    const double cx = (unit(rng) - 0.5) * 0.8 * ex;
    const double cy = (unit(rng) - 0.5) * 0.8 * ey;
    const double cz = (unit(rng) - 0.5) * 0.8 * ez;
    const double sx = (0.08 + 0.14 * unit(rng)) * emin;
    const double sy = (0.08 + 0.14 * unit(rng)) * emin;
    const double sz = (0.08 + 0.14 * unit(rng)) * emin;
    const double magnitude = 0.4 + 0.6 * unit(rng);
    const double amp = unit(rng) < 0.25 ? -magnitude : magnitude;
    const auto gx = gaussian_profile(v.width, v.spacing.x, cx, sx);
    const auto gy = gaussian_profile(v.height, v.spacing.y, cy, sy);
    const auto gz = gaussian_profile(v.depth, v.spacing.z, cz, sz);
    std::size_t idx = 0;
    for (int k = 0; k < v.depth; ++k) {
      for (int i = 0; i < v.height; ++i) {
        const double a = amp * gz[k] * gy[i];
        for (int j = 0; j < v.width; ++j) field[idx++] += a * gx[j];
      }
    }
  }
  normalize_intensity(std::span<double>(field));
  for (std::size_t p = 0; p < field.size(); ++p) v.voxels[p] = static_cast<float>(field[p]);
}

// Separable Gaussian smoothing with clamped borders, sigma in voxels.
void smooth_axis(std::vector<double>& data, int d, int h, int w, int axis, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += kernel[t + radius];
  }
  for (double& kv : kernel) kv /= sum;
  const int dims[3] = {d, h, w};
  const std::size_t strides[3] = {static_cast<std::size_t>(h) * w, static_cast<std::size_t>(w), 1};
  const int n = dims[axis];
  const std::size_t stride = strides[axis];
  std::vector<double> line(n), out(n);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const int pos[3] = {k, i, j};
        if (pos[axis] != 0) continue;
        const std::size_t base = k * strides[0] + i * strides[1] + j;
        for (int a = 0; a < n; ++a) line[a] = data[base + a * stride];
        for (int a = 0; a < n; ++a) {
          double acc = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            acc += kernel[t + radius] * line[std::clamp(a + t, 0, n - 1)];
          }
          out[a] = acc;
        }
        for (int a = 0; a < n; ++a) data[base + a * stride] = out[a];
      }
    }
  }
}

void check_phantom_dims(int d, int h, int w, double s) {
  if (d < kMinPhantomDim || h < kMinPhantomDim || w < kMinPhantomDim) {
    throw Error(ErrorCode::kInvalidArgument, "phantom dims must be >= 48 per axis");
  }
  if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "phantom spacing must be > 0");
}

}  // namespace

Volume3D phantom_base_field(std::uint64_t seed, int depth, int height, int width,
                            double spacing_mm) {
  check_phantom_dims(depth, height, width, spacing_mm);
  Volume3D v(depth, height, width, {spacing_mm, spacing_mm, spacing_mm});
  std::mt19937_64 rng(seed);
  blob_field(rng, v);
  return v;
}

Volume3D phantom_generate(std::uint64_t seed, int depth, int height, int width,
                          double spacing_mm) {
  check_phantom_dims(depth, height, width, spacing_mm);
  Volume3D v(depth, height, width, {spacing_mm, spacing_mm, spacing_mm});
  std::mt19937_64 rng(seed);
  blob_field(rng, v);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> speckle(v.size());
  for (double& s : speckle) s = normal(rng);
  for (int axis = 0; axis < 3; ++axis) smooth_axis(speckle, depth, height, width, axis, 1.0);
  double peak = 0.0;
  for (double s : speckle) peak = std::max(peak, std::abs(s));
  std::vector<double> total(v.size());
  for (std::size_t p = 0; p < v.size(); ++p) {
    total[p] = v.voxels[p] + kSpeckleAmplitude * speckle[p] / peak;
  }
  normalize_intensity(std::span<double>(total));
  for (std::size_t p = 0; p < v.size(); ++p) v.voxels[p] = static_cast<float>(total[p]);
  return v;
}

const char* to_string(Trajectory t) { return t == Trajectory::kLinear ? "linear" : "fan"; }

Trajectory parse_trajectory(const std::string& s) {
  if (s == "linear") return Trajectory::kLinear;
  if (s == "fan") return Trajectory::kFan;
  throw Error(ErrorCode::kInvalidArgument, "unknown trajectory '" + s + "'");
}

std::vector<RigidParams> sweep_poses(std::uint64_t seed, int n_frames, Trajectory trajectory,
                                     const SweepOptions& opts) {
  if (n_frames < 21) throw Error(ErrorCode::kInvalidArgument, "sweeps need >= 21 frames");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  RigidParams base;
  base.tx = opts.base_offset_mm * sym(rng);
  base.ty = opts.base_offset_mm * sym(rng);
  base.ax = opts.base_rotation_deg * sym(rng);
  base.ay = opts.base_rotation_deg * sym(rng);
  base.az = opts.base_rotation_deg * sym(rng);
  const HomTransform base_m = params_to_matrix(base);

  // Smooth jitter: one sinusoid per component with a period of 40-60 frames.
  // Amplitudes derive from per-frame rate caps (mm or degrees per frame), so
  // consecutive frames never differ by more than the cap at jitter_scale 1.
  // Tilts (ax, ay) use a lower cap so an R=10 neighborhood stays inside the
  // default subvolume depth; fan sweeps jitter in-plane only. Translation caps
  // sit below 0.2 mm because in-plane rotation jitter mixes x and y in the
  // frame's own coordinates.
  constexpr std::array<double, 6> kRateCap{0.17, 0.17, 0.0, 0.15, 0.15, 0.5};
  std::array<double, 6> amp{}, period{}, phase{};
  for (std::size_t c = 0; c < 6; ++c) {
    period[c] = 40.0 + 20.0 * unit(rng);
    phase[c] = 2.0 * kPi * unit(rng);
    const double scale = 0.7 + 0.3 * unit(rng);
    const bool tilt = c == 3 || c == 4;
    if (trajectory == Trajectory::kFan && tilt) continue;
    amp[c] = opts.jitter_scale * scale * kRateCap[c] * period[c] / (2.0 * kPi);
  }

  std::vector<RigidParams> poses;
  poses.reserve(n_frames);
  const double mid = 0.5 * (n_frames - 1);
  for (int f = 0; f < n_frames; ++f) {
    RigidParams jitter;
    for (std::size_t c = 0; c < 6; ++c) {
      jitter[c] = amp[c] * std::sin(2.0 * kPi * f / period[c] + phase[c]);
    }
    HomTransform m;
    if (trajectory == Trajectory::kLinear) {
      m = base_m * HomTransform::translation(0.0, 0.0, (f - mid) * opts.step_mm);
    } else {
      const double p = opts.fan_pivot_mm;
      m = base_m * HomTransform::translation(0.0, -p, 0.0) *
          HomTransform::rotation_x((f - mid) * opts.fan_step_deg) *
          HomTransform::translation(0.0, p, 0.0);
    }
    m = m * params_to_matrix(jitter);
    poses.push_back(matrix_to_params(m));
  }
  return poses;
}

SweepDataset sweep_simulate(const Volume3D& v, std::uint64_t seed, int n_frames,
                            Trajectory trajectory, const SweepOptions& opts) {
  const double spacing = opts.frame_spacing > 0.0 ? opts.frame_spacing : v.spacing.x;
  SweepDataset ds;
  ds.volume = v;
  ds.seed = seed;
  ds.trajectory = trajectory;
  ds.poses = sweep_poses(seed, n_frames, trajectory, opts);
  ds.frames.reserve(n_frames);
  for (int f = 0; f < n_frames; ++f) {
    const SliceCorners c = slice_corners(ds.poses[f], opts.frame_height, opts.frame_width, spacing);
    for (const Vec3& p : c.points) {
      if (!v.contains(p)) {
        throw Error(ErrorCode::kOutOfBounds,
                    "sweep frame " + std::to_string(f) + " leaves the volume");
      }
    }
    ds.frames.push_back(
        sample_slice(v, ds.poses[f], opts.frame_height, opts.frame_width, spacing).to_frame());
  }
  return ds;
}

}  // namespace fvr
