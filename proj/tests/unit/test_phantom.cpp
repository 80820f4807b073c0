// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fvr/error.hpp"
#include "fvr/phantom.hpp"
#include "fvr/sampler.hpp"

using namespace fvr;

namespace {

// Pearson correlation between voxels and their +1 neighbors along x.
double lag_one_autocorrelation(const Volume3D& v) {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  std::size_t n = 0;
  for (int k = 0; k < v.depth; ++k) {
    for (int i = 0; i < v.height; ++i) {
      for (int j = 0; j + 1 < v.width; ++j) {
        const double a = v.at(k, i, j), b = v.at(k, i, j + 1);
        sa += a, sb += b, saa += a * a, sbb += b * b, sab += a * b;
        ++n;
      }
    }
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  return cov / std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
}

SweepOptions small_frames() {
  SweepOptions o;
  o.frame_height = o.frame_width = 36;
  return o;
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("phantoms are deterministic per seed") {
  CHECK(phantom_generate(9, 48, 48, 48, 1.0) == phantom_generate(9, 48, 48, 48, 1.0));
  CHECK_FALSE(phantom_generate(9, 48, 48, 48, 1.0) == phantom_generate(10, 48, 48, 48, 1.0));
}

TEST_CASE("phantom range and smoothness") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Volume3D v = phantom_generate(seed, 48, 52, 56, 1.0);
    const auto [lo, hi] = std::minmax_element(v.voxels.begin(), v.voxels.end());
    CHECK(*lo == 0.0f);
    CHECK(*hi == 1.0f);
    CHECK(lag_one_autocorrelation(phantom_base_field(seed, 48, 52, 56, 1.0)) > 0.95);
  }
}

TEST_CASE("speckle stays low amplitude") {
  const Volume3D base = phantom_base_field(4, 48, 48, 48, 1.0);
  const Volume3D full = phantom_generate(4, 48, 48, 48, 1.0);
  double worst = 0.0;
  for (std::size_t p = 0; p < base.size(); ++p) {
    worst = std::max(worst, std::abs(static_cast<double>(full.voxels[p]) - base.voxels[p]));
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("phantom dimensions are validated") {
  CHECK_THROWS_AS(phantom_generate(1, 47, 48, 48, 1.0), Error);
  CHECK_THROWS_AS(phantom_generate(1, 48, 48, 48, 0.0), Error);
}

TEST_CASE("frames are the slices at their poses") {
  const Volume3D v = phantom_generate(5, 48, 48, 48, 2.0);
  const SweepOptions o = small_frames();
  for (Trajectory t : {Trajectory::kLinear, Trajectory::kFan}) {
    const SweepDataset ds = sweep_simulate(v, 5, 25, t, o);
    CHECK(ds.size() == 25);
    CHECK(ds.poses.size() == 25);
    for (std::size_t f = 0; f < ds.size(); f += 6) {
      CHECK(ds.frames[f] == sample_slice(v, ds.poses[f], 36, 36, 2.0).to_frame());
    }
  }
}

TEST_CASE("every frame lies inside the volume") {
  const Volume3D v = phantom_generate(6, 48, 48, 48, 2.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (Trajectory t : {Trajectory::kLinear, Trajectory::kFan}) {
      const SweepDataset ds = sweep_simulate(v, seed, 61, t, small_frames());
      for (const auto& pose : ds.poses) {
        for (const Vec3& c : slice_corners(pose, 36, 36, 2.0).points) CHECK(v.contains(c));
      }
    }
  }
}

TEST_CASE("jitter-free linear sweeps step along the normal") {
  SweepOptions o = small_frames();
  o.jitter_scale = 0.0;
  const auto poses = sweep_poses(7, 30, Trajectory::kLinear, o);
  for (std::size_t f = 0; f + 1 < poses.size(); ++f) {
    const RigidParams d = relative_params(poses[f + 1], poses[f]);
    const RigidParams want{0, 0, 0.5, 0, 0, 0};
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(d[k] - want[k]) < 1e-9);
  }
}

TEST_CASE("jitter-free fan sweeps rotate by the fan step") {
  SweepOptions o = small_frames();
  o.jitter_scale = 0.0;
  const auto poses = sweep_poses(8, 30, Trajectory::kFan, o);
  for (std::size_t f = 0; f + 1 < poses.size(); ++f) {
    const RigidParams d = relative_params(poses[f + 1], poses[f]);
    CHECK(d.ax == doctest::Approx(0.5));
    CHECK(std::abs(d.ay) < 1e-9);
    CHECK(std::abs(d.az) < 1e-9);
  }
}

TEST_CASE("per-frame jitter respects the motion caps") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto poses = sweep_poses(seed, 61, Trajectory::kLinear, small_frames());
    for (std::size_t f = 0; f + 1 < poses.size(); ++f) {
      const RigidParams d = relative_params(poses[f + 1], poses[f]);
      CHECK(std::abs(d.tx) <= 0.2 + 1e-3);
      CHECK(std::abs(d.ty) <= 0.2 + 1e-3);
      CHECK(std::abs(d.tz - 0.5) <= 0.2);
      for (std::size_t k = 3; k < 6; ++k) CHECK(std::abs(d[k]) <= 0.5);
    }
  }
}

TEST_CASE("sweep generation is deterministic and validated") {
  const Volume3D v = phantom_generate(9, 48, 48, 48, 2.0);
  CHECK(sweep_simulate(v, 3, 21, Trajectory::kFan, small_frames()) ==
        sweep_simulate(v, 3, 21, Trajectory::kFan, small_frames()));
  CHECK_THROWS_AS(sweep_poses(1, 20, Trajectory::kLinear), Error);
  SweepOptions huge = small_frames();
  huge.step_mm = 5.0;
  try {
    sweep_simulate(v, 1, 41, Trajectory::kLinear, huge);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfBounds);
  }
  CHECK(parse_trajectory("fan") == Trajectory::kFan);
  CHECK(std::string(to_string(Trajectory::kLinear)) == "linear");
  CHECK_THROWS_AS(parse_trajectory("spiral"), Error);
}

}  // TEST_SUITE
