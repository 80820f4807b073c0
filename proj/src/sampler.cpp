// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/sampler.hpp"

#include <cmath>

#include "fvr/error.hpp"

namespace fvr {
namespace {

// Locates the trilinear cell along one axis. A coordinate exactly on the last
// voxel uses the cell below it with fraction 1 so that all neighbors exist.
struct AxisCell {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;
};

bool locate(double c, int n, AxisCell& cell) {
  if (!(c >= 0.0 && c <= n - 1)) return false;
  if (n == 1) {
    cell = {0, 0, 0.0};
    return true;
  }
  int lo = static_cast<int>(std::floor(c));
  if (lo >= n - 1) lo = n - 2;
  cell = {lo, lo + 1, c - lo};
  return true;
}

struct Corners {
  double v000, v001, v010, v011, v100, v101, v110, v111;
};

Corners gather(const Volume3D& v, const AxisCell& k, const AxisCell& i, const AxisCell& j) {
  return {v.at(k.lo, i.lo, j.lo), v.at(k.lo, i.lo, j.hi), v.at(k.lo, i.hi, j.lo),
          v.at(k.lo, i.hi, j.hi), v.at(k.hi, i.lo, j.lo), v.at(k.hi, i.lo, j.hi),
          v.at(k.hi, i.hi, j.lo), v.at(k.hi, i.hi, j.hi)};
}

struct TrilinearSample {
  bool inside = false;
  double value = 0.0;
  Vec3 grad_world = Vec3::Zero();  // d value / d (x, y, z)
};

template <bool kWithGradient>
TrilinearSample trilinear(const Volume3D& vol, const Vec3& p) {
  TrilinearSample out;
  const Vec3 c = vol.world_to_voxel(p);
  AxisCell k, i, j;
  if (!locate(c[0], vol.depth, k) || !locate(c[1], vol.height, i) ||
      !locate(c[2], vol.width, j)) {
    return out;
  }
  const Corners n = gather(vol, k, i, j);
  const double fk = k.frac, fi = i.frac, fj = j.frac;
  const double c00 = n.v000 + (n.v001 - n.v000) * fj;
  const double c01 = n.v010 + (n.v011 - n.v010) * fj;
  const double c10 = n.v100 + (n.v101 - n.v100) * fj;
  const double c11 = n.v110 + (n.v111 - n.v110) * fj;
  const double c0 = c00 + (c01 - c00) * fi;
  const double c1 = c10 + (c11 - c10) * fi;
  out.inside = true;
  out.value = c0 + (c1 - c0) * fk;
  if constexpr (kWithGradient) {
    const double d_k = c1 - c0;
    const double d_i = (c01 - c00) * (1.0 - fk) + (c11 - c10) * fk;
    const double d_j = ((n.v001 - n.v000) * (1.0 - fi) + (n.v011 - n.v010) * fi) * (1.0 - fk) +
                       ((n.v101 - n.v100) * (1.0 - fi) + (n.v111 - n.v110) * fi) * fk;
    out.grad_world = {d_j / vol.spacing.x, d_i / vol.spacing.y, d_k / vol.spacing.z};
  }
  return out;
}

void check_dims(int h, int w, double s) {
  if (h < 1 || w < 1 || !(s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "grid dims and spacing must be positive");
  }
}

// Rotation-matrix partial derivatives per degree, for R = Rz(az) Ry(ay) Rx(ax).
std::array<Mat3, 3> rotation_derivatives(const RigidParams& p) {
  const double a = p.ax * kDegToRad, b = p.ay * kDegToRad, c = p.az * kDegToRad;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cc = std::cos(c), sc = std::sin(c);
  Mat3 rx, ry, rz, drx, dry, drz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  drx << 0, 0, 0, 0, -sa, -ca, 0, ca, -sa;
  dry << -sb, 0, cb, 0, 0, 0, -cb, 0, -sb;
  drz << -sc, -cc, 0, cc, -sc, 0, 0, 0, 0;
  return {kDegToRad * (rz * ry * drx), kDegToRad * (rz * dry * rx),
          kDegToRad * (drz * ry * rx)};
}

}  // namespace

std::size_t SampledSlice::inside_count() const {
  std::size_t n = 0;
  for (auto m : inside) n += m ? 1 : 0;
  return n;
}

Frame2D SampledSlice::to_frame() const {
  Frame2D f(height, width, spacing);
  for (std::size_t p = 0; p < values.size(); ++p) f.pixels[p] = static_cast<float>(values[p]);
  return f;
}

SampleGrid affine_grid(const RigidParams& theta, int height_px, int width_px,
                       double spacing_mm) {
  check_dims(height_px, width_px, spacing_mm);
  const HomTransform t = params_to_matrix(theta);
  SampleGrid g{height_px, width_px, spacing_mm, {}};
  g.points.reserve(static_cast<std::size_t>(height_px) * width_px);
  for (int i = 0; i < height_px; ++i) {
    const double v = (i - 0.5 * (height_px - 1)) * spacing_mm;
    for (int j = 0; j < width_px; ++j) {
      const double u = (j - 0.5 * (width_px - 1)) * spacing_mm;
      g.points.push_back(t.apply({u, v, 0.0}));
    }
  }
  return g;
}

SampledSlice resample(const Volume3D& v, const SampleGrid& g) {
  SampledSlice s{g.height, g.width, g.spacing, {}, {}};
  s.values.resize(g.points.size(), 0.0);
  s.inside.resize(g.points.size(), 0);
  for (std::size_t p = 0; p < g.points.size(); ++p) {
    const TrilinearSample t = trilinear<false>(v, g.points[p]);
    s.values[p] = t.value;
    s.inside[p] = t.inside ? 1 : 0;
  }
  return s;
}

SampledSlice sample_slice(const Volume3D& v, const RigidParams& theta, int height_px,
                          int width_px, double spacing_mm) {
  return resample(v, affine_grid(theta, height_px, width_px, spacing_mm));
}

std::pair<SampledSlice, SliceJacobian> resample_with_jacobian(const Volume3D& v,
                                                              const RigidParams& theta,
                                                              int height_px, int width_px,
                                                              double spacing_mm) {
  const SampleGrid g = affine_grid(theta, height_px, width_px, spacing_mm);
  const std::array<Mat3, 3> drot = rotation_derivatives(theta);
  SampledSlice s{height_px, width_px, spacing_mm, {}, {}};
  SliceJacobian jac{height_px, width_px, {}};
  s.values.resize(g.points.size(), 0.0);
  s.inside.resize(g.points.size(), 0);
  jac.rows.resize(g.points.size(), {0, 0, 0, 0, 0, 0});
  for (int i = 0; i < height_px; ++i) {
    const double pv = (i - 0.5 * (height_px - 1)) * spacing_mm;
    for (int j = 0; j < width_px; ++j) {
      const std::size_t p = static_cast<std::size_t>(i) * width_px + j;
      const TrilinearSample t = trilinear<true>(v, g.points[p]);
      s.values[p] = t.value;
      s.inside[p] = t.inside ? 1 : 0;
      if (!t.inside) continue;
      const double pu = (j - 0.5 * (width_px - 1)) * spacing_mm;
      auto& row = jac.rows[p];
      row[0] = t.grad_world.x();
      row[1] = t.grad_world.y();
      row[2] = t.grad_world.z();
      for (int r = 0; r < 3; ++r) {
        const Vec3 dp = drot[r].col(0) * pu + drot[r].col(1) * pv;
        row[3 + r] = t.grad_world.dot(dp);
      }
    }
  }
  return {std::move(s), std::move(jac)};
}

SliceJacobian finite_diff_jacobian(const Volume3D& v, const RigidParams& theta, int height_px,
                                   int width_px, double spacing_mm, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite-difference step must be > 0");
  SliceJacobian jac{height_px, width_px, {}};
  jac.rows.resize(static_cast<std::size_t>(height_px) * width_px, {0, 0, 0, 0, 0, 0});
  for (std::size_t k = 0; k < 6; ++k) {
    RigidParams plus = theta, minus = theta;
    plus[k] += step;
    minus[k] -= step;
    const SampledSlice sp = sample_slice(v, plus, height_px, width_px, spacing_mm);
    const SampledSlice sm = sample_slice(v, minus, height_px, width_px, spacing_mm);
    for (std::size_t p = 0; p < jac.rows.size(); ++p) {
      jac.rows[p][k] = (sp.values[p] - sm.values[p]) / (2.0 * step);
    }
  }
  return jac;
}

std::vector<std::uint8_t> fd_stable_mask(const Volume3D& v, const RigidParams& theta,
                                         int height_px, int width_px, double spacing_mm,
                                         double step) {
  auto cell_of = [&](const Vec3& p, std::array<int, 3>& out) {
    const Vec3 c = v.world_to_voxel(p);
    AxisCell k, i, j;
    if (!locate(c[0], v.depth, k) || !locate(c[1], v.height, i) || !locate(c[2], v.width, j)) {
      return false;
    }
    out = {k.lo, i.lo, j.lo};
    return true;
  };
  const SampleGrid base = affine_grid(theta, height_px, width_px, spacing_mm);
  std::vector<std::uint8_t> mask(base.points.size(), 0);
  std::vector<std::array<int, 3>> cells(base.points.size());
  for (std::size_t p = 0; p < base.points.size(); ++p) {
    mask[p] = cell_of(base.points[p], cells[p]) ? 1 : 0;
  }
  for (std::size_t k = 0; k < 6; ++k) {
    for (double sign : {-1.0, 1.0}) {
      RigidParams q = theta;
      q[k] += sign * step;
      const SampleGrid g = affine_grid(q, height_px, width_px, spacing_mm);
      for (std::size_t p = 0; p < g.points.size(); ++p) {
        std::array<int, 3> c{};
        if (mask[p] && (!cell_of(g.points[p], c) || c != cells[p])) mask[p] = 0;
      }
    }
  }
  return mask;
}

std::array<double, 6> accumulate_gradient(const SliceJacobian& jac,
                                          std::span<const double> dloss_dpixel) {
  if (dloss_dpixel.size() != jac.rows.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient and Jacobian sizes differ");
  }
  std::array<double, 6> g{0, 0, 0, 0, 0, 0};
  for (std::size_t p = 0; p < jac.rows.size(); ++p) {
    const double w = dloss_dpixel[p];
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < 6; ++k) g[k] += w * jac.rows[p][k];
  }
  return g;
}

}  // namespace fvr
