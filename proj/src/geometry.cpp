// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fvr/geometry.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/LU>

#include "fvr/error.hpp"
#include "fvr/textio.hpp"

namespace fvr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kGimbalLock: return "GimbalLock";
    case ErrorCode::kTooSmall: return "TooSmall";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

double& RigidParams::operator[](std::size_t k) {
  switch (k) {
    case 0: return tx;
    case 1: return ty;
    case 2: return tz;
    case 3: return ax;
    case 4: return ay;
    case 5: return az;
  }
  throw Error(ErrorCode::kInvalidArgument, "RigidParams index out of range");
}

double RigidParams::operator[](std::size_t k) const {
  return const_cast<RigidParams&>(*this)[k];
}

bool RigidParams::is_finite() const {
  for (double v : to_array()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool RigidParams::is_valid() const {
  if (!is_finite()) return false;
  for (double a : {ax, ay, az}) {
    if (a < -180.0 || a >= 180.0) return false;
  }
  return true;
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  w -= 180.0;
  // fmod rounding can land exactly on +180
  return w >= 180.0 ? w - 360.0 : w;
}

std::ostream& operator<<(std::ostream& os, const RigidParams& p) {
  return os << "(" << p.tx << ", " << p.ty << ", " << p.tz << ", " << p.ax << ", " << p.ay
            << ", " << p.az << ")";
}

// ---------------------------------------------------------------------------
// HomTransform

HomTransform HomTransform::from_matrix(const Mat4& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "transform matrix has non-finite entries");
  }
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "last row must be exactly [0 0 0 1]");
  }
  const Mat3 r = m.topLeftCorner<3, 3>();
  const double orth_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (orth_err > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "rotation block is not a proper rotation");
  }
  return HomTransform(m);
}

HomTransform HomTransform::from_rotation_translation(const Mat3& r, const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return from_matrix(m);
}

HomTransform HomTransform::translation(double x, double y, double z) {
  Mat4 m = Mat4::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return HomTransform(m);
}

HomTransform HomTransform::rotation_x(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat4 m = Mat4::Identity();
  m(1, 1) = c;
  m(1, 2) = -s;
  m(2, 1) = s;
  m(2, 2) = c;
  return HomTransform(m);
}

HomTransform HomTransform::rotation_y(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat4 m = Mat4::Identity();
  m(0, 0) = c;
  m(0, 2) = s;
  m(2, 0) = -s;
  m(2, 2) = c;
  return HomTransform(m);
}

HomTransform HomTransform::rotation_z(double deg) {
  const double c = std::cos(deg * kDegToRad), s = std::sin(deg * kDegToRad);
  Mat4 m = Mat4::Identity();
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  return HomTransform(m);
}

HomTransform HomTransform::operator*(const HomTransform& rhs) const {
  Mat4 out = Mat4::Identity();
  out.topLeftCorner<3, 3>() = rotation() * rhs.rotation();
  out.topRightCorner<3, 1>() = rotation() * rhs.translation() + translation();
  return HomTransform(out);
}

HomTransform HomTransform::inverted() const {
  const Mat3 rt = rotation().transpose();
  Mat4 out = Mat4::Identity();
  out.topLeftCorner<3, 3>() = rt;
  out.topRightCorner<3, 1>() = -rt * translation();
  return HomTransform(out);
}

std::string HomTransform::serialize() const {
  std::string out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!out.empty()) out += ' ';
      out += format_double(m_(r, c));
    }
  }
  return out;
}

HomTransform HomTransform::parse(const std::string& text) {
  std::istringstream in(text);
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::string tok;
      if (!(in >> tok)) {
        throw Error(ErrorCode::kDimensionMismatch, "transform needs 16 numbers");
      }
      m(r, c) = parse_double(tok);
    }
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::kDimensionMismatch, "transform has extra tokens");
  return from_matrix(m);
}

std::ostream& operator<<(std::ostream& os, const HomTransform& t) {
  return os << t.serialize();
}

// ---------------------------------------------------------------------------

HomTransform params_to_matrix(const RigidParams& p) {
  return HomTransform::translation(p.tx, p.ty, p.tz) * HomTransform::rotation_z(p.az) *
         HomTransform::rotation_y(p.ay) * HomTransform::rotation_x(p.ax);
}

RigidParams matrix_to_params(const HomTransform& t) {
  // R = Rz Ry Rx: r20 = -sin(ay), r21 = cos(ay) sin(ax), r22 = cos(ay) cos(ax),
  // r00 = cos(az) cos(ay), r10 = sin(az) cos(ay).
  const Mat3 r = t.rotation();
  const double cos_ay = std::hypot(r(0, 0), r(1, 0));
  if (cos_ay < 1e-7) {
    throw Error(ErrorCode::kGimbalLock, "cos(ay) below 1e-7; Euler angles undefined");
  }
  RigidParams p;
  const Vec3 tr = t.translation();
  p.tx = tr.x();
  p.ty = tr.y();
  p.tz = tr.z();
  p.ax = wrap_degrees(std::atan2(r(2, 1), r(2, 2)) * kRadToDeg);
  p.ay = wrap_degrees(std::atan2(-r(2, 0), cos_ay) * kRadToDeg);
  p.az = wrap_degrees(std::atan2(r(1, 0), r(0, 0)) * kRadToDeg);
  return p;
}

HomTransform compose(const HomTransform& a, const HomTransform& b) { return a * b; }

HomTransform inverse(const HomTransform& t) {
  return t.inverted();
}

RigidParams relative_params(const RigidParams& theta_n, const RigidParams& theta_init) {
  return matrix_to_params(inverse(params_to_matrix(theta_init)) * params_to_matrix(theta_n));
}

SliceCorners slice_corners(const RigidParams& theta, int height_px, int width_px,
                           double spacing_mm) {
  if (height_px < 1 || width_px < 1 || !(spacing_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "slice dims and spacing must be positive");
  }
  const double hx = 0.5 * (width_px - 1) * spacing_mm;
  const double hy = 0.5 * (height_px - 1) * spacing_mm;
  const HomTransform t = params_to_matrix(theta);
  return SliceCorners{{t.apply({-hx, -hy, 0.0}), t.apply({hx, -hy, 0.0}),
                       t.apply({hx, hy, 0.0}), t.apply({-hx, hy, 0.0})}};
}

double corner_distance_error(const RigidParams& a, const RigidParams& b, int height_px,
                             int width_px, double spacing_mm) {
  const SliceCorners ca = slice_corners(a, height_px, width_px, spacing_mm);
  const SliceCorners cb = slice_corners(b, height_px, width_px, spacing_mm);
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) sum += (ca.points[k] - cb.points[k]).norm();
  return sum / 4.0;
}

}  // namespace fvr
