// Copyright 2026 The fvrnet Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FVR_GEOMETRY_HPP_
#define FVR_GEOMETRY_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace fvr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// Rigid 6-DoF pose: translations in millimeters, rotations in degrees about
/// the x, y and z axes. Index order is (tx, ty, tz, ax, ay, az) everywhere.
struct RigidParams {
  double tx = 0.0;
  double ty = 0.0;
  double tz = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;

  static constexpr std::size_t kSize = 6;

  double& operator[](std::size_t k);
  double operator[](std::size_t k) const;

  std::array<double, kSize> to_array() const { return {tx, ty, tz, ax, ay, az}; }
  static RigidParams from_array(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }

  bool is_finite() const;
  /// Finite and all angles in [-180, 180).
  bool is_valid() const;

  friend bool operator==(const RigidParams&, const RigidParams&) = default;
};

/// Wraps an angle in degrees into [-180, 180).
double wrap_degrees(double deg);

std::ostream& operator<<(std::ostream& os, const RigidParams& p);

/// Rigid homogeneous transform. The rotation block is kept orthonormal with
/// det +1 and the last row is exactly [0 0 0 1].
class HomTransform {
 public:
  HomTransform() : m_(Mat4::Identity()) {}

  /// Validates the rigid-matrix invariants (orthonormality within 1e-9).
  /// Throws Error(kInvalidArgument) otherwise.
  static HomTransform from_matrix(const Mat4& m);
  static HomTransform from_rotation_translation(const Mat3& r, const Vec3& t);

  static HomTransform identity() { return {}; }
  static HomTransform translation(double x, double y, double z);
  static HomTransform rotation_x(double deg);
  static HomTransform rotation_y(double deg);
  static HomTransform rotation_z(double deg);

  const Mat4& matrix() const { return m_; }
  Mat3 rotation() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return m_.topRightCorner<3, 1>(); }
  double operator()(int r, int c) const { return m_(r, c); }

  Vec3 apply(const Vec3& p) const { return rotation() * p + translation(); }

  HomTransform operator*(const HomTransform& rhs) const;
  HomTransform inverted() const;

  /// 16 whitespace-separated decimals, row-major, round-trip exact.
  std::string serialize() const;
  static HomTransform parse(const std::string& text);

 private:
  explicit HomTransform(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

std::ostream& operator<<(std::ostream& os, const HomTransform& t);

/// T = Translate(tx,ty,tz) * Rz(az) * Ry(ay) * Rx(ax); rotation about the origin.
HomTransform params_to_matrix(const RigidParams& p);

/// Inverse of params_to_matrix. Throws Error(kGimbalLock) when |cos(ay)| < 1e-7.
RigidParams matrix_to_params(const HomTransform& t);

HomTransform compose(const HomTransform& a, const HomTransform& b);

/// Rigid inverse using the transposed rotation block.
HomTransform inverse(const HomTransform& t);

/// Pose of theta_n expressed in the frame of theta_init:
/// params(inverse(M(theta_init)) * M(theta_n)).
RigidParams relative_params(const RigidParams& theta_n, const RigidParams& theta_init);

/// Corners of a sampling plane in physical space, ordered
/// (top-left, top-right, bottom-right, bottom-left) in pixel terms.
struct SliceCorners {
  std::array<Vec3, 4> points;
};

/// Corners of the centered (width-1)*s x (height-1)*s rectangle in the xOy
/// plane, mapped by params_to_matrix(theta).
SliceCorners slice_corners(const RigidParams& theta, int height_px, int width_px,
                           double spacing_mm);

/// Mean Euclidean distance (mm) between corresponding corners of the two
/// transformed planes.
double corner_distance_error(const RigidParams& a, const RigidParams& b, int height_px,
                             int width_px, double spacing_mm);

}  // namespace fvr

#endif  // FVR_GEOMETRY_HPP_
