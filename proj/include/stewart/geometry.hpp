#pragma once

// Stewart platform pose math and rotary-actuator inverse kinematics.
//
// Rotation convention: extrinsic X-Y-Z, i.e. R = Rz(yaw) * Ry(pitch) * Rx(roll).
// Horn i rotates in the vertical plane with heading lambda_i; at angle alpha the
// horn tip sits at b_i + h (cos(lambda) cos(alpha), sin(lambda) cos(alpha), sin(alpha)).

#include "stewart/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace stewart {

constexpr int kLegCount = 6;

template <typename Scalar>
struct Pose {
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();
  Scalar roll = 0;
  Scalar pitch = 0;
  Scalar yaw = 0;
};

template <typename Scalar>
struct PlatformGeometry {
  std::array<Vec3<Scalar>, kLegCount> base_anchors;
  std::array<Vec3<Scalar>, kLegCount> platform_joints;
  Scalar horn_length = 0;
  Scalar rod_length = 0;
  std::array<Scalar, kLegCount> horn_axis_heading{};
  Scalar home_height = 0;

  /// Throws ContractViolation naming the first broken invariant.
  void validate() const {
    if (!(horn_length > 0)) throw ContractViolation("horn_length must be positive");
    if (!(rod_length > horn_length)) throw ContractViolation("rod_length must exceed horn_length");
    for (int i = 0; i < kLegCount; ++i) {
      if (!base_anchors[i].allFinite() || !platform_joints[i].allFinite())
        throw ContractViolation("non-finite anchor or joint coordinate");
      for (int j = i + 1; j < kLegCount; ++j) {
        if (base_anchors[i] == base_anchors[j])
          throw ContractViolation("base anchors must be pairwise distinct");
        if (platform_joints[i] == platform_joints[j])
          throw ContractViolation("platform joints must be pairwise distinct");
      }
    }
  }

  Pose<Scalar> neutral_pose() const {
    Pose<Scalar> p;
    p.translation = Vec3<Scalar>(0, 0, home_height);
    return p;
  }
};

using Posed = Pose<double>;
using PlatformGeometryd = PlatformGeometry<double>;

template <typename Scalar>
Rot3<Scalar> rotation_matrix(Scalar roll, Scalar pitch, Scalar yaw) {
  using std::cos;
  using std::sin;
  const Scalar cr = cos(roll), sr = sin(roll);
  const Scalar cp = cos(pitch), sp = sin(pitch);
  const Scalar cy = cos(yaw), sy = sin(yaw);
  Rot3<Scalar> r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return r;
}

template <typename Scalar>
Rot3<Scalar> rotation_matrix(const Pose<Scalar>& pose) {
  return rotation_matrix(pose.roll, pose.pitch, pose.yaw);
}

namespace detail {
inline void check_leg(int leg) {
  if (leg < 0 || leg >= kLegCount)
    throw ContractViolation("leg index " + std::to_string(leg) + " out of range [0, 6)");
}
}  // namespace detail

/// m_i = T + R * J_i, the platform joint in the fixed frame. `leg` is zero-based.
template <typename Scalar>
Vec3<Scalar> platform_joint_world(const Pose<Scalar>& pose, const PlatformGeometry<Scalar>& geom,
                                  int leg) {
  detail::check_leg(leg);
  return pose.translation + rotation_matrix(pose) * geom.platform_joints[leg];
}

/// d_i = T + R * J_i - b_i.
template <typename Scalar>
Vec3<Scalar> leg_vector(const Pose<Scalar>& pose, const PlatformGeometry<Scalar>& geom, int leg) {
  return platform_joint_world(pose, geom, leg) - geom.base_anchors[leg];
}

template <typename Scalar>
Vec3<Scalar> horn_tip(const PlatformGeometry<Scalar>& geom, int leg, Scalar alpha) {
  detail::check_leg(leg);
  using std::cos;
  using std::sin;
  const Scalar lambda = geom.horn_axis_heading[leg];
  return geom.base_anchors[leg] +
         geom.horn_length *
             Vec3<Scalar>(cos(lambda) * cos(alpha), sin(lambda) * cos(alpha), sin(alpha));
}

/// Horn angle that places the rod end on the platform joint:
///   alpha = asin((|d|^2 - e^2 + h^2) / sqrt(a^2 + b^2)) - atan2(b, a)
/// with a = 2h dz and b = 2h (cos(lambda) dx + sin(lambda) dy).
template <typename Scalar>
Scalar servo_angle(const Pose<Scalar>& pose, const PlatformGeometry<Scalar>& geom, int leg) {
  using std::asin;
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Vec3<Scalar> d = leg_vector(pose, geom, leg);
  const Scalar h = geom.horn_length;
  const Scalar e = geom.rod_length;
  const Scalar lambda = geom.horn_axis_heading[leg];
  const Scalar a = 2 * h * d.z();
  const Scalar b = 2 * h * (cos(lambda) * d.x() + sin(lambda) * d.y());
  const Scalar norm = sqrt(a * a + b * b);
  if (norm == Scalar(0)) throw DegenerateGeometry(leg);
  const Scalar ratio = (d.squaredNorm() - e * e + h * h) / norm;
  if (!(ratio >= Scalar(-1) && ratio <= Scalar(1))) throw UnreachablePose(leg);
  return asin(ratio) - atan2(b, a);
}

/// Per-leg outcome of solving all six horn angles; failures are data, not exceptions.
template <typename Scalar>
struct ReachReport {
  std::array<std::optional<Scalar>, kLegCount> angles;
  std::vector<int> failing_legs;

  bool reachable() const { return failing_legs.empty(); }
};

template <typename Scalar>
ReachReport<Scalar> pose_reachable(const Pose<Scalar>& pose, const PlatformGeometry<Scalar>& geom) {
  ReachReport<Scalar> report;
  for (int leg = 0; leg < kLegCount; ++leg) {
    try {
      report.angles[leg] = servo_angle(pose, geom, leg);
    } catch (const UnreachablePose&) {
      report.failing_legs.push_back(leg);
    } catch (const DegenerateGeometry&) {
      report.failing_legs.push_back(leg);
    }
  }
  return report;
}

/// Plate height that makes the neutral-pose asin argument vanish for leg 0.
template <typename Scalar>
Scalar zero_argument_home_height(const PlatformGeometry<Scalar>& geom) {
  using std::sqrt;
  const Vec3<Scalar> d = geom.platform_joints[0] - geom.base_anchors[0];
  const Scalar planar = d.x() * d.x() + d.y() * d.y();
  const Scalar h = geom.horn_length;
  const Scalar e = geom.rod_length;
  const Scalar z2 = e * e - h * h - planar;
  if (!(z2 > 0)) throw ContractViolation("joint offset too large for a zero-argument home height");
  return sqrt(z2) - d.z();
}

}  // namespace stewart
