#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace ilio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Quat = Eigen::Quaterniond;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

/// Rotation-vector exponential map, returns a unit quaternion.
inline Quat exp_so3(const Vec3& phi) {
  const double theta = phi.norm();
  double half_sinc;  // sin(theta/2)/theta
  if (theta < 1e-8) {
    half_sinc = 0.5 - theta * theta / 48.0;
  } else {
    half_sinc = std::sin(0.5 * theta) / theta;
  }
  Quat q(std::cos(0.5 * theta), half_sinc * phi.x(), half_sinc * phi.y(),
         half_sinc * phi.z());
  q.normalize();
  return q;
}

/// Logarithm map to a rotation vector. Well-defined at theta = pi
/// (any valid axis); result magnitude is in [0, pi].
inline Vec3 log_so3(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  const double theta = 2.0 * std::atan2(s, q.w());
  if (s < 1e-10) {
    // theta/s -> 2/w for small s
    return v * (2.0 / q.w()) * (1.0 - s * s / (3.0 * q.w() * q.w()));
  }
  return v * (theta / s);
}

inline Vec3 log_so3(const Mat3& R) { return log_so3(Quat(R)); }

/// Right Jacobian of SO(3): Exp(phi + d) ~ Exp(phi) Exp(Jr(phi) d).
inline Mat3 right_jacobian_so3(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 S = skew(phi);
  if (theta < 1e-7) {
    return Mat3::Identity() - 0.5 * S + S * S / 6.0;
  }
  const double t2 = theta * theta;
  return Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * S +
         (theta - std::sin(theta)) / (t2 * theta) * S * S;
}

/// Rigid transform; acts on points as R*p + t.
struct Pose {
  Quat rotation{Quat::Identity()};
  Vec3 translation{Vec3::Zero()};

  static Pose Identity() { return Pose{}; }

  Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}
  Pose() = default;

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  Pose operator*(const Pose& other) const {
    return Pose{rotation * other.rotation,
                rotation * other.translation + translation};
  }

  Pose inverse() const {
    const Quat qi = rotation.conjugate();
    return Pose{qi, qi * (-translation)};
  }

  Mat3 matrix() const { return rotation.toRotationMatrix(); }
};

inline Vec3 transform_point(const Pose& T, const Vec3& p) { return T * p; }

namespace detail {
// V(phi) so that exp_se3 translation = V(phi) * rho.
inline Mat3 se3_v(const Vec3& phi) {
  const double theta = phi.norm();
  const Mat3 S = skew(phi);
  if (theta < 1e-7) {
    return Mat3::Identity() + 0.5 * S + S * S / 6.0;
  }
  const double t2 = theta * theta;
  return Mat3::Identity() + (1.0 - std::cos(theta)) / t2 * S +
         (theta - std::sin(theta)) / (t2 * theta) * S * S;
}
}  // namespace detail

/// SE(3) exponential; tangent ordered (phi, rho).
inline Pose exp_se3(const Vec6& xi) {
  const Vec3 phi = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  return Pose{exp_so3(phi), detail::se3_v(phi) * rho};
}

inline Vec6 log_se3(const Pose& T) {
  const Vec3 phi = log_so3(T.rotation);
  Vec6 xi;
  xi.head<3>() = phi;
  xi.tail<3>() = detail::se3_v(phi).inverse() * T.translation;
  return xi;
}

/// Geodesic interpolation on SE(3): T(s) = a * Exp(s * Log(a^-1 b)).
inline Pose interpolate_pose(const Pose& a, const Pose& b, double s) {
  return a * exp_se3(s * log_se3(a.inverse() * b));
}

inline double rotation_angle(const Quat& q) { return log_so3(q).norm(); }

/// Angle of the relative rotation between two quaternions.
inline double rotation_distance(const Quat& a, const Quat& b) {
  return rotation_angle(a.conjugate() * b);
}

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace ilio
