#pragma once

#include "ilio/math.hpp"

namespace ilio {

// Error-state ordering used everywhere: (dtheta, dp, dv, dba, dbg, dg).
inline constexpr int kErrTheta = 0;
inline constexpr int kErrPos = 3;
inline constexpr int kErrVel = 6;
inline constexpr int kErrBa = 9;
inline constexpr int kErrBg = 12;
inline constexpr int kErrGrav = 15;
inline constexpr int kErrDim = 18;

using ErrorVec = Eigen::Matrix<double, kErrDim, 1>;
using ErrorCovariance = Eigen::Matrix<double, kErrDim, kErrDim>;

/// Filter state. R_GI/p_GI take IMU-frame vectors into the global frame.
struct NavState {
  Quat R_GI{Quat::Identity()};
  Vec3 p_GI{Vec3::Zero()};
  Vec3 v_I{Vec3::Zero()};    // m/s, global frame
  Vec3 b_a{Vec3::Zero()};    // m/s^2
  Vec3 b_g{Vec3::Zero()};    // rad/s
  Vec3 g_G{0.0, 0.0, -9.81}; // m/s^2, global frame

  Pose pose() const { return Pose{R_GI, p_GI}; }
};

/// Rotation block applied right-multiplicatively: R <- R * Exp(dtheta).
inline NavState boxplus(const NavState& x, const ErrorVec& delta) {
  if (!delta.allFinite()) {
    throw std::invalid_argument("boxplus: non-finite increment");
  }
  NavState out = x;
  out.R_GI = (x.R_GI * exp_so3(delta.segment<3>(kErrTheta))).normalized();
  out.p_GI += delta.segment<3>(kErrPos);
  out.v_I += delta.segment<3>(kErrVel);
  out.b_a += delta.segment<3>(kErrBa);
  out.b_g += delta.segment<3>(kErrBg);
  out.g_G += delta.segment<3>(kErrGrav);
  return out;
}

inline ErrorVec boxminus(const NavState& a, const NavState& b) {
  ErrorVec d;
  d.segment<3>(kErrTheta) = log_so3(b.R_GI.conjugate() * a.R_GI);
  d.segment<3>(kErrPos) = a.p_GI - b.p_GI;
  d.segment<3>(kErrVel) = a.v_I - b.v_I;
  d.segment<3>(kErrBa) = a.b_a - b.b_a;
  d.segment<3>(kErrBg) = a.b_g - b.b_g;
  d.segment<3>(kErrGrav) = a.g_G - b.g_G;
  return d;
}

inline void symmetrize(ErrorCovariance& P) {
  P = 0.5 * (P + P.transpose()).eval();
}

}  // namespace ilio
