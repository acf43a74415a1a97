#pragma once

#include "ilio/math.hpp"

#include <Eigen/Eigenvalues>

#include <span>
#include <vector>

namespace ilio {

struct PointNormal {
  Vec3 point;   // global frame
  Vec3 normal;  // unit
};

struct DegeneracyConfig {
  double contribution_floor = 0.2;  // |n.v| below this does not count
  double threshold = 120.0;         // accumulated contribution per direction
};

/// Uninformative translational directions of the point-to-plane system.
/// When every direction is informative the coordinate axes are inserted
/// instead (fallback = true).
struct DegeneracyReport {
  std::vector<Vec3> directions;  // V_t, orthonormal
  Vec3 eigenvalues{Vec3::Zero()};     // ascending
  Vec3 contributions{Vec3::Zero()};   // accumulated filtered, same order
  bool fallback = false;
};

/// Translational block of H^T H for point-to-plane terms: sum n n^T.
inline Mat3 geometric_hessian(std::span<const PointNormal> correspondences) {
  Mat3 H = Mat3::Zero();
  for (const auto& c : correspondences) {
    H.noalias() += c.normal * c.normal.transpose();
  }
  return H;
}

namespace detail {
inline Vec3 canonical_sign(const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-12) return v[i] > 0.0 ? v : Vec3(-v);
  }
  return v;
}
}  // namespace detail

/// Principal-component analysis of the translational Hessian with
/// per-correspondence contribution filtering: a principal direction is
/// uninformative when the accumulated |n.v| (counting only values above
/// the floor) stays below the threshold.
inline DegeneracyReport detect_uninformative_directions(
    std::span<const PointNormal> correspondences, const DegeneracyConfig& cfg) {
  DegeneracyReport report;
  const Mat3 H = geometric_hessian(correspondences);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(H);
  report.eigenvalues = eig.eigenvalues();

  for (int i = 0; i < 3; ++i) {
    const Vec3 v = detail::canonical_sign(eig.eigenvectors().col(i));
    double accumulated = 0.0;
    for (const auto& c : correspondences) {
      const double contribution = std::abs(c.normal.dot(v));
      if (contribution > cfg.contribution_floor) accumulated += contribution;
    }
    report.contributions[i] = accumulated;
    if (accumulated < cfg.threshold) report.directions.push_back(v);
  }

  if (report.directions.empty()) {
    report.fallback = true;
    report.directions = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  }
  return report;
}

}  // namespace ilio
