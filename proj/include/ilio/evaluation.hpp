#pragma once

#include "ilio/types.hpp"

#include <Eigen/SVD>

namespace ilio {

/// Nearest-timestamp pairs (estimate index, reference index) within the
/// association gap; each reference sample is used at most once.
inline std::vector<std::pair<size_t, size_t>> associate_trajectories(
    const Trajectory& estimate, const Trajectory& reference,
    double max_gap = 0.05) {
  std::vector<std::pair<size_t, size_t>> pairs;
  size_t j = 0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate[i].t;
    while (j + 1 < reference.size() &&
           std::abs(reference[j + 1].t - t) <= std::abs(reference[j].t - t)) {
      ++j;
    }
    if (j < reference.size() && std::abs(reference[j].t - t) <= max_gap) {
      if (pairs.empty() || pairs.back().second != j) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

/// Closed-form rigid alignment (rotation + translation, no scale) taking
/// the source points onto the target points in the least-squares sense.
inline Pose rigid_align(const std::vector<Vec3>& source,
                        const std::vector<Vec3>& target) {
  if (source.size() != target.size() || source.size() < 3) {
    throw std::invalid_argument("rigid_align: need >= 3 paired points");
  }
  Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= static_cast<double>(source.size());
  mu_t /= static_cast<double>(source.size());
  Mat3 cov = Mat3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    cov.noalias() += (source[i] - mu_s) * (target[i] - mu_t).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) {
    D(2, 2) = -1.0;
  }
  const Mat3 R = svd.matrixV() * D * svd.matrixU().transpose();
  return Pose{Quat(R), mu_t - R * mu_s};
}

/// Absolute translational error: RMSE after rigid alignment of the
/// associated estimate positions onto the ground truth.
inline double evaluate_ate(const Trajectory& estimate, const Trajectory& gt,
                           double max_gap = 0.05) {
  const auto pairs = associate_trajectories(estimate, gt, max_gap);
  if (pairs.size() < 3) {
    throw std::runtime_error("evaluate_ate: insufficient trajectory overlap");
  }
  std::vector<Vec3> est, ref;
  est.reserve(pairs.size());
  ref.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    est.push_back(estimate[i].pose.translation);
    ref.push_back(gt[j].pose.translation);
  }
  const Pose T = rigid_align(est, ref);
  double sq = 0.0;
  for (size_t k = 0; k < est.size(); ++k) {
    sq += (T * est[k] - ref[k]).squaredNorm();
  }
  return std::sqrt(sq / est.size());
}

inline constexpr double kRteFailureThreshold = 20.0;  // percent

/// Relative translational error over fixed-arc-length segments: for each
/// ground-truth start, the sample one segment of arc length ahead defines
/// a relative pose that the estimate is compared against; reported as mean
/// translational error / segment * 100.
inline double evaluate_rte(const Trajectory& estimate, const Trajectory& gt,
                           double segment = 10.0, double max_gap = 0.05) {
  const auto pairs = associate_trajectories(estimate, gt, max_gap);
  if (pairs.size() < 2) {
    throw std::runtime_error("evaluate_rte: insufficient trajectory overlap");
  }
  std::vector<double> arc(pairs.size(), 0.0);
  for (size_t k = 1; k < pairs.size(); ++k) {
    arc[k] = arc[k - 1] + (gt[pairs[k].second].pose.translation -
                           gt[pairs[k - 1].second].pose.translation)
                              .norm();
  }
  if (arc.back() < segment) {
    throw std::runtime_error("evaluate_rte: trajectory shorter than segment");
  }
  double err_sum = 0.0;
  int count = 0;
  size_t k_end = 0;
  for (size_t k = 0; k < pairs.size(); ++k) {
    while (k_end < pairs.size() && arc[k_end] - arc[k] < segment) ++k_end;
    if (k_end >= pairs.size()) break;
    const Pose& Q_i = gt[pairs[k].second].pose;
    const Pose& Q_j = gt[pairs[k_end].second].pose;
    const Pose& P_i = estimate[pairs[k].first].pose;
    const Pose& P_j = estimate[pairs[k_end].first].pose;
    const Pose rel_err = (Q_i.inverse() * Q_j).inverse() * (P_i.inverse() * P_j);
    err_sum += rel_err.translation.norm();
    ++count;
  }
  if (count == 0) {
    throw std::runtime_error("evaluate_rte: no complete segments");
  }
  return err_sum / count / segment * 100.0;
}

}  // namespace ilio
