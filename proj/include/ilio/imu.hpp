#pragma once

#include "ilio/state.hpp"
#include "ilio/types.hpp"

#include <span>

namespace ilio {

/// Continuous-time noise densities; discretized per IMU interval.
struct ImuConfig {
  double gyro_noise = 0.002;        // rad/s/sqrt(Hz)
  double acc_noise = 0.02;          // m/s^2/sqrt(Hz)
  double gyro_bias_noise = 2e-4;    // rad/s^2/sqrt(Hz)
  double acc_bias_noise = 2e-3;     // m/s^3/sqrt(Hz)
  double gravity_noise = 1e-5;
  double max_gap = 0.1;             // s, larger gaps count as dropout
  double init_duration = 0.5;       // s of static samples for gravity init
  double gravity_magnitude = 9.81;  // m/s^2
};

struct ImuGapError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Poses of the IMU frame at times t_j, relative to the frame at the table
/// end time t_k (entry at t_k is identity).
class RelativePoseTable {
 public:
  struct Entry {
    double t;
    Pose T_IkIj;
  };

  RelativePoseTable() = default;

  /// Builds from global poses sampled over the scan interval; the last
  /// sample defines the reference frame I_k.
  static RelativePoseTable from_global_poses(
      const std::vector<std::pair<double, Pose>>& samples) {
    if (samples.empty()) {
      throw std::invalid_argument("RelativePoseTable: no samples");
    }
    RelativePoseTable table;
    const Pose T_IkG = samples.back().second.inverse();
    table.entries_.reserve(samples.size());
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [t, pose] : samples) {
      if (t <= prev) {
        throw std::invalid_argument("RelativePoseTable: timestamps not monotone");
      }
      prev = t;
      table.entries_.push_back({t, T_IkG * pose});
    }
    return table;
  }

  double t_start() const { return entries_.front().t; }
  double t_end() const { return entries_.back().t; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Pose at t by geodesic interpolation between the bracketing entries;
  /// out-of-span times clamp to the nearest endpoint and are counted.
  Pose interpolate(double t) const {
    if (t <= entries_.front().t) {
      if (t < entries_.front().t - 1e-12) ++clamped_;
      return entries_.front().T_IkIj;
    }
    if (t >= entries_.back().t) {
      if (t > entries_.back().t + 1e-12) ++clamped_;
      return entries_.back().T_IkIj;
    }
    size_t lo = 0, hi = entries_.size() - 1;
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      (entries_[mid].t <= t ? lo : hi) = mid;
    }
    const double span = entries_[hi].t - entries_[lo].t;
    const double s = span > 0.0 ? (t - entries_[lo].t) / span : 0.0;
    return interpolate_pose(entries_[lo].T_IkIj, entries_[hi].T_IkIj, s);
  }

  int clamped_count() const { return clamped_; }

  /// Table mapping the same timestamps to inverse poses (frame k seen
  /// from frame j); used by the simulator round-trip checks.
  RelativePoseTable inverted() const {
    RelativePoseTable out;
    out.entries_.reserve(entries_.size());
    for (const auto& e : entries_) out.entries_.push_back({e.t, e.T_IkIj.inverse()});
    return out;
  }

 private:
  std::vector<Entry> entries_;
  mutable int clamped_ = 0;
};

struct PropagationResult {
  NavState state;
  ErrorCovariance covariance;
  RelativePoseTable table;
};

/// Forward-Euler strapdown propagation from state_time to t_end with the
/// first-order error-state transition. Records the IMU pose at every
/// sample timestamp for undistortion; table_start limits how far back the
/// recorded interval begins.
inline PropagationResult propagate(const NavState& x0,
                                   const ErrorCovariance& P0,
                                   std::span<const ImuSample> imu,
                                   double state_time, double t_end,
                                   const ImuConfig& cfg,
                                   double table_start = -1.0) {
  NavState x = x0;
  ErrorCovariance P = P0;
  if (table_start < 0.0) table_start = state_time;

  std::vector<std::pair<double, Pose>> poses;
  poses.emplace_back(state_time, x.pose());

  double t = state_time;
  size_t i = 0;
  while (i < imu.size() && imu[i].t <= t) ++i;

  auto step = [&](const ImuSample& s, double dt) {
    if (dt <= 0.0) return;
    if (dt > cfg.max_gap) {
      throw ImuGapError("IMU gap of " + std::to_string(dt) + " s at t=" +
                        std::to_string(t));
    }
    const Vec3 omega = s.gyro - x.b_g;
    const Vec3 acc_body = s.acc - x.b_a;
    const Mat3 R = x.R_GI.toRotationMatrix();
    const Vec3 acc_global = R * acc_body + x.g_G;

    // First-order error-state transition, right-multiplicative rotation
    // error: (dtheta, dp, dv, dba, dbg, dg).
    ErrorCovariance F = ErrorCovariance::Identity();
    F.block<3, 3>(kErrTheta, kErrTheta) = exp_so3(-omega * dt).toRotationMatrix();
    F.block<3, 3>(kErrTheta, kErrBg) = -Mat3::Identity() * dt;
    F.block<3, 3>(kErrPos, kErrVel) = Mat3::Identity() * dt;
    F.block<3, 3>(kErrVel, kErrTheta) = -R * skew(acc_body) * dt;
    F.block<3, 3>(kErrVel, kErrBa) = -R * dt;
    F.block<3, 3>(kErrVel, kErrGrav) = Mat3::Identity() * dt;

    ErrorCovariance Q = ErrorCovariance::Zero();
    Q.block<3, 3>(kErrTheta, kErrTheta) =
        Mat3::Identity() * cfg.gyro_noise * cfg.gyro_noise * dt;
    Q.block<3, 3>(kErrVel, kErrVel) =
        Mat3::Identity() * cfg.acc_noise * cfg.acc_noise * dt;
    Q.block<3, 3>(kErrBa, kErrBa) =
        Mat3::Identity() * cfg.acc_bias_noise * cfg.acc_bias_noise * dt;
    Q.block<3, 3>(kErrBg, kErrBg) =
        Mat3::Identity() * cfg.gyro_bias_noise * cfg.gyro_bias_noise * dt;
    Q.block<3, 3>(kErrGrav, kErrGrav) =
        Mat3::Identity() * cfg.gravity_noise * cfg.gravity_noise * dt;

    P = (F * P * F.transpose() + Q).eval();
    symmetrize(P);

    x.p_GI += x.v_I * dt + 0.5 * acc_global * dt * dt;
    x.v_I += acc_global * dt;
    x.R_GI = (x.R_GI * exp_so3(omega * dt)).normalized();
    t += dt;
  };

  for (; i < imu.size() && imu[i].t <= t_end; ++i) {
    step(imu[i], imu[i].t - t);
    if (t >= table_start - 1e-12) poses.emplace_back(t, x.pose());
  }
  if (t < t_end) {
    // Hold the last measurement to reach the scan end time.
    if (imu.empty()) throw ImuGapError("no IMU samples");
    const size_t last = std::min(i, imu.size() - 1);
    step(imu[last], t_end - t);
    poses.emplace_back(t, x.pose());
  }
  if (poses.back().first < t_end - 1e-12) poses.emplace_back(t_end, x.pose());

  // Keep only the scan interval plus the sample just before it.
  std::vector<std::pair<double, Pose>> window;
  for (size_t k = 0; k < poses.size(); ++k) {
    const bool last_before =
        poses[k].first < table_start &&
        (k + 1 >= poses.size() || poses[k + 1].first >= table_start);
    if (poses[k].first >= table_start || last_before) {
      if (!window.empty() && poses[k].first <= window.back().first) continue;
      window.push_back(poses[k]);
    }
  }

  return PropagationResult{x, P, RelativePoseTable::from_global_poses(window)};
}

/// Interpolated poses at a scan's distinct point-time offsets. Spinning
/// sensors reuse one timestamp per column, so this collapses per-point
/// geodesic interpolation into at most `width` evaluations per frame.
class ScanPoseCache {
 public:
  ScanPoseCache() = default;

  ScanPoseCache(const LidarScan& scan, const RelativePoseTable& table) {
    offsets_.reserve(scan.width);
    for (const auto& p : scan.points) offsets_.push_back(p.t_offset_ns);
    std::sort(offsets_.begin(), offsets_.end());
    offsets_.erase(std::unique(offsets_.begin(), offsets_.end()),
                   offsets_.end());
    poses_.reserve(offsets_.size());
    inverse_poses_.reserve(offsets_.size());
    for (const uint32_t off : offsets_) {
      const Pose T = table.interpolate(scan.t_start + off * 1e-9);
      poses_.push_back(T);
      inverse_poses_.push_back(T.inverse());
    }
  }

  /// T_IkIj at the nearest cached offset.
  const Pose& at_offset(uint32_t t_offset_ns) const {
    return poses_[index_of(t_offset_ns)];
  }

  const Pose& inverse_at_offset(uint32_t t_offset_ns) const {
    return inverse_poses_[index_of(t_offset_ns)];
  }

  bool empty() const { return offsets_.empty(); }

 private:
  size_t index_of(uint32_t t_offset_ns) const {
    const auto it =
        std::lower_bound(offsets_.begin(), offsets_.end(), t_offset_ns);
    if (it == offsets_.end()) return offsets_.size() - 1;
    if (it == offsets_.begin()) return 0;
    const size_t hi = it - offsets_.begin();
    return (*it - t_offset_ns) <= (t_offset_ns - offsets_[hi - 1]) ? hi
                                                                   : hi - 1;
  }

  std::vector<uint32_t> offsets_;
  std::vector<Pose> poses_;
  std::vector<Pose> inverse_poses_;
};

/// Re-expresses every point in the LiDAR frame at the table end time:
/// p_k = T_IL^-1 * T_IkIj * T_IL * p_j. Order, intensity, ring preserved.
inline LidarScan undistort_scan(const LidarScan& scan,
                                const RelativePoseTable& table,
                                const Pose& T_IL) {
  LidarScan out = scan;
  const Pose T_LI = T_IL.inverse();
  const ScanPoseCache cache(scan, table);
  for (size_t i = 0; i < out.points.size(); ++i) {
    const Pose& T_IkIj = cache.at_offset(scan.points[i].t_offset_ns);
    out.points[i].position = T_LI * (T_IkIj * (T_IL * scan.points[i].position));
  }
  return out;
}

/// Gravity and gyro bias from an assumed-static sample prefix.
struct GravityInit {
  Vec3 gravity;
  Vec3 gyro_bias;
  int samples_used;
};

inline GravityInit initialize_gravity(std::span<const ImuSample> imu,
                                      const ImuConfig& cfg) {
  if (imu.empty()) throw std::invalid_argument("initialize_gravity: no samples");
  const double t0 = imu.front().t;
  Vec3 acc_sum = Vec3::Zero(), gyro_sum = Vec3::Zero();
  int n = 0;
  for (const auto& s : imu) {
    if (s.t - t0 > cfg.init_duration && n > 0) break;
    acc_sum += s.acc;
    gyro_sum += s.gyro;
    ++n;
  }
  const Vec3 acc_mean = acc_sum / n;
  if (acc_mean.norm() < 1e-6) {
    throw std::runtime_error("initialize_gravity: zero mean acceleration");
  }
  return GravityInit{-acc_mean.normalized() * cfg.gravity_magnitude,
                     gyro_sum / n, n};
}

}  // namespace ilio
