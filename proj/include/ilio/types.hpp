#pragma once

#include "ilio/math.hpp"

#include <cstdint>
#include <vector>

namespace ilio {

struct LidarPoint {
  Vec3 position{Vec3::Zero()};  // sensor frame, m
  float intensity = 0.0f;       // raw sensor units
  float reflectivity = 0.0f;    // raw sensor units
  uint32_t t_offset_ns = 0;     // from scan start
  uint16_t ring = 0;            // beam index, 0..h-1
};

/// Points of one full revolution. width/height mirror the sensor grid.
struct LidarScan {
  double t_start = 0.0;  // s
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<LidarPoint> points;

  double point_time(size_t i) const {
    return t_start + points[i].t_offset_ns * 1e-9;
  }

  /// Scan reference time t_k: the maximum point timestamp.
  double t_end() const {
    uint32_t max_off = 0;
    for (const auto& p : points) max_off = std::max(max_off, p.t_offset_ns);
    return t_start + max_off * 1e-9;
  }
};

struct ImuSample {
  double t = 0.0;            // s
  Vec3 acc{Vec3::Zero()};    // m/s^2, body frame
  Vec3 gyro{Vec3::Zero()};   // rad/s, body frame
};

struct TrajectorySample {
  double t = 0.0;
  Pose pose;
};

using Trajectory = std::vector<TrajectorySample>;

}  // namespace ilio
