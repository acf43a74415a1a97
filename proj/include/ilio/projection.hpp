#pragma once

#include "ilio/math.hpp"

#include <optional>
#include <vector>

namespace ilio {

/// Spherical projection of a spinning multi-beam sensor:
///   u = f_x * atan2(y, x) + c_x,  v = f_y * asin(z / R) + c_y
/// with L = sqrt(x^2 + y^2) - r and R = sqrt(L^2 + z^2); f_x, f_y are
/// negative so u grows clockwise and v grows downward.
struct ProjectionModel {
  int width = 1024;
  int height = 128;
  double vertical_fov = M_PI / 2.0;  // rad
  double emitter_offset = 0.015;     // r, m
  double u_offset = 0.0;             // constant horizontal pixel offset
  std::vector<double> beam_elevations;  // rad, one per row, strictly monotone
  bool uniform_beams = true;  // row k at (k - c_y)/f_y; enables closed-form rows

  double fx() const { return -width / (2.0 * M_PI); }
  double fy() const { return -height / vertical_fov; }
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }

  /// Uniform beam table consistent with the ideal projection, row k at
  /// elevation (k - c_y) / f_y.
  static ProjectionModel uniform(int w, int h, double fov, double r = 0.0,
                                 double u_off = 0.0) {
    ProjectionModel m;
    m.width = w;
    m.height = h;
    m.vertical_fov = fov;
    m.emitter_offset = r;
    m.u_offset = u_off;
    m.beam_elevations.resize(h);
    for (int k = 0; k < h; ++k) {
      m.beam_elevations[k] = (k - m.cy()) / m.fy();
    }
    m.uniform_beams = true;
    return m;
  }
};

inline double wrap_column(double u, int width) {
  if (u >= 0.0 && u < width) return u;                // common case
  if (u >= width && u < 2.0 * width) return u - width;
  if (u < 0.0 && u >= -width) return u + width;
  u = std::fmod(u, static_cast<double>(width));
  if (u < 0.0) u += width;
  return u;
}

/// Ideal projection of a sensor-frame point, u wrapped into [0, w).
/// Throws if the point lies inside the emitter ring (L <= 1e-6).
inline Vec2 project_point(const ProjectionModel& m, const Vec3& p) {
  const double L = std::sqrt(p.x() * p.x() + p.y() * p.y()) - m.emitter_offset;
  if (L <= 1e-6) {
    throw std::domain_error("project_point: point inside emitter ring");
  }
  const double R = std::sqrt(L * L + p.z() * p.z());
  const double u = m.fx() * std::atan2(p.y(), p.x()) + m.cx();
  const double v = m.fy() * std::asin(p.z() / R) + m.cy();
  return {wrap_column(u, m.width), v};
}

/// d(u,v)/dp of the ideal projection.
inline Eigen::Matrix<double, 2, 3> projection_jacobian(
    const ProjectionModel& m, const Vec3& p) {
  const double x = p.x(), y = p.y(), z = p.z();
  const double xy2 = x * x + y * y;
  const double L = std::sqrt(xy2) - m.emitter_offset;
  const double R2 = L * L + z * z;
  if (L <= 1e-6 || R2 <= 1e-12) {
    throw std::domain_error("projection_jacobian: degenerate geometry");
  }
  Eigen::Matrix<double, 2, 3> J;
  J(0, 0) = -m.fx() * y / xy2;
  J(0, 1) = m.fx() * x / xy2;
  J(0, 2) = 0.0;
  J(1, 0) = -m.fy() * x * z / (L * R2);
  J(1, 1) = -m.fy() * y * z / (L * R2);
  J(1, 2) = m.fy() * L / R2;
  return J;
}

/// Elevation angle of a sensor-frame point w.r.t. the emitter geometry.
inline double point_elevation(const ProjectionModel& m, const Vec3& p) {
  const double L = std::sqrt(p.x() * p.x() + p.y() * p.y()) - m.emitter_offset;
  const double R = std::sqrt(L * L + p.z() * p.z());
  return std::asin(p.z() / R);
}

/// Subpixel row by linear interpolation between the bracketing beams.
/// Throws if the elevation leaves the vertical field of view.
inline double subpixel_row_from_elevation(const ProjectionModel& m,
                                          double elevation) {
  const auto& th = m.beam_elevations;
  const bool decreasing = th.front() > th.back();
  const double lo = decreasing ? th.back() : th.front();
  const double hi = decreasing ? th.front() : th.back();
  if (elevation < lo || elevation > hi) {
    throw std::domain_error("subpixel_row_from_elevation: outside beam table");
  }
  // Binary search for the bracketing beam pair (table strictly monotone).
  size_t a = 0, b = th.size() - 1;
  while (b - a > 1) {
    const size_t mid = (a + b) / 2;
    const bool go_low = decreasing ? (elevation > th[mid]) : (elevation < th[mid]);
    if (go_low) {
      b = mid;
    } else {
      a = mid;
    }
  }
  if (std::abs(th[b] - th[a]) < 1e-15) return static_cast<double>(a);
  return a + (elevation - th[a]) / (th[b] - th[a]);
}

/// Projection into the sensor image: azimuth column with the constant
/// horizontal offset, row from the beam-elevation table. Empty when the
/// point leaves the vertical field of view or degenerates.
inline std::optional<Vec2> project_to_image(const ProjectionModel& m,
                                            const Vec3& p) {
  const double L = std::sqrt(p.x() * p.x() + p.y() * p.y()) - m.emitter_offset;
  if (L <= 1e-6) return std::nullopt;
  const double u =
      wrap_column(m.fx() * std::atan2(p.y(), p.x()) + m.cx() + m.u_offset,
                  m.width);
  const double elev = std::asin(p.z() / std::sqrt(L * L + p.z() * p.z()));
  if (m.uniform_beams) {  // closed-form row, identical to the table lookup
    const double v = m.fy() * elev + m.cy();
    if (v < 0.0 || v > m.height - 1) return std::nullopt;
    return Vec2{u, v};
  }
  const auto& th = m.beam_elevations;
  const double lo = std::min(th.front(), th.back());
  const double hi = std::max(th.front(), th.back());
  if (elev < lo || elev > hi) return std::nullopt;
  return Vec2{u, subpixel_row_from_elevation(m, elev)};
}

/// Inverse of project_to_image along a known range (sensor-to-point
/// distance measured from the emitter, i.e. R in the projection).
inline Vec3 unproject(const ProjectionModel& m, double u, double v,
                      double range) {
  const auto& th = m.beam_elevations;
  const int k0 = std::clamp(static_cast<int>(std::floor(v)), 0,
                            static_cast<int>(th.size()) - 1);
  const int k1 = std::min<int>(k0 + 1, th.size() - 1);
  const double frac = v - k0;
  const double elev = th[k0] + (k1 > k0 ? frac * (th[k1] - th[k0]) : 0.0);
  const double phi = (u - m.cx() - m.u_offset) / m.fx();
  const double L = range * std::cos(elev);
  const double z = range * std::sin(elev);
  const double s = L + m.emitter_offset;
  return {s * std::cos(phi), s * std::sin(phi), z};
}

/// Range as seen by the projection model (distance from the emitter ring).
inline double point_range(const ProjectionModel& m, const Vec3& p) {
  const double L = std::sqrt(p.x() * p.x() + p.y() * p.y()) - m.emitter_offset;
  return std::sqrt(L * L + p.z() * p.z());
}

}  // namespace ilio
