#pragma once

#include "ilio/image.hpp"
#include "ilio/projection.hpp"
#include "ilio/types.hpp"

namespace ilio {

/// Per-pixel channels of one scan on the (beam, encoder) grid. index maps
/// each valid pixel back to the point it was built from.
struct ScanImage {
  ImageF intensity;
  ImageF reflectivity;
  ImageF range;  // emitter-to-point distance, m
  IndexImage index;
  MaskImage valid;
  int skipped = 0;  // points with invalid ring/geometry

  ScanImage() = default;
  ScanImage(int h, int w)
      : intensity(h, w, 0.0f),
        reflectivity(h, w, 0.0f),
        range(h, w, 0.0f),
        index(h, w, kEmptyPixel),
        valid(h, w, 0) {}
};

/// Sensor image from the raw scan: row = ring, column = encoder azimuth.
/// Pixel collisions keep the nearer point, then the lower index.
inline ScanImage build_images(const ProjectionModel& m, const LidarScan& scan) {
  ScanImage img(m.height, m.width);
  for (size_t i = 0; i < scan.points.size(); ++i) {
    const LidarPoint& pt = scan.points[i];
    if (pt.ring >= m.height || !pt.position.allFinite()) {
      ++img.skipped;
      continue;
    }
    const double r = point_range(m, pt.position);
    if (!(r > 1e-6)) {
      ++img.skipped;
      continue;
    }
    const double u = m.fx() * std::atan2(pt.position.y(), pt.position.x()) +
                     m.cx() + m.u_offset;
    const int col =
        static_cast<int>(wrap_column(u, m.width) + 0.5) % m.width;
    const int row = pt.ring;
    if (img.valid(row, col)) {
      const float prev = img.range(row, col);
      if (r > prev || (r == prev && img.index(row, col) < static_cast<int32_t>(i))) {
        continue;
      }
    }
    img.intensity(row, col) = pt.intensity;
    img.reflectivity(row, col) = pt.reflectivity;
    img.range(row, col) = static_cast<float>(r);
    img.index(row, col) = static_cast<int32_t>(i);
    img.valid(row, col) = 1;
  }
  return img;
}

/// Pixel -> point-index image from the undistorted cloud; used to recover
/// each feature's measurement time by projection instead of a tree search.
inline IndexImage build_undistortion_map(const ProjectionModel& m,
                                         const LidarScan& undistorted) {
  IndexImage map(m.height, m.width, kEmptyPixel);
  ImageF best_range(m.height, m.width, 0.0f);
  for (size_t i = 0; i < undistorted.points.size(); ++i) {
    const Vec3& p = undistorted.points[i].position;
    if (!p.allFinite()) continue;
    const auto uv = project_to_image(m, p);
    if (!uv) continue;
    const int col = static_cast<int>(uv->x() + 0.5) % m.width;
    const int row = std::clamp(static_cast<int>(uv->y() + 0.5), 0,
                               m.height - 1);
    const float r = static_cast<float>(point_range(m, p));
    const int32_t prev = map(row, col);
    if (prev != kEmptyPixel &&
        (best_range(row, col) < r ||
         (best_range(row, col) == r && prev < static_cast<int32_t>(i)))) {
      continue;
    }
    map(row, col) = static_cast<int32_t>(i);
    best_range(row, col) = r;
  }
  return map;
}

/// Stored index at (u, v); falls back to a 3x3 neighborhood, horizontal
/// wrap. Empty result means the feature is skipped this frame.
inline std::optional<int32_t> lookup_undistortion_index(const IndexImage& map,
                                                        double u, double v) {
  const int h = map.rows(), w = map.cols();
  const int row = static_cast<int>(std::lround(v));
  const int col = static_cast<int>(std::lround(u));
  if (row < 0 || row >= h) return std::nullopt;
  const int c0 = ((col % w) + w) % w;
  if (map(row, c0) != kEmptyPixel) return map(row, c0);
  for (int dr = -1; dr <= 1; ++dr) {
    const int r = row + dr;
    if (r < 0 || r >= h) continue;
    for (int dc = -1; dc <= 1; ++dc) {
      const int c = (c0 + dc + w) % w;
      if (map(r, c) != kEmptyPixel) return map(r, c);
    }
  }
  return std::nullopt;
}

}  // namespace ilio
