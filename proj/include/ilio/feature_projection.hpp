#pragma once

#include "ilio/imu.hpp"
#include "ilio/scan_image.hpp"

namespace ilio {

/// Everything needed to project tracked features into the current frame.
/// All pointers refer to per-frame data owned by the pipeline.
struct FeatureFrameContext {
  const ProjectionModel* model = nullptr;
  const LidarScan* scan = nullptr;        // raw scan (per-point times)
  const ScanImage* sensor_image = nullptr;
  const ImageF* filtered = nullptr;
  const MaskImage* filtered_mask = nullptr;
  const GradientImages* gradients = nullptr;
  const IndexImage* undistortion_map = nullptr;
  const RelativePoseTable* table = nullptr;
  const ScanPoseCache* pose_cache = nullptr;  // optional fast path
  Pose T_GIk;  // IMU pose at scan end (current iterate)
  Pose T_IL;
  double range_gate = 0.4;  // m; slice/feature depth mismatch -> miss
};

/// Feature expressed in the distorted LiDAR frame of its measurement time.
struct FeatureProjection {
  Vec3 p_Lj;        // feature in the LiDAR frame at t_j
  Vec2 pixel;       // projection of p_Lj into the sensor image
  double t_j;       // recovered measurement time, s
  int32_t index;    // undistortion-map point index
  Mat3 rot_prefix;  // R_LI * R_IjIk, the Eq.-(chain) rotation prefix
};

/// Recovers the measurement time of a tracked point through the
/// undistortion map and computes its position in the distorted frame:
///   p_Lj = T_IL^-1 * T_IkIj^-1 * T_GIk^-1 * G_p.
/// One re-projection refinement pass. Empty on a map miss, a projection
/// failure, or a depth-inconsistent slice.
inline std::optional<FeatureProjection> transform_feature_to_distorted(
    const FeatureFrameContext& ctx, const Vec3& p_global) {
  const Pose T_LI = ctx.T_IL.inverse();
  const Vec3 p_Ik = ctx.T_GIk.inverse() * p_global;
  const Vec3 p_Lk = T_LI * p_Ik;

  const auto uv0 = project_to_image(*ctx.model, p_Lk);
  if (!uv0) return std::nullopt;
  auto index = lookup_undistortion_index(*ctx.undistortion_map, uv0->x(), uv0->y());
  if (!index) return std::nullopt;

  FeatureProjection out;
  for (int pass = 0; pass < 2; ++pass) {
    out.index = *index;
    const uint32_t offset = ctx.scan->points[*index].t_offset_ns;
    out.t_j = ctx.scan->t_start + offset * 1e-9;
    const Pose T_IjIk = ctx.pose_cache
                            ? ctx.pose_cache->inverse_at_offset(offset)
                            : ctx.table->interpolate(out.t_j).inverse();
    out.p_Lj = T_LI * (T_IjIk * p_Ik);
    out.rot_prefix = (T_LI.rotation * T_IjIk.rotation).toRotationMatrix();
    const auto uv = project_to_image(*ctx.model, out.p_Lj);
    if (!uv) return std::nullopt;
    out.pixel = *uv;
    if (pass == 0) {
      const auto refined = lookup_undistortion_index(*ctx.undistortion_map,
                                                     uv->x(), uv->y());
      if (!refined || *refined == *index) break;
      index = refined;
    }
  }

  const double slice_range = (*ctx.sensor_image).range(
      std::clamp(static_cast<int>(std::lround(out.pixel.y())), 0,
                 ctx.model->height - 1),
      ((static_cast<int>(std::lround(out.pixel.x())) % ctx.model->width) +
       ctx.model->width) % ctx.model->width);
  const double feature_range = point_range(*ctx.model, out.p_Lj);
  if (slice_range > 0.0 && std::abs(slice_range - feature_range) > ctx.range_gate) {
    return std::nullopt;
  }
  return out;
}

}  // namespace ilio
