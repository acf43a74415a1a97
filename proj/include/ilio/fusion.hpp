#pragma once

#include "ilio/features.hpp"
#include "ilio/map.hpp"

#include <Eigen/Cholesky>

#include <functional>

namespace ilio {

struct FusionConfig {
  double lambda = 0.05;        // photometric scaling on H rows and z
  double sigma = 1.0;          // measurement noise, R = sigma * I
  double scan_voxel = 0.5;     // m, input downsampling
  double map_voxel = 0.5;      // m
  int map_cap_per_voxel = 20;
  double map_horizon = 300.0;  // m
  int knn = 5;
  double plane_tolerance = 0.1;  // m, max neighbor distance to the fit
  int max_iterations = 5;
  double convergence_delta = 1e-4;
  bool photometric = true;
};

/// Plane correspondence fixed for the frame; the plane comes from the map,
/// the point is re-evaluated at each filter iterate.
struct GeoCorrespondence {
  Vec3 p_L;       // undistorted LiDAR frame at t_k
  Vec3 normal;    // global, unit
  Vec3 centroid;  // global, on the plane
};

struct PlaneFit {
  Vec3 normal;
  Vec3 centroid;
};

/// Orthogonal least-squares plane through the neighbors; empty when any
/// neighbor sits farther than tol from the fit.
inline std::optional<PlaneFit> fit_plane(std::span<const MapPoint> pts,
                                         double tol) {
  if (pts.size() < 3) return std::nullopt;
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p.position;
  centroid /= static_cast<double>(pts.size());
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p.position - centroid;
    scatter.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  const Vec3 normal = eig.eigenvectors().col(0);
  for (const auto& p : pts) {
    if (std::abs(normal.dot(p.position - centroid)) > tol) return std::nullopt;
  }
  return PlaneFit{normal, centroid};
}

/// Deterministic voxel downsampling: keeps the point closest to each voxel
/// center, independent of input order.
inline std::vector<Vec3> voxel_downsample(const LidarScan& scan, double voxel) {
  struct Best {
    double d2;
    Vec3 p;
  };
  std::unordered_map<LocalMap::Key, Best, LocalMap::KeyHash> cells;
  for (const auto& pt : scan.points) {
    if (!pt.position.allFinite() || pt.position.squaredNorm() < 1e-12) continue;
    const LocalMap::Key key{
        static_cast<int32_t>(std::floor(pt.position.x() / voxel)),
        static_cast<int32_t>(std::floor(pt.position.y() / voxel)),
        static_cast<int32_t>(std::floor(pt.position.z() / voxel))};
    const Vec3 center((key.x + 0.5) * voxel, (key.y + 0.5) * voxel,
                      (key.z + 0.5) * voxel);
    const double d2 = (pt.position - center).squaredNorm();
    auto [it, inserted] = cells.try_emplace(key, Best{d2, pt.position});
    if (!inserted && d2 < it->second.d2) it->second = Best{d2, pt.position};
  }
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [k, b] : cells) out.push_back(b.p);
  // Hash order is nondeterministic across platforms; fix the order.
  std::sort(out.begin(), out.end(), [](const Vec3& a, const Vec3& b) {
    return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
  });
  return out;
}

/// k-NN plane correspondences for the downsampled points at the given pose.
inline std::vector<GeoCorrespondence> find_plane_correspondences(
    std::span<const Vec3> points_L, const LocalMap& map, const Pose& T_GL,
    const FusionConfig& cfg) {
  std::vector<GeoCorrespondence> out;
  out.reserve(points_L.size());
  std::vector<std::pair<double, const MapPoint*>> scratch;
  std::vector<MapPoint> neighbors;
  for (const Vec3& p_L : points_L) {
    const Vec3 p_G = T_GL * p_L;
    map.knn_into(p_G, cfg.knn, scratch, neighbors);
    if (static_cast<int>(neighbors.size()) < cfg.knn) continue;
    const auto plane = fit_plane(neighbors, cfg.plane_tolerance);
    if (!plane) continue;
    out.push_back(GeoCorrespondence{p_L, plane->normal, plane->centroid});
  }
  return out;
}

using JacobianRow = Eigen::Matrix<double, 1, kErrDim>;

struct ResidualBlock {
  std::vector<double> z;
  std::vector<JacobianRow> H;
};

/// Point-to-plane residuals and rows at the given iterate:
///   z = n^T (T_GI * T_IL * p_L - q),  d z / d(dtheta) = -n^T R [a]x,
///   d z / d(dp) = n^T  with a = T_IL * p_L.
inline ResidualBlock point_to_plane_residuals(
    std::span<const GeoCorrespondence> corrs, const NavState& x,
    const Pose& T_IL) {
  ResidualBlock block;
  block.z.reserve(corrs.size());
  block.H.reserve(corrs.size());
  const Mat3 R = x.R_GI.toRotationMatrix();
  for (const auto& c : corrs) {
    const Vec3 a = T_IL * c.p_L;
    const Vec3 p_G = x.R_GI * a + x.p_GI;
    JacobianRow row = JacobianRow::Zero();
    row.segment<3>(kErrTheta) = -c.normal.transpose() * R * skew(a);
    row.segment<3>(kErrPos) = c.normal.transpose();
    block.z.push_back(c.normal.dot(p_G - c.centroid));
    block.H.push_back(row);
  }
  return block;
}

/// Photometric residual of one tracked point (Eq. image-minus-reference):
/// bilinear sample of the filtered image at the feature's distorted-frame
/// projection, minus the stored reference.
inline std::optional<double> photometric_residual(
    const FeatureFrameContext& ctx, const FeatureProjection& proj,
    float ref_intensity) {
  const auto value = sample_bilinear(*ctx.filtered, *ctx.filtered_mask,
                                     proj.pixel.x(), proj.pixel.y());
  if (!value) return std::nullopt;
  return static_cast<double>(*value) - static_cast<double>(ref_intensity);
}

/// Chain rule for one photometric row: image gradient (1x2) x projection
/// Jacobian (2x3) x point-vs-error-state (3x18). The velocity, bias, and
/// gravity blocks are exactly zero.
inline std::optional<JacobianRow> photometric_jacobian(
    const FeatureFrameContext& ctx, const FeatureProjection& proj,
    const Vec3& p_global) {
  const auto gu = sample_bilinear(ctx.gradients->du, ctx.gradients->valid,
                                  proj.pixel.x(), proj.pixel.y());
  const auto gv = sample_bilinear(ctx.gradients->dv, ctx.gradients->valid,
                                  proj.pixel.x(), proj.pixel.y());
  if (!gu || !gv) return std::nullopt;
  Eigen::Matrix<double, 1, 2> img_grad;
  img_grad << *gu, *gv;

  Eigen::Matrix<double, 2, 3> proj_jac;
  try {
    proj_jac = projection_jacobian(*ctx.model, proj.p_Lj);
  } catch (const std::domain_error&) {
    return std::nullopt;
  }

  const Mat3 R_IG = ctx.T_GIk.rotation.conjugate().toRotationMatrix();
  Eigen::Matrix<double, 3, kErrDim> point_jac =
      Eigen::Matrix<double, 3, kErrDim>::Zero();
  point_jac.block<3, 3>(0, kErrTheta) =
      proj.rot_prefix * skew(R_IG * (p_global - ctx.T_GIk.translation));
  point_jac.block<3, 3>(0, kErrPos) = proj.rot_prefix * (-R_IG);

  JacobianRow row = img_grad * proj_jac * point_jac;
  return row;
}

/// Photometric rows for all entries of all tracked features at the given
/// iterate. Entries that miss the undistortion map or lose image support
/// are excluded.
inline ResidualBlock photometric_rows(const FeatureFrameContext& ctx,
                                      std::span<const FeaturePatch> features) {
  ResidualBlock block;
  for (const auto& patch : features) {
    for (const auto& entry : patch.entries) {
      const auto proj = transform_feature_to_distorted(ctx, entry.position_global);
      if (!proj) continue;
      const auto z = photometric_residual(ctx, *proj, entry.ref_intensity);
      if (!z) continue;
      const auto row = photometric_jacobian(ctx, *proj, entry.position_global);
      if (!row) continue;
      block.z.push_back(*z);
      block.H.push_back(*row);
    }
  }
  return block;
}

/// Stacked measurement system; photometric rows and residuals carry the
/// factor lambda exactly once.
struct StackedSystem {
  Eigen::MatrixXd H;
  Eigen::VectorXd z;
  double sigma = 1.0;
  int geo_rows = 0;
  int pho_rows = 0;

  bool empty() const { return H.rows() == 0; }
};

inline StackedSystem stack_system(const ResidualBlock& geo,
                                  const ResidualBlock& pho, double lambda,
                                  double sigma) {
  StackedSystem sys;
  sys.sigma = sigma;
  sys.geo_rows = static_cast<int>(geo.z.size());
  sys.pho_rows = static_cast<int>(pho.z.size());
  const int m = sys.geo_rows + sys.pho_rows;
  sys.H.resize(m, kErrDim);
  sys.z.resize(m);
  for (int i = 0; i < sys.geo_rows; ++i) {
    sys.H.row(i) = geo.H[i];
    sys.z(i) = geo.z[i];
  }
  for (int i = 0; i < sys.pho_rows; ++i) {
    sys.H.row(sys.geo_rows + i) = lambda * pho.H[i];
    sys.z(sys.geo_rows + i) = lambda * pho.z[i];
  }
  return sys;
}

struct UpdateResult {
  NavState state;
  ErrorCovariance covariance;
  int iterations = 0;
  bool updated = false;   // false: empty system, prediction published
  bool rejected = false;  // non-finite update, rolled back
  double final_delta = 0.0;
};

/// Iterated EKF update: K = (H^T R^-1 H + P^-1)^-1 H^T R^-1 and
///   x <- x boxplus ( -K z - (I - K H) (J^k)^-1 (x boxminus x_pred) ),
/// re-linearizing through the provided builder until the increment drops
/// below the threshold. Covariance becomes (I - K H) P at convergence.
inline UpdateResult iekf_update(
    const NavState& predicted, const ErrorCovariance& P_pred,
    const std::function<StackedSystem(const NavState&)>& build,
    const FusionConfig& cfg) {
  UpdateResult result{predicted, P_pred, 0, false, false, 0.0};
  NavState x = predicted;

  Eigen::LDLT<ErrorCovariance> P_inv_solver(P_pred);
  if (P_inv_solver.info() != Eigen::Success) {
    result.rejected = true;
    return result;
  }

  Eigen::MatrixXd H_last;
  Eigen::MatrixXd K_last;
  bool have_system = false;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const StackedSystem sys = build(x);
    if (sys.empty()) break;

    const ErrorVec prior_err = boxminus(x, predicted);
    ErrorCovariance J_inv = ErrorCovariance::Identity();
    J_inv.block<3, 3>(kErrTheta, kErrTheta) =
        right_jacobian_so3(prior_err.segment<3>(kErrTheta));

    const Eigen::MatrixXd Ht_Rinv = sys.H.transpose() / sys.sigma;
    const ErrorCovariance info =
        Ht_Rinv * sys.H + P_inv_solver.solve(ErrorCovariance::Identity());
    const Eigen::LDLT<ErrorCovariance> info_solver(info);
    const Eigen::MatrixXd K = info_solver.solve(Ht_Rinv);

    const ErrorVec pullback = J_inv * prior_err;
    const ErrorVec delta =
        -K * sys.z - (ErrorCovariance::Identity() - K * sys.H) * pullback;

    if (!delta.allFinite()) {
      result.rejected = true;
      result.state = predicted;
      result.covariance = P_pred;
      return result;
    }

    x = boxplus(x, delta);
    H_last = sys.H;
    K_last = K;
    have_system = true;
    result.iterations = iter + 1;
    result.final_delta = delta.norm();
    if (result.final_delta < cfg.convergence_delta) break;
  }

  if (!have_system) return result;  // prediction published unchanged

  result.state = x;
  ErrorCovariance P_post =
      (ErrorCovariance::Identity() - K_last * H_last) * P_pred;
  symmetrize(P_post);
  if (!P_post.allFinite() || !boxminus(x, predicted).allFinite()) {
    result.rejected = true;
    result.state = predicted;
    result.covariance = P_pred;
    return result;
  }
  result.covariance = P_post;
  result.updated = true;
  return result;
}

/// Inserts the scan into the map at the posterior pose and evicts cells
/// beyond the horizon.
inline void map_insert(LocalMap& map, std::span<const Vec3> points_L,
                       const Pose& T_GL, double horizon) {
  for (const Vec3& p : points_L) {
    map.insert(T_GL * p);
  }
  map.evict_beyond(T_GL.translation, horizon);
}

}  // namespace ilio
