#pragma once

#include "ilio/fusion.hpp"

#include <random>

namespace ilio {

struct JacobianCheckResult {
  double max_rel_error = 0.0;
  int trials = 0;
};

namespace detail {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec3 v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6) v = Vec3(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline Quat random_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0.0, max_angle);
  return exp_so3(random_unit(rng) * u(rng));
}

inline double wrap_diff(double d, double period) {
  d = std::fmod(d, period);
  if (d > 0.5 * period) d -= period;
  if (d < -0.5 * period) d += period;
  return d;
}

// Double-precision bilinear sample; the production float path quantizes
// below the finite-difference step.
inline double sample_bilinear_d(const ImageF& img, double u, double v) {
  const int v0 = std::clamp(static_cast<int>(v), 0, img.rows() - 2);
  const int v1 = v0 + 1;
  const int u0 = static_cast<int>(std::floor(u));
  const double fu = u - u0, fv = v - v0;
  const int w = img.cols();
  const int c0 = ((u0 % w) + w) % w;
  const int c1 = ((u0 + 1) % w + w) % w;
  const double top = (1.0 - fu) * img(v0, c0) + fu * img(v0, c1);
  const double bot = (1.0 - fu) * img(v1, c0) + fu * img(v1, c1);
  return (1.0 - fv) * top + fv * bot;
}

}  // namespace detail

/// Central finite differences of the ideal projection against the closed
/// form, random points; returns the worst per-trial relative error.
inline JacobianCheckResult check_projection_jacobian(
    const ProjectionModel& model, int trials, uint64_t seed,
    double step = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> range_dist(0.5, 50.0);
  JacobianCheckResult result;
  result.trials = trials;
  for (int k = 0; k < trials; ++k) {
    Vec3 p = detail::random_unit(rng) * range_dist(rng);
    if (std::hypot(p.x(), p.y()) - model.emitter_offset < 0.1) {
      --k;
      continue;
    }
    const auto J = projection_jacobian(model, p);
    Eigen::Matrix<double, 2, 3> J_fd;
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = Vec3::Zero();
      dp[a] = step;
      const Vec2 hi = project_point(model, p + dp);
      const Vec2 lo = project_point(model, p - dp);
      J_fd(0, a) = detail::wrap_diff(hi.x() - lo.x(), model.width) / (2.0 * step);
      J_fd(1, a) = (hi.y() - lo.y()) / (2.0 * step);
    }
    const double scale = std::max(J.cwiseAbs().maxCoeff(), 1e-9);
    const double err = (J_fd - J).cwiseAbs().maxCoeff() / scale;
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  return result;
}

/// Point-to-plane rows against boxplus finite differences at random
/// states, planes, and points.
inline JacobianCheckResult check_geometric_jacobian(int trials, uint64_t seed,
                                                    double step = 1e-6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> range_dist(1.0, 30.0);
  JacobianCheckResult result;
  result.trials = trials;
  for (int k = 0; k < trials; ++k) {
    NavState x;
    x.R_GI = detail::random_rotation(rng, 0.8);
    x.p_GI = Vec3(g(rng), g(rng), g(rng)) * 5.0;
    const Pose T_IL{detail::random_rotation(rng, 0.1),
                    Vec3(g(rng), g(rng), g(rng)) * 0.05};

    GeoCorrespondence corr;
    corr.p_L = detail::random_unit(rng) * range_dist(rng);
    corr.normal = detail::random_unit(rng);
    corr.centroid =
        x.pose() * (T_IL * corr.p_L) + Vec3(g(rng), g(rng), g(rng)) * 0.1;

    const std::vector<GeoCorrespondence> corrs{corr};
    const ResidualBlock block = point_to_plane_residuals(corrs, x, T_IL);

    JacobianRow row_fd = JacobianRow::Zero();
    for (int a = 0; a < kErrDim; ++a) {
      ErrorVec d = ErrorVec::Zero();
      d[a] = step;
      const ResidualBlock hi =
          point_to_plane_residuals(corrs, boxplus(x, d), T_IL);
      const ResidualBlock lo =
          point_to_plane_residuals(corrs, boxplus(x, -d), T_IL);
      row_fd[a] = (hi.z[0] - lo.z[0]) / (2.0 * step);
    }
    const double scale = std::max(block.H[0].cwiseAbs().maxCoeff(), 1e-9);
    const double err = (row_fd - block.H[0]).cwiseAbs().maxCoeff() / scale;
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  return result;
}

/// Photometric chain (image gradient x projection x point/state) against
/// boxplus finite differences. The intensity field is linear per trial so
/// bilinear interpolation is exact and the check isolates the chain.
inline JacobianCheckResult check_photometric_jacobian(int trials,
                                                      uint64_t seed,
                                                      double step = 1e-6) {
  const ProjectionModel model = ProjectionModel::uniform(256, 64, M_PI / 2.0);
  const int h = model.height, w = model.width;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> range_dist(3.0, 20.0);
  std::uniform_real_distribution<double> grad_dist(-8.0, 8.0);

  MaskImage mask(h, w, 1);
  JacobianCheckResult result;
  result.trials = trials;

  for (int k = 0; k < trials; ++k) {
    // Fresh linear intensity field.
    const double base = 120.0 + 20.0 * g(rng);
    const double bu = grad_dist(rng);
    const double bv = grad_dist(rng);
    ImageF img(h, w, 0.0f);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        img(r, c) = static_cast<float>(base + bu * c + bv * r);
      }
    }
    const GradientImages gradients = central_gradients(img, mask);

    NavState x;
    x.R_GI = detail::random_rotation(rng, 0.5);
    x.p_GI = Vec3(g(rng), g(rng), g(rng)) * 2.0;
    const Pose T_IL{detail::random_rotation(rng, 0.05),
                    Vec3(g(rng), g(rng), g(rng)) * 0.05};
    const Pose T_IkIj{detail::random_rotation(rng, 0.02),
                      Vec3(g(rng), g(rng), g(rng)) * 0.05};

    // Feature in front of the sensor, away from the seam and borders.
    Vec3 p_Lj;
    Vec2 pixel;
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      Vec3 dir = detail::random_unit(rng);
      dir.x() = std::abs(dir.x()) + 0.4;
      dir.normalize();
      p_Lj = dir * range_dist(rng);
      const auto uv = project_to_image(model, p_Lj);
      if (!uv) continue;
      if (uv->x() < 4.0 || uv->x() > w - 5.0 || uv->y() < 4.0 ||
          uv->y() > h - 5.0) {
        continue;
      }
      pixel = *uv;
      ok = true;
    }
    if (!ok) {
      --k;
      continue;
    }

    // Global landmark consistent with the chosen distorted-frame position.
    const Pose T_LI = T_IL.inverse();
    const Vec3 p_global = x.pose() * (T_IkIj * (T_IL * p_Lj));

    FeatureFrameContext ctx;
    ctx.model = &model;
    ctx.filtered = &img;
    ctx.filtered_mask = &mask;
    ctx.gradients = &gradients;
    ctx.T_GIk = x.pose();
    ctx.T_IL = T_IL;

    FeatureProjection proj;
    proj.p_Lj = p_Lj;
    proj.pixel = pixel;
    proj.t_j = 0.0;
    proj.index = 0;
    proj.rot_prefix =
        (T_LI.rotation * T_IkIj.rotation.conjugate()).toRotationMatrix();

    const auto row = photometric_jacobian(ctx, proj, p_global);
    if (!row) {
      --k;
      continue;
    }

    // Residual with the relative motion T_IkIj held fixed, as in the chain.
    auto residual = [&](const NavState& xi) -> double {
      const Vec3 p_Ik = xi.pose().inverse() * p_global;
      const Vec3 pl = T_LI * (T_IkIj.inverse() * p_Ik);
      const auto uv = project_to_image(model, pl);
      if (!uv) throw std::runtime_error("left image");
      return detail::sample_bilinear_d(img, uv->x(), uv->y());
    };

    JacobianRow row_fd = JacobianRow::Zero();
    for (int a = 0; a < kErrDim; ++a) {
      ErrorVec d = ErrorVec::Zero();
      d[a] = step;
      row_fd[a] =
          (residual(boxplus(x, d)) - residual(boxplus(x, -d))) / (2.0 * step);
    }
    const double scale = std::max(row->cwiseAbs().maxCoeff(), 1e-9);
    const double err = (row_fd - *row).cwiseAbs().maxCoeff() / scale;
    result.max_rel_error = std::max(result.max_rel_error, err);
  }
  return result;
}

}  // namespace ilio
