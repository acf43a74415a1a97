#pragma once

#include "ilio/degeneracy.hpp"
#include "ilio/feature_projection.hpp"

#include <array>
#include <random>

namespace ilio {

enum class SelectionPolicy { kComplementary, kStrongest, kRandom };

struct FeatureConfig {
  double gradient_threshold = 8.0;   // on the 0-255 filtered image
  int nms_radius = 5;                // px
  int budget_per_direction = 30;
  int max_patches = 150;
  int max_age = 20;                  // frames
  double ncc_threshold = 0.6;
  double occlusion_threshold = 0.4;  // m
  double min_range = 1.0;            // m
  double max_range = 80.0;           // m
  double min_spacing = 7.0;          // px between feature centers
  double isotropy_ratio = 1.5;       // eigenvalue ratio below which a patch
                                     // counts as isotropic
  SelectionPolicy policy = SelectionPolicy::kComplementary;
};

inline constexpr int kPatchRadius = 2;
inline constexpr int kPatchSize = 25;  // fixed 5x5
inline constexpr int kMinPatchSamples = 9;

struct PatchCandidate {
  int u = 0, v = 0;
  double gradient = 0.0;       // Sobel magnitude
  Vec2 v_patch{1.0, 0.0};      // dominant image direction, unit
  bool isotropic = false;
  int32_t point_index = kEmptyPixel;
  double range = 0.0;          // m
  double score = 0.0;          // |c| used for ranking
};

/// Tracked 5x5 patch; every point carries its own global position and
/// reference intensity from the filtered image it was born in.
struct FeaturePatch {
  struct Entry {
    Vec3 position_global;
    float ref_intensity;
  };
  int id = 0;
  std::array<Entry, kPatchSize> entries;
  int birth_frame = 0;
  int frames_tracked = 0;
  double last_ncc = 1.0;
  Vec2 last_pixel{0.0, 0.0};  // center projection in the latest frame
};

namespace detail {

inline double sobel_magnitude(const ImageF& img, const MaskImage& mask, int r,
                              int c) {
  const int h = img.rows(), w = img.cols();
  if (r < 1 || r >= h - 1) return -1.0;
  double gx = 0.0, gy = 0.0;
  static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static constexpr int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  if (c >= 1 && c + 1 < w) {  // interior, no wrap arithmetic
    for (int j = -1; j <= 1; ++j) {
      for (int i = -1; i <= 1; ++i) {
        if (!mask(r + j, c + i)) return -1.0;
        gx += kx[j + 1][i + 1] * img(r + j, c + i);
        gy += ky[j + 1][i + 1] * img(r + j, c + i);
      }
    }
    return 0.25 * std::sqrt(gx * gx + gy * gy);
  }
  for (int j = -1; j <= 1; ++j) {
    for (int i = -1; i <= 1; ++i) {
      const int cc = (c + i + w) % w;
      if (!mask(r + j, cc)) return -1.0;
      gx += kx[j + 1][i + 1] * img(r + j, cc);
      gy += ky[j + 1][i + 1] * img(r + j, cc);
    }
  }
  return 0.25 * std::sqrt(gx * gx + gy * gy);
}

inline double pixel_distance(double u0, double v0, double u1, double v1,
                             int width) {
  double du = std::abs(u0 - u1);
  du = std::min(du, width - du);  // horizontal wrap
  return std::hypot(du, v0 - v1);
}

}  // namespace detail

/// Gradient-magnitude candidates with radius non-maximum suppression;
/// pixels without a fully valid 5x5 neighborhood or outside the range
/// bounds are dropped.
inline std::vector<PatchCandidate> select_candidates(const ImageF& filtered,
                                                     const ScanImage& sensor,
                                                     const FeatureConfig& cfg) {
  const int h = filtered.rows(), w = filtered.cols();
  // Separable Sobel with horizontal wrap; validity = fully valid 3x3.
  ImageF hdiff(h, w), hsmooth(h, w);
  MaskImage row_ok(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int cl = c > 0 ? c - 1 : w - 1;
      const int cr = c + 1 < w ? c + 1 : 0;
      hdiff(r, c) = filtered(r, cr) - filtered(r, cl);
      hsmooth(r, c) = filtered(r, cl) + 2.0f * filtered(r, c) + filtered(r, cr);
      row_ok(r, c) =
          sensor.valid(r, c) && sensor.valid(r, cl) && sensor.valid(r, cr);
    }
  }
  ImageF grad(h, w, -1.0f);
  for (int r = 1; r < h - 1; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!row_ok(r - 1, c) || !row_ok(r, c) || !row_ok(r + 1, c)) continue;
      const float gx = hdiff(r - 1, c) + 2.0f * hdiff(r, c) + hdiff(r + 1, c);
      const float gy = hsmooth(r + 1, c) - hsmooth(r - 1, c);
      grad(r, c) = 0.25f * std::sqrt(gx * gx + gy * gy);
    }
  }

  std::vector<PatchCandidate> out;
  const int rad = cfg.nms_radius;
  for (int r = kPatchRadius; r < h - kPatchRadius; ++r) {
    for (int c = 0; c < w; ++c) {
      const float g = grad(r, c);
      if (g < cfg.gradient_threshold) continue;
      // Radius NMS: any strictly stronger neighbor suppresses; equal-value
      // plateaus survive and are thinned by the spacing rule later.
      bool is_max = true;
      for (int dr = -rad; dr <= rad && is_max; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (int dc = -rad; dc <= rad; ++dc) {
          if (dr * dr + dc * dc > rad * rad || (dr == 0 && dc == 0)) continue;
          const int cc = (c + dc + w) % w;
          if (grad(rr, cc) > g) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      // Full 5x5 support with valid ranges.
      bool patch_ok = true;
      for (int dr = -kPatchRadius; dr <= kPatchRadius && patch_ok; ++dr) {
        for (int dc = -kPatchRadius; dc <= kPatchRadius; ++dc) {
          const int cc = (c + dc + w) % w;
          if (!sensor.valid(r + dr, cc)) {
            patch_ok = false;
            break;
          }
        }
      }
      if (!patch_ok) continue;
      const double range = sensor.range(r, c);
      if (range < cfg.min_range || range > cfg.max_range) continue;
      PatchCandidate cand;
      cand.u = c;
      cand.v = r;
      cand.gradient = g;
      cand.point_index = sensor.index(r, c);
      cand.range = range;
      out.push_back(cand);
    }
  }
  return out;
}

/// Strongest eigenvector of the second image moment (structure tensor)
/// over the 5x5 patch; sign canonicalized, flagged isotropic when the
/// eigenvalue ratio is below the configured bound. Empty on zero gradient.
inline std::optional<std::pair<Vec2, bool>> patch_dominant_direction(
    const GradientImages& g, int u, int v, double isotropy_ratio) {
  const int h = g.du.rows(), w = g.du.cols();
  if (v < kPatchRadius || v >= h - kPatchRadius) return std::nullopt;
  double a = 0.0, b = 0.0, d = 0.0;
  for (int dr = -kPatchRadius; dr <= kPatchRadius; ++dr) {
    for (int dc = -kPatchRadius; dc <= kPatchRadius; ++dc) {
      const int cc = (u + dc + w) % w;
      if (!g.valid(v + dr, cc)) continue;
      const double gu = g.du(v + dr, cc);
      const double gv = g.dv(v + dr, cc);
      a += gu * gu;
      b += gu * gv;
      d += gv * gv;
    }
  }
  const double trace = a + d;
  if (trace < 1e-12) return std::nullopt;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
  const double lmax = 0.5 * trace + disc;
  const double lmin = 0.5 * trace - disc;
  Vec2 v_patch;
  if (std::abs(b) > 1e-12) {
    v_patch = Vec2(b, lmax - a);
  } else {
    v_patch = a >= d ? Vec2(1.0, 0.0) : Vec2(0.0, 1.0);
  }
  const double n = v_patch.norm();
  if (n < 1e-12) return std::nullopt;
  v_patch /= n;
  if (std::abs(v_patch.x()) > 1e-12 ? v_patch.x() < 0.0
                                    : v_patch.y() < 0.0) {
    v_patch = -v_patch;
  }
  const bool isotropic = lmin > 0.0 && lmax / std::max(lmin, 1e-12) < isotropy_ratio;
  return std::make_pair(v_patch, isotropic);
}

/// Image-coordinate shift of a projected point perturbed along v_t.
inline Vec2 projection_shift(const ProjectionModel& m, const Vec3& p,
                             const Vec3& v_t) {
  return projection_jacobian(m, p) * v_t;
}

/// Normalized directional contribution c = (d_p . v_patch) / |d_p|.
inline double directional_contribution(const Vec2& d_p, const Vec2& v_patch) {
  const double n = d_p.norm();
  if (n < 1e-9) return 0.0;
  return d_p.dot(v_patch) / n;
}

namespace detail {

inline bool respects_spacing(const PatchCandidate& cand,
                             const std::vector<Vec2>& occupied, int width,
                             double min_spacing) {
  for (const auto& px : occupied) {
    if (pixel_distance(cand.u, cand.v, px.x(), px.y(), width) < min_spacing) {
      return false;
    }
  }
  return true;
}

inline void sort_candidate_indices(std::vector<size_t>& order,
                                   const std::vector<PatchCandidate>& cands) {
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (cands[a].score != cands[b].score) return cands[a].score > cands[b].score;
    if (cands[a].gradient != cands[b].gradient) {
      return cands[a].gradient > cands[b].gradient;
    }
    return std::pair(cands[a].v, cands[a].u) < std::pair(cands[b].v, cands[b].u);
  });
}

}  // namespace detail

/// Ranks candidates by |c| per uninformative direction and unions the
/// per-direction top picks, honoring the minimum feature spacing against
/// tracked and already-selected features. Directions are global-frame; the
/// sensor orientation rotates them into the LiDAR frame for Eq.-shift
/// evaluation.
inline std::vector<PatchCandidate> select_complementary(
    std::vector<PatchCandidate> candidates, const DegeneracyReport& report,
    const GradientImages& gradients, const LidarScan& undistorted,
    const ProjectionModel& model, const Pose& T_GL,
    const std::vector<Vec2>& tracked_pixels, int total_budget,
    const FeatureConfig& cfg) {
  if (total_budget <= 0 || candidates.empty()) return {};

  // Patch directions are shared across V_t directions.
  std::vector<char> has_dir(candidates.size(), 0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto dir = patch_dominant_direction(gradients, candidates[i].u,
                                              candidates[i].v,
                                              cfg.isotropy_ratio);
    if (!dir) continue;
    candidates[i].v_patch = dir->first;
    candidates[i].isotropic = dir->second;
    has_dir[i] = 1;
  }

  const Mat3 R_LG = T_GL.rotation.conjugate().toRotationMatrix();
  std::vector<Vec2> occupied = tracked_pixels;
  std::vector<PatchCandidate> selected;
  std::vector<char> taken(candidates.size(), 0);

  for (const Vec3& v_t : report.directions) {
    const Vec3 v_L = R_LG * v_t;
    std::vector<size_t> order;
    for (size_t i = 0; i < candidates.size(); ++i) {
      if (!has_dir[i] || taken[i]) continue;
      if (candidates[i].point_index == kEmptyPixel) continue;
      const Vec3& p = undistorted.points[candidates[i].point_index].position;
      try {
        const Vec2 d_p = projection_shift(model, p, v_L);
        candidates[i].score =
            std::abs(directional_contribution(d_p, candidates[i].v_patch));
      } catch (const std::domain_error&) {
        continue;
      }
      order.push_back(i);
    }
    detail::sort_candidate_indices(order, candidates);
    int taken_here = 0;
    for (size_t idx : order) {
      if (taken_here >= cfg.budget_per_direction ||
          static_cast<int>(selected.size()) >= total_budget) {
        break;
      }
      if (!detail::respects_spacing(candidates[idx], occupied, model.width,
                                    cfg.min_spacing)) {
        continue;
      }
      taken[idx] = 1;
      selected.push_back(candidates[idx]);
      occupied.emplace_back(candidates[idx].u, candidates[idx].v);
      ++taken_here;
    }
  }
  return selected;
}

/// Strongest-gradient and seeded-random policies used by the ablation
/// configurations; same spacing and budget rules.
inline std::vector<PatchCandidate> select_by_policy(
    std::vector<PatchCandidate> candidates, const DegeneracyReport& report,
    const GradientImages& gradients, const LidarScan& undistorted,
    const ProjectionModel& model, const Pose& T_GL,
    const std::vector<Vec2>& tracked_pixels, int total_budget,
    const FeatureConfig& cfg, std::mt19937_64& rng) {
  if (cfg.policy == SelectionPolicy::kComplementary) {
    return select_complementary(std::move(candidates), report, gradients,
                                undistorted, model, T_GL, tracked_pixels,
                                total_budget, cfg);
  }
  if (total_budget <= 0 || candidates.empty()) return {};
  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), size_t{0});
  if (cfg.policy == SelectionPolicy::kStrongest) {
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (candidates[a].gradient != candidates[b].gradient) {
        return candidates[a].gradient > candidates[b].gradient;
      }
      return std::pair(candidates[a].v, candidates[a].u) <
             std::pair(candidates[b].v, candidates[b].u);
    });
  } else {
    std::shuffle(order.begin(), order.end(), rng);
  }
  const int budget = std::min<int>(
      total_budget,
      cfg.budget_per_direction * static_cast<int>(report.directions.size()));
  std::vector<Vec2> occupied = tracked_pixels;
  std::vector<PatchCandidate> selected;
  for (size_t idx : order) {
    if (static_cast<int>(selected.size()) >= budget) break;
    const auto dir = patch_dominant_direction(gradients, candidates[idx].u,
                                              candidates[idx].v,
                                              cfg.isotropy_ratio);
    if (!dir) continue;
    candidates[idx].v_patch = dir->first;
    candidates[idx].isotropic = dir->second;
    if (!detail::respects_spacing(candidates[idx], occupied, model.width,
                                  cfg.min_spacing)) {
      continue;
    }
    selected.push_back(candidates[idx]);
    occupied.emplace_back(candidates[idx].u, candidates[idx].v);
  }
  return selected;
}

/// Back-projects all 25 pixels by their own range to global points and
/// stores the filtered reference intensities. Empty when any pixel of the
/// patch is unusable.
inline std::optional<FeaturePatch> init_patch(const PatchCandidate& cand,
                                              const ImageF& filtered,
                                              const ScanImage& sensor,
                                              const ProjectionModel& model,
                                              const Pose& T_GL,
                                              const FeatureConfig& cfg) {
  FeaturePatch patch;
  int k = 0;
  for (int dv = -kPatchRadius; dv <= kPatchRadius; ++dv) {
    for (int du = -kPatchRadius; du <= kPatchRadius; ++du, ++k) {
      const int r = cand.v + dv;
      if (r < 0 || r >= sensor.valid.rows()) return std::nullopt;
      const int c = (cand.u + du + model.width) % model.width;
      if (!sensor.valid(r, c)) return std::nullopt;
      const double range = sensor.range(r, c);
      if (range < cfg.min_range || range > cfg.max_range) return std::nullopt;
      const Vec3 p_L = unproject(model, c, r, range);
      patch.entries[k] = FeaturePatch::Entry{T_GL * p_L, filtered(r, c)};
    }
  }
  patch.last_pixel = Vec2(cand.u, cand.v);
  return patch;
}

/// Zero-mean normalized cross-correlation over commonly valid entries.
/// Empty when the overlap is too small or either side has no variance.
inline std::optional<double> patch_ncc(std::span<const float> a,
                                       std::span<const float> b,
                                       std::span<const uint8_t> valid) {
  double mean_a = 0.0, mean_b = 0.0;
  int n = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!valid[i]) continue;
    mean_a += a[i];
    mean_b += b[i];
    ++n;
  }
  if (n < kMinPatchSamples) return std::nullopt;
  mean_a /= n;
  mean_b /= n;
  double num = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!valid[i]) continue;
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    num += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a < 1e-12 || var_b < 1e-12) return std::nullopt;
  return num / std::sqrt(var_a * var_b);
}

struct ValidationOutcome {
  std::vector<FeaturePatch> surviving;
  int dropped_occlusion = 0;
  int dropped_range = 0;
  int dropped_ncc = 0;
  int dropped_age = 0;
  int skipped = 0;  // too few samples this frame; kept alive
};

/// Per-frame feature lifecycle: occlusion (predicted vs measured range),
/// range bounds, NCC against the current filtered image, and age. Features
/// with too few usable samples are skipped this frame but kept.
inline ValidationOutcome validate_features(std::vector<FeaturePatch> tracked,
                                           const FeatureFrameContext& ctx,
                                           const FeatureConfig& cfg) {
  ValidationOutcome out;
  for (auto& patch : tracked) {
    if (patch.frames_tracked >= cfg.max_age) {
      ++out.dropped_age;
      continue;
    }
    std::array<float, kPatchSize> ref{}, cur{};
    std::array<uint8_t, kPatchSize> usable{};
    bool occluded = false, out_of_range = false;
    Vec2 center_pixel = patch.last_pixel;
    for (int k = 0; k < kPatchSize; ++k) {
      const auto proj =
          transform_feature_to_distorted(ctx, patch.entries[k].position_global);
      if (!proj) continue;
      const double range = point_range(*ctx.model, proj->p_Lj);
      if (range < cfg.min_range || range > cfg.max_range) {
        out_of_range = true;
        break;
      }
      const int r = std::clamp(static_cast<int>(std::lround(proj->pixel.y())),
                               0, ctx.model->height - 1);
      const int c = ((static_cast<int>(std::lround(proj->pixel.x())) %
                      ctx.model->width) + ctx.model->width) % ctx.model->width;
      if (ctx.sensor_image->valid(r, c)) {
        const double measured = ctx.sensor_image->range(r, c);
        if (std::abs(measured - range) > cfg.occlusion_threshold) {
          occluded = true;
          break;
        }
      }
      const auto value =
          sample_bilinear(*ctx.filtered, *ctx.filtered_mask, proj->pixel.x(),
                          proj->pixel.y());
      if (!value) continue;
      ref[k] = patch.entries[k].ref_intensity;
      cur[k] = *value;
      usable[k] = 1;
      if (k == kPatchSize / 2) center_pixel = proj->pixel;
    }
    if (occluded) {
      ++out.dropped_occlusion;
      continue;
    }
    if (out_of_range) {
      ++out.dropped_range;
      continue;
    }
    const auto ncc = patch_ncc(ref, cur, usable);
    if (!ncc) {
      ++out.skipped;
      patch.last_pixel = center_pixel;
      out.surviving.push_back(patch);
      continue;
    }
    if (*ncc < cfg.ncc_threshold) {
      ++out.dropped_ncc;
      continue;
    }
    patch.last_ncc = *ncc;
    patch.last_pixel = center_pixel;
    out.surviving.push_back(patch);
  }
  return out;
}

/// Debug overlay: darkened copy of the image with selected pixels marked.
inline ImageF draw_feature_overlay(const ImageF& img,
                                   const std::vector<Vec2>& pixels) {
  ImageF out = img;
  for (int r = 0; r < out.rows(); ++r) {
    for (int c = 0; c < out.cols(); ++c) out(r, c) *= 0.6f;
  }
  for (const auto& px : pixels) {
    const int v = static_cast<int>(std::lround(px.y()));
    const int u = static_cast<int>(std::lround(px.x()));
    const int uc = (u % out.cols() + out.cols()) % out.cols();
    for (int d = -2; d <= 2; ++d) {
      out(std::clamp(v + d, 0, out.rows() - 1), uc) = 255.0f;
      out(std::clamp(v, 0, out.rows() - 1),
          (uc + d + out.cols()) % out.cols()) = 255.0f;
    }
  }
  return out;
}

}  // namespace ilio
