#pragma once

#include "ilio/config.hpp"
#include "ilio/evaluation.hpp"

#include <json.hpp>

#include <chrono>
#include <ostream>

namespace ilio {

struct FrameStats {
  int frame = 0;
  double t = 0.0;
  bool skipped = false;
  std::string skip_reason;
  int iterations = 0;
  int geo_rows = 0;
  int pho_rows = 0;
  int tracked = 0;
  int selected = 0;
  int dropped = 0;
  size_t map_size = 0;
  int degenerate_directions = 0;
  bool degeneracy_fallback = false;
  double total_ms = 0.0;
  double predict_ms = 0.0;
  double geometric_ms = 0.0;
  double photometric_ms = 0.0;
  double update_ms = 0.0;
};

namespace detail {
class StopWatch {
 public:
  StopWatch() : t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0_)
        .count();
  }
  void reset() { t0_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point t0_;
};
}  // namespace detail

/// Full odometry pipeline: predict, undistort, image filtering, geometric
/// and photometric residuals, iterated update, map and feature upkeep.
/// Frames must arrive strictly in order.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg, std::ostream* debug_log = nullptr)
      : cfg_(std::move(cfg)),
        map_(cfg_.fusion.map_voxel, cfg_.fusion.map_cap_per_voxel),
        rng_(cfg_.seed),
        debug_log_(debug_log) {
    cfg_.finalize();
  }

  void feed_imu(std::vector<ImuSample> samples) {
    double prev = imu_.empty() ? -std::numeric_limits<double>::infinity()
                               : imu_.back().t;
    for (const auto& s : samples) {
      if (s.t <= prev) {
        throw std::invalid_argument("pipeline: IMU timestamps not increasing");
      }
      prev = s.t;
      imu_.push_back(s);
    }
  }

  /// Processes one scan; returns the pose at the scan end time, or empty
  /// when the frame is skipped (IMU dropout, rejected update).
  std::optional<TrajectorySample> process_frame(const LidarScan& scan) {
    if (scan.t_start <= last_scan_start_) {
      throw std::invalid_argument("pipeline: scans out of order");
    }
    last_scan_start_ = scan.t_start;

    FrameStats st;
    st.frame = frame_index_;
    detail::StopWatch total;

    if (!initialized_) initialize(scan.t_start);
    const double t_k = scan.t_end();
    st.t = t_k;

    // Prediction + undistortion table.
    detail::StopWatch sw;
    PropagationResult prop;
    try {
      prop = propagate(x_, P_, imu_, state_time_, t_k, cfg_.imu,
                       scan.t_start);
    } catch (const ImuGapError& e) {
      return skip_frame(std::move(st), t_k, e.what(), total);
    }
    st.predict_ms = sw.ms();

    sw.reset();
    const ScanPoseCache pose_cache(scan, prop.table);
    LidarScan undistorted = scan;
    {
      const Pose T_LI = cfg_.T_IL.inverse();
      for (size_t i = 0; i < undistorted.points.size(); ++i) {
        const Pose& T_IkIj = pose_cache.at_offset(scan.points[i].t_offset_ns);
        undistorted.points[i].position =
            T_LI * (T_IkIj * (cfg_.T_IL * scan.points[i].position));
      }
    }
    const std::vector<Vec3> downsampled =
        voxel_downsample(undistorted, cfg_.fusion.scan_voxel);
    st.geometric_ms += sw.ms();

    // Image stack (intensity path).
    sw.reset();
    const ScanImage sensor_img = build_images(cfg_.projection, scan);
    const ImageF& source =
        cfg_.filter_reflectivity ? sensor_img.reflectivity : sensor_img.intensity;
    const ImageF filtered = filter_image(source, sensor_img.valid, cfg_.filter);
    const GradientImages gradients = central_gradients(filtered, sensor_img.valid);
    const IndexImage umap = build_undistortion_map(cfg_.projection, undistorted);
    st.photometric_ms += sw.ms();

    // Geometric correspondences at the prediction; planes stay fixed over
    // the update iterations, residuals are re-evaluated.
    sw.reset();
    const NavState predicted = prop.state;
    const Pose T_GL_pred = predicted.pose() * cfg_.T_IL;
    const std::vector<GeoCorrespondence> correspondences =
        map_.empty() ? std::vector<GeoCorrespondence>{}
                     : find_plane_correspondences(downsampled, map_, T_GL_pred,
                                                  cfg_.fusion);
    st.geometric_ms += sw.ms();

    std::vector<PointNormal> normals;
    normals.reserve(correspondences.size());
    for (const auto& c : correspondences) {
      normals.push_back(PointNormal{T_GL_pred * c.p_L, c.normal});
    }
    const DegeneracyReport report =
        detect_uninformative_directions(normals, cfg_.degeneracy);
    st.degenerate_directions =
        report.fallback ? 0 : static_cast<int>(report.directions.size());
    st.degeneracy_fallback = report.fallback;

    // Feature validation against the current frame at the prediction.
    FeatureFrameContext ctx;
    ctx.model = &cfg_.projection;
    ctx.scan = &scan;
    ctx.sensor_image = &sensor_img;
    ctx.filtered = &filtered;
    ctx.filtered_mask = &sensor_img.valid;
    ctx.gradients = &gradients;
    ctx.undistortion_map = &umap;
    ctx.table = &prop.table;
    ctx.pose_cache = &pose_cache;
    ctx.T_GIk = predicted.pose();
    ctx.T_IL = cfg_.T_IL;
    ctx.range_gate = cfg_.features.occlusion_threshold;

    sw.reset();
    const bool use_photometric = cfg_.fusion.photometric;
    if (use_photometric) {
      const size_t before = tracked_.size();
      auto outcome = validate_features(std::move(tracked_), ctx, cfg_.features);
      tracked_ = std::move(outcome.surviving);
      st.dropped = static_cast<int>(before - tracked_.size());
    }
    st.photometric_ms += sw.ms();

    // Iterated update; the builder re-linearizes both blocks per iterate.
    sw.reset();
    double pho_build_ms = 0.0;
    int geo_rows = 0, pho_rows = 0;
    auto builder = [&](const NavState& xi) {
      const ResidualBlock geo =
          point_to_plane_residuals(correspondences, xi, cfg_.T_IL);
      ResidualBlock pho;
      if (use_photometric && cfg_.fusion.lambda != 0.0 && !tracked_.empty()) {
        detail::StopWatch pw;
        FeatureFrameContext ctx_i = ctx;
        ctx_i.T_GIk = xi.pose();
        pho = photometric_rows(ctx_i, tracked_);
        pho_build_ms += pw.ms();
      }
      geo_rows = static_cast<int>(geo.z.size());
      pho_rows = static_cast<int>(pho.z.size());
      return stack_system(geo, pho, cfg_.fusion.lambda, cfg_.fusion.sigma);
    };

    const UpdateResult update = iekf_update(predicted, prop.covariance,
                                            builder, cfg_.fusion);
    st.update_ms = sw.ms() - pho_build_ms;
    st.photometric_ms += pho_build_ms;
    st.iterations = update.iterations;
    st.geo_rows = geo_rows;
    st.pho_rows = pho_rows;

    if (update.rejected) {
      // Roll back to the prediction and keep going.
      x_ = predicted;
      P_ = prop.covariance;
      state_time_ = t_k;
      return skip_frame(std::move(st), t_k, "non-finite update", total);
    }
    x_ = update.state;
    P_ = update.covariance;
    state_time_ = t_k;

    // Map upkeep at the posterior pose.
    sw.reset();
    const Pose T_GL = x_.pose() * cfg_.T_IL;
    map_insert(map_, downsampled, T_GL, cfg_.fusion.map_horizon);
    st.geometric_ms += sw.ms();
    st.map_size = map_.size();

    // Feature bookkeeping: age, then top up with new patches.
    sw.reset();
    if (use_photometric) {
      for (auto& patch : tracked_) ++patch.frames_tracked;
      const int budget = cfg_.features.max_patches -
                         static_cast<int>(tracked_.size());
      if (budget > 0) {
        std::vector<PatchCandidate> candidates =
            select_candidates(filtered, sensor_img, cfg_.features);
        std::vector<Vec2> occupied;
        occupied.reserve(tracked_.size());
        for (const auto& p : tracked_) occupied.push_back(p.last_pixel);
        const auto picked = select_by_policy(
            std::move(candidates), report, gradients, undistorted,
            cfg_.projection, T_GL, occupied, budget, cfg_.features, rng_);
        for (const auto& cand : picked) {
          auto patch = init_patch(cand, filtered, sensor_img, cfg_.projection,
                                  T_GL, cfg_.features);
          if (!patch) continue;
          patch->id = next_feature_id_++;
          patch->birth_frame = frame_index_;
          tracked_.push_back(std::move(*patch));
          ++st.selected;
        }
      }
    }
    st.photometric_ms += sw.ms();
    st.tracked = static_cast<int>(tracked_.size());

    st.total_ms = total.ms();
    stats_.push_back(st);
    log_frame(st, report);
    ++frame_index_;
    return TrajectorySample{t_k, x_.pose()};
  }

  const NavState& state() const { return x_; }
  const ErrorCovariance& covariance() const { return P_; }
  const std::vector<FrameStats>& stats() const { return stats_; }
  const LocalMap& map() const { return map_; }
  const std::vector<FeaturePatch>& tracked_features() const { return tracked_; }
  const RunConfig& config() const { return cfg_; }

 private:
  void initialize(double first_scan_time) {
    if (imu_.empty()) throw std::runtime_error("pipeline: no IMU data");
    const GravityInit init = initialize_gravity(imu_, cfg_.imu);
    x_ = NavState{};
    x_.g_G = init.gravity;
    x_.b_g = init.gyro_bias;
    P_ = ErrorCovariance::Zero();
    P_.block<3, 3>(kErrTheta, kErrTheta) = Mat3::Identity() * 1e-4;
    P_.block<3, 3>(kErrPos, kErrPos) = Mat3::Identity() * 1e-10;
    P_.block<3, 3>(kErrVel, kErrVel) = Mat3::Identity() * 1e-2;
    P_.block<3, 3>(kErrBa, kErrBa) = Mat3::Identity() * 1e-2;
    P_.block<3, 3>(kErrBg, kErrBg) = Mat3::Identity() * 1e-4;
    P_.block<3, 3>(kErrGrav, kErrGrav) = Mat3::Identity() * 4e-4;
    state_time_ = first_scan_time;
    initialized_ = true;
  }

  std::optional<TrajectorySample> skip_frame(FrameStats st, double t_k,
                                             const std::string& reason,
                                             const detail::StopWatch& total) {
    st.skipped = true;
    st.skip_reason = reason;
    st.total_ms = total.ms();
    // Coast: jump the clock and account for the unmodeled motion.
    if (t_k > state_time_) {
      const double gap = t_k - state_time_;
      P_.block<3, 3>(kErrPos, kErrPos) +=
          Mat3::Identity() * cfg_.imu.acc_noise * cfg_.imu.acc_noise * gap * gap;
      P_.block<3, 3>(kErrVel, kErrVel) +=
          Mat3::Identity() * cfg_.imu.acc_noise * cfg_.imu.acc_noise * gap;
      state_time_ = t_k;
    }
    stats_.push_back(st);
    if (debug_log_) {
      nlohmann::json j{{"frame", st.frame}, {"skipped", true},
                       {"reason", reason}, {"t", st.t}};
      (*debug_log_) << j.dump() << "\n";
    }
    ++frame_index_;
    return std::nullopt;
  }

  void log_frame(const FrameStats& st, const DegeneracyReport& report) {
    if (!debug_log_) return;
    nlohmann::json j;
    j["frame"] = st.frame;
    j["t"] = st.t;
    j["position"] = {x_.p_GI.x(), x_.p_GI.y(), x_.p_GI.z()};
    j["quaternion"] = {x_.R_GI.w(), x_.R_GI.x(), x_.R_GI.y(), x_.R_GI.z()};
    j["iterations"] = st.iterations;
    j["geo_rows"] = st.geo_rows;
    j["pho_rows"] = st.pho_rows;
    j["tracked"] = st.tracked;
    j["selected"] = st.selected;
    j["dropped"] = st.dropped;
    j["map_size"] = st.map_size;
    j["degeneracy"] = {{"fallback", report.fallback},
                       {"eigenvalues",
                        {report.eigenvalues.x(), report.eigenvalues.y(),
                         report.eigenvalues.z()}},
                       {"contributions",
                        {report.contributions.x(), report.contributions.y(),
                         report.contributions.z()}}};
    nlohmann::json dirs = nlohmann::json::array();
    for (const auto& d : report.directions) {
      dirs.push_back({d.x(), d.y(), d.z()});
    }
    j["degeneracy"]["directions"] = dirs;
    j["ms"] = {{"total", st.total_ms},
               {"predict", st.predict_ms},
               {"geometric", st.geometric_ms},
               {"photometric", st.photometric_ms},
               {"update", st.update_ms}};
    (*debug_log_) << j.dump() << "\n";
  }

  RunConfig cfg_;
  NavState x_;
  ErrorCovariance P_ = ErrorCovariance::Identity();
  LocalMap map_;
  std::vector<FeaturePatch> tracked_;
  std::vector<ImuSample> imu_;
  std::vector<FrameStats> stats_;
  std::mt19937_64 rng_;
  std::ostream* debug_log_ = nullptr;
  double state_time_ = 0.0;
  double last_scan_start_ = -std::numeric_limits<double>::infinity();
  bool initialized_ = false;
  int frame_index_ = 0;
  int next_feature_id_ = 0;
};

struct PipelineResult {
  Trajectory trajectory;
  std::vector<FrameStats> stats;
};

/// Runs the whole pipeline over in-memory data. Scans must be in order;
/// skipped frames emit no pose but do not stop the run.
inline PipelineResult run_pipeline(const std::vector<LidarScan>& scans,
                                   const std::vector<ImuSample>& imu,
                                   const RunConfig& cfg,
                                   std::ostream* debug_log = nullptr) {
  Pipeline pipeline(cfg, debug_log);
  pipeline.feed_imu(imu);
  PipelineResult result;
  for (const auto& scan : scans) {
    const auto sample = pipeline.process_frame(scan);
    if (sample) result.trajectory.push_back(*sample);
  }
  result.stats = pipeline.stats();
  return result;
}

}  // namespace ilio
