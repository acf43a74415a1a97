#pragma once

#include "ilio/imu.hpp"
#include "ilio/projection.hpp"
#include "ilio/types.hpp"

#include <functional>
#include <random>
#include <variant>

namespace ilio::sim {

// ---------------------------------------------------------------------------
// Procedural texture helpers (deterministic across platforms).

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline double lattice_hash(int64_t x, int64_t y, int64_t z, uint64_t seed) {
  uint64_t h = mix64(static_cast<uint64_t>(x) * 0x8da6b343ull ^
                     static_cast<uint64_t>(y) * 0xd8163841ull ^
                     static_cast<uint64_t>(z) * 0xcb1ab31full ^ seed);
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

inline double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

/// Trilinear value noise in [0, 1].
inline double value_noise(const Vec3& p, double scale, uint64_t seed) {
  const Vec3 q = p / scale;
  const int64_t ix = static_cast<int64_t>(std::floor(q.x()));
  const int64_t iy = static_cast<int64_t>(std::floor(q.y()));
  const int64_t iz = static_cast<int64_t>(std::floor(q.z()));
  const double fx = smoothstep(0.0, 1.0, q.x() - ix);
  const double fy = smoothstep(0.0, 1.0, q.y() - iy);
  const double fz = smoothstep(0.0, 1.0, q.z() - iz);
  double accum = 0.0;
  for (int dz = 0; dz <= 1; ++dz) {
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) *
                         (dz ? fz : 1.0 - fz);
        accum += w * lattice_hash(ix + dx, iy + dy, iz + dz, seed);
      }
    }
  }
  return accum;
}

// ---------------------------------------------------------------------------
// Analytic surfaces.

struct PlaneGeom {
  Vec3 point{Vec3::Zero()};
  Vec3 normal{0.0, 0.0, 1.0};  // unit
  double half_extent = -1.0;   // <0: infinite; else square patch half-size
};

struct BoxGeom {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Ones()};
};

/// Cylinder along +x through axis_center, open ends.
struct CylinderGeom {
  Vec3 axis_center{Vec3::Zero()};  // y/z of the axis; x ignored
  double radius = 3.0;
  double x_min = -1e9;
  double x_max = 1e9;
};

struct SphereGeom {
  Vec3 center{Vec3::Zero()};
  double radius = 5.0;
};

using SurfaceGeom = std::variant<PlaneGeom, BoxGeom, CylinderGeom, SphereGeom>;

using TextureFn = std::function<double(const Vec3&)>;  // reflectance in [0,1]

struct SceneSurface {
  SurfaceGeom geom;
  TextureFn texture;
};

struct Scene {
  std::vector<SceneSurface> surfaces;
};

struct RayHit {
  double t = 0.0;
  Vec3 point{Vec3::Zero()};
  Vec3 normal{Vec3::Zero()};  // faces the ray origin
  int surface = -1;
};

namespace detail {

inline constexpr double kRayMin = 0.05;

inline std::optional<RayHit> raycast_geom(const PlaneGeom& g, const Vec3& o,
                                          const Vec3& d) {
  const double denom = d.dot(g.normal);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = (g.point - o).dot(g.normal) / denom;
  if (t < kRayMin) return std::nullopt;
  const Vec3 p = o + t * d;
  if (g.half_extent > 0.0) {
    // Square patch in the plane, axes from the dominant normal component.
    const Vec3 u = std::abs(g.normal.z()) < 0.9
                       ? g.normal.cross(Vec3::UnitZ()).normalized()
                       : g.normal.cross(Vec3::UnitX()).normalized();
    const Vec3 v = g.normal.cross(u);
    const Vec3 rel = p - g.point;
    if (std::abs(rel.dot(u)) > g.half_extent ||
        std::abs(rel.dot(v)) > g.half_extent) {
      return std::nullopt;
    }
  }
  return RayHit{t, p, denom > 0.0 ? Vec3(-g.normal) : g.normal, -1};
}

inline std::optional<RayHit> raycast_geom(const BoxGeom& g, const Vec3& o,
                                          const Vec3& d) {
  double t_enter = -1e300, t_exit = 1e300;
  int axis_enter = -1, axis_exit = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-12) {
      if (o[a] < g.min[a] || o[a] > g.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (g.min[a] - o[a]) / d[a];
    double t1 = (g.max[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_enter) {
      t_enter = t0;
      axis_enter = a;
    }
    if (t1 < t_exit) {
      t_exit = t1;
      axis_exit = a;
    }
  }
  if (t_enter > t_exit) return std::nullopt;
  double t;
  int axis;
  if (t_enter > kRayMin) {  // outside, hit the near face
    t = t_enter;
    axis = axis_enter;
  } else if (t_exit > kRayMin) {  // inside, hit the interior wall
    t = t_exit;
    axis = axis_exit;
  } else {
    return std::nullopt;
  }
  const Vec3 p = o + t * d;
  Vec3 n = Vec3::Zero();
  n[axis] = d[axis] > 0.0 ? -1.0 : 1.0;
  return RayHit{t, p, n, -1};
}

inline std::optional<RayHit> raycast_geom(const CylinderGeom& g, const Vec3& o,
                                          const Vec3& d) {
  const double ry = o.y() - g.axis_center.y();
  const double rz = o.z() - g.axis_center.z();
  const double a = d.y() * d.y() + d.z() * d.z();
  const double b = 2.0 * (ry * d.y() + rz * d.z());
  const double c = ry * ry + rz * rz - g.radius * g.radius;
  if (a < 1e-14) return std::nullopt;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
    if (t < kRayMin) continue;
    const Vec3 p = o + t * d;
    if (p.x() < g.x_min || p.x() > g.x_max) continue;
    Vec3 n(0.0, g.axis_center.y() - p.y(), g.axis_center.z() - p.z());
    n /= g.radius;
    if (n.dot(d) > 0.0) n = -n;
    return RayHit{t, p, n, -1};
  }
  return std::nullopt;
}

inline std::optional<RayHit> raycast_geom(const SphereGeom& g, const Vec3& o,
                                          const Vec3& d) {
  const Vec3 rel = o - g.center;
  const double b = 2.0 * rel.dot(d);
  const double c = rel.squaredNorm() - g.radius * g.radius;
  const double disc = b * b - 4.0 * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / 2.0, (-b + sq) / 2.0}) {
    if (t < kRayMin) continue;
    const Vec3 p = o + t * d;
    Vec3 n = (p - g.center) / g.radius;
    if (n.dot(d) > 0.0) n = -n;
    return RayHit{t, p, n, -1};
  }
  return std::nullopt;
}

}  // namespace detail

/// Nearest hit over all scene surfaces.
inline std::optional<RayHit> raycast(const Scene& scene, const Vec3& origin,
                                     const Vec3& dir) {
  std::optional<RayHit> best;
  for (size_t i = 0; i < scene.surfaces.size(); ++i) {
    auto hit = std::visit(
        [&](const auto& geom) { return detail::raycast_geom(geom, origin, dir); },
        scene.surfaces[i].geom);
    if (hit && (!best || hit->t < best->t)) {
      hit->surface = static_cast<int>(i);
      best = hit;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Trajectories. Pose curves are total functions of time; body rates and
// global accelerations fall back to central differences when no analytic
// form is attached.

struct TrajectoryCurve {
  std::function<Pose(double)> pose_fn;
  std::function<Vec3(double)> omega_body_fn;   // optional analytic
  std::function<Vec3(double)> accel_global_fn; // optional analytic

  Pose pose(double t) const { return pose_fn(t); }

  Vec3 omega_body(double t) const {
    if (omega_body_fn) return omega_body_fn(t);
    const double h = 5e-4;
    const Quat qa = pose_fn(t - h).rotation;
    const Quat qb = pose_fn(t + h).rotation;
    return log_so3(qa.conjugate() * qb) / (2.0 * h);
  }

  Vec3 accel_global(double t) const {
    if (accel_global_fn) return accel_global_fn(t);
    const double h = 5e-4;
    const Vec3 pa = pose_fn(t - h).translation;
    const Vec3 p0 = pose_fn(t).translation;
    const Vec3 pb = pose_fn(t + h).translation;
    return (pa - 2.0 * p0 + pb) / (h * h);
  }
};

inline TrajectoryCurve static_curve(const Pose& pose) {
  TrajectoryCurve c;
  c.pose_fn = [pose](double) { return pose; };
  c.omega_body_fn = [](double) { return Vec3::Zero(); };
  c.accel_global_fn = [](double) { return Vec3::Zero(); };
  return c;
}

inline TrajectoryCurve constant_velocity_curve(const Pose& start,
                                               const Vec3& velocity) {
  TrajectoryCurve c;
  c.pose_fn = [start, velocity](double t) {
    return Pose{start.rotation, start.translation + velocity * t};
  };
  c.omega_body_fn = [](double) { return Vec3::Zero(); };
  c.accel_global_fn = [](double) { return Vec3::Zero(); };
  return c;
}

inline TrajectoryCurve constant_rate_rotation_curve(const Pose& start,
                                                    const Vec3& omega_body) {
  TrajectoryCurve c;
  c.pose_fn = [start, omega_body](double t) {
    return Pose{start.rotation * exp_so3(omega_body * t), start.translation};
  };
  c.omega_body_fn = [omega_body](double) { return omega_body; };
  c.accel_global_fn = [](double) { return Vec3::Zero(); };
  return c;
}

/// Horizontal circle at constant speed, non-rotating orientation.
inline TrajectoryCurve circle_curve(const Vec3& center, double radius,
                                    double omega) {
  TrajectoryCurve c;
  c.pose_fn = [=](double t) {
    return Pose{Quat::Identity(),
                center + radius * Vec3(std::cos(omega * t), std::sin(omega * t), 0.0)};
  };
  c.omega_body_fn = [](double) { return Vec3::Zero(); };
  c.accel_global_fn = [=](double t) -> Vec3 {
    return -radius * omega * omega *
           Vec3(std::cos(omega * t), std::sin(omega * t), 0.0);
  };
  return c;
}

namespace detail {

// Integral of smoothstep((t-a)/(b-a)) from a to t; reaches (b-a)/2 at b.
inline double smoothstep_integral(double a, double b, double t) {
  if (t <= a) return 0.0;
  if (t >= b) return 0.5 * (b - a) + (t - b);
  const double u = (t - a) / (b - a);
  return (b - a) * (u * u * u - 0.5 * u * u * u * u);
}

}  // namespace detail

/// Static until t_a, smooth speed-up until t_b, then constant velocity.
/// The static lead-in leaves room for gravity initialization.
inline TrajectoryCurve ramped_drive_curve(const Pose& start,
                                          const Vec3& velocity, double t_a,
                                          double t_b) {
  TrajectoryCurve c;
  c.pose_fn = [=](double t) {
    return Pose{start.rotation,
                start.translation +
                    velocity * detail::smoothstep_integral(t_a, t_b, t)};
  };
  c.omega_body_fn = [](double) { return Vec3::Zero(); };
  c.accel_global_fn = [=](double t) {
    if (t <= t_a || t >= t_b) return Vec3(Vec3::Zero());
    const double u = (t - t_a) / (t_b - t_a);
    return Vec3(velocity * (6.0 * u - 6.0 * u * u) / (t_b - t_a));
  };
  return c;
}

/// Straight drive with per-axis sinusoidal wobble and a yaw sway, all
/// eased in over [t_a, t_b]. Rates and accelerations come from central
/// differences of the pose curve.
inline TrajectoryCurve wobble_curve(const Pose& start, const Vec3& velocity,
                                    const Vec3& wobble_amp, double wobble_freq,
                                    double yaw_amp = 0.0, double yaw_freq = 0.1,
                                    double t_a = 1.0, double t_b = 3.0) {
  const double ww = 2.0 * M_PI * wobble_freq;
  const double wy = 2.0 * M_PI * yaw_freq;
  TrajectoryCurve c;
  c.pose_fn = [=](double t) {
    const double env = smoothstep(t_a, t_b, t);
    const Vec3 osc(wobble_amp.x() * std::sin(ww * t),
                   wobble_amp.y() * std::sin(ww * t + 1.3),
                   wobble_amp.z() * std::sin(ww * t + 2.1));
    const Quat yaw =
        exp_so3(Vec3(0.0, 0.0, env * yaw_amp * std::sin(wy * t)));
    return Pose{start.rotation * yaw,
                start.translation +
                    velocity * detail::smoothstep_integral(t_a, t_b, t) +
                    env * osc};
  };
  return c;
}

// ---------------------------------------------------------------------------
// Sensor models.

struct LidarSimConfig {
  double scan_period = 0.1;    // s per revolution
  double range_noise = 0.01;   // m, 1 sigma
  double intensity_noise = 2.0;
  double intensity_gain = 4000.0;  // intensity = gain * tau / R^2
  double intensity_cap = 4096.0;
  bool incidence_factor = true;    // multiply by cos of incidence angle
};

struct ImuSimConfig {
  double rate = 200.0;          // Hz
  double gyro_noise = 0.002;    // rad/s/sqrt(Hz)
  double acc_noise = 0.02;      // m/s^2/sqrt(Hz)
  Vec3 gyro_bias{Vec3::Zero()}; // constant true bias
  Vec3 acc_bias{Vec3::Zero()};
  Vec3 gravity{0.0, 0.0, -9.81};
};

struct GeneratedScan {
  LidarScan scan;                  // points in the column-time LiDAR frame
  std::vector<Pose> column_poses;  // T_GL per column
};

/// One revolution swept over [t_start, t_start + period); every column is
/// raycast from the sensor pose at its own timestamp. The IMU-frame curve
/// is composed with T_IL to get the sensor pose.
inline GeneratedScan generate_scan(const Scene& scene,
                                   const ProjectionModel& model,
                                   const TrajectoryCurve& curve,
                                   const Pose& T_IL, double t_start,
                                   const LidarSimConfig& cfg, uint64_t seed) {
  GeneratedScan out;
  out.scan.t_start = t_start;
  out.scan.width = model.width;
  out.scan.height = model.height;
  out.scan.points.reserve(static_cast<size_t>(model.width) * model.height);
  out.column_poses.reserve(model.width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int c = 0; c < model.width; ++c) {
    const double dt = cfg.scan_period * c / model.width;
    const Pose T_GL = curve.pose(t_start + dt) * T_IL;
    out.column_poses.push_back(T_GL);
    const Mat3 R_GL = T_GL.matrix();
    const double phi = (c - model.cx() - model.u_offset) / model.fx();
    const double cp = std::cos(phi), sp = std::sin(phi);
    const Vec3 emitter_L(model.emitter_offset * cp, model.emitter_offset * sp, 0.0);
    const Vec3 origin_G = T_GL * emitter_L;
    for (int r = 0; r < model.height; ++r) {
      const double theta = model.beam_elevations[r];
      const double ct = std::cos(theta);
      const Vec3 dir_L(ct * cp, ct * sp, std::sin(theta));
      const Vec3 dir_G = R_GL * dir_L;
      const auto hit = raycast(scene, origin_G, dir_G);
      // Keep the RNG stream aligned across rays regardless of hits.
      const double n_range = gauss(rng);
      const double n_int = gauss(rng);
      if (!hit) continue;
      const double tau =
          std::clamp(scene.surfaces[hit->surface].texture
                         ? scene.surfaces[hit->surface].texture(hit->point)
                         : 0.5,
                     0.0, 1.0);
      double signal = cfg.intensity_gain * tau / (hit->t * hit->t);
      if (cfg.incidence_factor) {
        signal *= std::abs(hit->normal.dot(dir_G));
      }
      const double range = hit->t + cfg.range_noise * n_range;
      if (range <= 0.1) continue;
      LidarPoint pt;
      pt.position = emitter_L + range * dir_L;
      pt.intensity = static_cast<float>(std::clamp(
          signal + cfg.intensity_noise * n_int, 0.0, cfg.intensity_cap));
      pt.reflectivity = static_cast<float>(std::clamp(tau * 255.0, 0.0, 255.0));
      pt.t_offset_ns = static_cast<uint32_t>(std::llround(dt * 1e9));
      pt.ring = static_cast<uint16_t>(r);
      out.scan.points.push_back(pt);
    }
  }
  return out;
}

/// IMU stream over [t0, t0 + duration]; deterministic under a fixed seed.
inline std::vector<ImuSample> generate_imu(const TrajectoryCurve& curve,
                                           double t0, double duration,
                                           const ImuSimConfig& cfg,
                                           uint64_t seed) {
  std::vector<ImuSample> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 1.0 / cfg.rate;
  const double gyro_sigma = cfg.gyro_noise * std::sqrt(cfg.rate);
  const double acc_sigma = cfg.acc_noise * std::sqrt(cfg.rate);
  const int n = static_cast<int>(std::llround(duration * cfg.rate));
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double t = t0 + i * dt;
    const Mat3 R_IG = curve.pose(t).rotation.conjugate().toRotationMatrix();
    ImuSample s;
    s.t = t;
    s.gyro = curve.omega_body(t) + cfg.gyro_bias +
             gyro_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    s.acc = R_IG * (curve.accel_global(t) - cfg.gravity) + cfg.acc_bias +
            acc_sigma * Vec3(gauss(rng), gauss(rng), gauss(rng));
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenes.

/// Texture bands transverse to the tunnel axis plus stripes running along
/// it; band edges carry information along x, stripe edges do not.
struct TunnelTexture {
  double base = 0.25;
  double band_amp = 0.5;
  double band_period = 2.0;   // m along x
  double band_width = 0.8;    // m occupied per period
  double band_smooth = 0.15;  // m edge transition
  double stripe_amp = 0.3;
  int stripe_count = 6;
  double stripe_width = 0.25;   // fraction of the angular period
  double stripe_smooth = 0.06;  // fraction of the angular period
};

namespace detail {

inline double periodic_pulse(double x, double period, double width,
                             double smooth) {
  const double s = x / period - std::floor(x / period);  // [0,1)
  const double dist = std::abs(s - 0.5) * period;        // to pulse center
  const double half = 0.5 * width;
  return 1.0 - smoothstep(half - smooth, half + smooth, dist);
}

}  // namespace detail

inline double tunnel_tau(const TunnelTexture& tex, double radius,
                         const Vec3& p) {
  const double band = detail::periodic_pulse(p.x(), tex.band_period,
                                             tex.band_width, tex.band_smooth);
  const double beta = std::atan2(p.z(), p.y());
  const double ang_period = 2.0 * M_PI / tex.stripe_count;
  const double stripe = detail::periodic_pulse(
      beta * radius, ang_period * radius, tex.stripe_width * ang_period * radius,
      tex.stripe_smooth * ang_period * radius);
  return std::clamp(tex.base + tex.band_amp * band + tex.stripe_amp * stripe,
                    0.0, 1.0);
}

enum class TunnelEdgeClass { kNone, kBandEdge, kStripeEdge };

/// Classifies a wall point by the texture edge it is nearest to; used by
/// oracle tests to separate axis-transverse markings from edges running
/// along the tunnel.
inline TunnelEdgeClass classify_tunnel_point(const TunnelTexture& tex,
                                             double radius, const Vec3& p,
                                             double proximity) {
  const double s = p.x() / tex.band_period - std::floor(p.x() / tex.band_period);
  const double dist_center = std::abs(s - 0.5) * tex.band_period;
  const double band_edge_dist = std::abs(dist_center - 0.5 * tex.band_width);

  const double beta = std::atan2(p.z(), p.y());
  const double ang_period = 2.0 * M_PI / tex.stripe_count;
  const double sb = beta / ang_period - std::floor(beta / ang_period);
  const double arc = std::abs(sb - 0.5) * ang_period * radius;
  const double stripe_edge_dist =
      std::abs(arc - 0.5 * tex.stripe_width * ang_period * radius);

  const bool near_band = band_edge_dist < proximity;
  const bool near_stripe = stripe_edge_dist < proximity;
  if (near_band && !near_stripe) return TunnelEdgeClass::kBandEdge;
  if (near_stripe && !near_band) return TunnelEdgeClass::kStripeEdge;
  return TunnelEdgeClass::kNone;
}

/// Cylindrical corridor along +x centered on the origin axis.
inline Scene make_tunnel_scene(double length, double radius,
                               const TunnelTexture& tex, bool textured = true) {
  Scene scene;
  CylinderGeom cyl;
  cyl.axis_center = Vec3::Zero();
  cyl.radius = radius;
  cyl.x_min = -0.1 * length;
  cyl.x_max = 1.1 * length;
  TextureFn texture;
  if (textured) {
    texture = [tex, radius](const Vec3& p) { return tunnel_tau(tex, radius, p); };
  } else {
    texture = [tex](const Vec3&) { return tex.base; };
  }
  scene.surfaces.push_back(SceneSurface{cyl, texture});
  return scene;
}

/// Closed box room with value-noise walls and a couple of interior crates;
/// geometry constrains every direction.
inline Scene make_room_scene(const Vec3& dims, uint64_t seed = 7) {
  Scene scene;
  BoxGeom room;
  room.min = -0.5 * dims;
  room.max = 0.5 * dims;
  auto wall_tex = [seed](const Vec3& p) {
    return 0.25 + 0.55 * value_noise(p, 0.8, seed);
  };
  scene.surfaces.push_back(SceneSurface{room, wall_tex});

  BoxGeom crate1{Vec3(dims.x() * 0.15, -dims.y() * 0.3, -0.5 * dims.z()),
                 Vec3(dims.x() * 0.3, -dims.y() * 0.15, -0.5 * dims.z() + 1.5)};
  BoxGeom crate2{Vec3(-dims.x() * 0.35, dims.y() * 0.1, -0.5 * dims.z()),
                 Vec3(-dims.x() * 0.2, dims.y() * 0.3, -0.5 * dims.z() + 2.0)};
  auto crate_tex = [seed](const Vec3& p) {
    return 0.3 + 0.5 * value_noise(p, 0.4, seed + 1);
  };
  scene.surfaces.push_back(SceneSurface{crate1, crate_tex});
  scene.surfaces.push_back(SceneSurface{crate2, crate_tex});
  return scene;
}

/// Infinite textured ground plane at z = 0.
inline Scene make_plane_scene(uint64_t seed = 11) {
  Scene scene;
  PlaneGeom ground;
  ground.point = Vec3::Zero();
  ground.normal = Vec3::UnitZ();
  auto tex = [seed](const Vec3& p) {
    return 0.3 + 0.5 * value_noise(p, 1.2, seed);
  };
  scene.surfaces.push_back(SceneSurface{ground, tex});
  return scene;
}

inline Scene make_sphere_scene(double radius, double tau = 0.5) {
  Scene scene;
  SphereGeom s;
  s.center = Vec3::Zero();
  s.radius = radius;
  scene.surfaces.push_back(
      SceneSurface{s, [tau](const Vec3&) { return tau; }});
  return scene;
}

// ---------------------------------------------------------------------------
// Whole-sequence generation: scans, IMU, and ground truth share one clock.

struct SequenceConfig {
  double duration = 10.0;   // s
  double scan_rate = 10.0;  // Hz
  LidarSimConfig lidar;
  ImuSimConfig imu;
  Pose T_IL;  // identity by default
  uint64_t seed = 1;
};

struct SimSequence {
  std::vector<LidarScan> scans;
  std::vector<ImuSample> imu;
  Trajectory ground_truth;  // IMU pose at each scan end time
};

inline SimSequence generate_sequence(const Scene& scene,
                                     const ProjectionModel& model,
                                     const TrajectoryCurve& curve,
                                     const SequenceConfig& cfg) {
  SimSequence out;
  const int n_scans = static_cast<int>(cfg.duration * cfg.scan_rate);
  LidarSimConfig lidar = cfg.lidar;
  lidar.scan_period = 1.0 / cfg.scan_rate;
  for (int i = 0; i < n_scans; ++i) {
    const double t0 = i * lidar.scan_period;
    auto gen = generate_scan(scene, model, curve, cfg.T_IL, t0, lidar,
                             mix64(cfg.seed + i));
    const double t_k = gen.scan.t_end();
    out.ground_truth.push_back({t_k, curve.pose(t_k)});
    out.scans.push_back(std::move(gen.scan));
  }
  // Cover the whole sequence with margin before the first scan.
  out.imu = generate_imu(curve, -0.75, cfg.duration + 1.0, cfg.imu,
                         mix64(cfg.seed ^ 0xabcdef));
  return out;
}

}  // namespace ilio::sim
