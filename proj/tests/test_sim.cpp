#include "ilio/degeneracy.hpp"
#include "ilio/sim.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace ilio;

TEST_CASE("static sensor inside a sphere sees constant range") {
  const auto model = ProjectionModel::uniform(128, 32, M_PI / 2.0);
  const auto scene = sim::make_sphere_scene(5.0);
  sim::LidarSimConfig cfg;
  cfg.range_noise = 0.0;
  cfg.intensity_noise = 0.0;
  const auto gen = sim::generate_scan(scene, model, sim::static_curve(Pose{}),
                                      Pose{}, 0.0, cfg, 1);
  REQUIRE(gen.scan.points.size() == 128 * 32);
  for (const auto& p : gen.scan.points) {
    CHECK(std::abs(p.position.norm() - 5.0) < 1e-6);
  }
}

TEST_CASE("ray hits land on the declared surface") {
  const auto scene = sim::make_tunnel_scene(100.0, 3.0, sim::TunnelTexture{});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Vec3 dir(g(rng), g(rng), g(rng));
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const auto hit = sim::raycast(scene, Vec3(10.0, 0.0, 0.0), dir);
    if (!hit) continue;
    const double radial = std::hypot(hit->point.y(), hit->point.z());
    CHECK(std::abs(radial - 3.0) < 1e-9);
  }
}

TEST_CASE("intensity follows the inverse-square model") {
  // Constant-reflectance wall, no incidence term: i * R^2 must be constant
  // for every hit, so doubling the range quarters the intensity.
  sim::Scene scene;
  sim::PlaneGeom wall;
  wall.point = Vec3(2.0, 0.0, 0.0);
  wall.normal = Vec3::UnitX();
  scene.surfaces.push_back({wall, [](const Vec3&) { return 0.5; }});

  const auto model = ProjectionModel::uniform(256, 64, M_PI / 2.0);
  sim::LidarSimConfig cfg;
  cfg.range_noise = 0.0;
  cfg.intensity_noise = 0.0;
  cfg.incidence_factor = false;
  const auto gen = sim::generate_scan(scene, model, sim::static_curve(Pose{}),
                                      Pose{}, 0.0, cfg, 1);
  REQUIRE(gen.scan.points.size() > 1000);
  const double expected = cfg.intensity_gain * 0.5;  // i * R^2
  int checked = 0;
  for (const auto& p : gen.scan.points) {
    const double r2 = p.position.squaredNorm();
    if (p.intensity >= cfg.intensity_cap - 1.0f) continue;  // saturated
    CHECK(p.intensity * r2 == Catch::Approx(expected).epsilon(1e-5));
    ++checked;
  }
  REQUIRE(checked > 1000);
}

TEST_CASE("moving sensor sweeps column poses along the pose curve") {
  const auto model = ProjectionModel::uniform(64, 8, M_PI / 2.0);
  const auto scene = sim::make_sphere_scene(8.0);
  const auto curve =
      sim::constant_velocity_curve(Pose{}, Vec3(2.0, 0.0, 0.0));
  sim::LidarSimConfig cfg;
  cfg.scan_period = 0.1;
  cfg.range_noise = 0.0;
  const auto gen = sim::generate_scan(scene, model, curve, Pose{}, 0.0, cfg, 1);
  REQUIRE(gen.column_poses.size() == 64);
  const Vec3 first = gen.column_poses.front().translation;
  const Vec3 last = gen.column_poses.back().translation;
  const double dt = cfg.scan_period * 63.0 / 64.0;
  CHECK((first - curve.pose(0.0).translation).norm() < 1e-12);
  CHECK((last - curve.pose(dt).translation).norm() < 1e-12);
}

TEST_CASE("static trajectory produces gravity-only accelerometer data") {
  const auto curve = sim::static_curve(Pose{exp_so3(Vec3(0.2, 0.1, -0.3)),
                                            Vec3(1.0, 2.0, 3.0)});
  sim::ImuSimConfig cfg;
  cfg.gyro_noise = 0.0;
  cfg.acc_noise = 0.0;
  const auto imu = sim::generate_imu(curve, 0.0, 1.0, cfg, 1);
  const Vec3 expected =
      curve.pose(0.0).rotation.conjugate() * (-cfg.gravity);
  for (const auto& s : imu) {
    CHECK(s.gyro.norm() < 1e-12);
    CHECK((s.acc - expected).norm() < 1e-9);
  }
}

TEST_CASE("circular trajectory shows the centripetal magnitude") {
  const double radius = 3.0, omega = 0.8;
  const auto curve = sim::circle_curve(Vec3::Zero(), radius, omega);
  sim::ImuSimConfig cfg;
  cfg.gyro_noise = 0.0;
  cfg.acc_noise = 0.0;
  const auto imu = sim::generate_imu(curve, 0.0, 1.0, cfg, 1);
  for (const auto& s : imu) {
    const Vec3 without_gravity = s.acc + Vec3(cfg.gravity);
    CHECK(without_gravity.norm() ==
          Catch::Approx(radius * omega * omega).margin(1e-9));
  }
}

TEST_CASE("identical seeds give bit-identical streams") {
  const auto curve = sim::wobble_curve(Pose{}, Vec3(1.0, 0.0, 0.0),
                                       Vec3(0.2, 0.2, 0.1), 0.3, 0.1);
  sim::ImuSimConfig cfg;
  const auto a = sim::generate_imu(curve, 0.0, 2.0, cfg, 99);
  const auto b = sim::generate_imu(curve, 0.0, 2.0, cfg, 99);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t == b[i].t);
    CHECK(a[i].acc == b[i].acc);
    CHECK(a[i].gyro == b[i].gyro);
  }

  const auto model = ProjectionModel::uniform(64, 16, M_PI / 2.0);
  const auto scene = sim::make_tunnel_scene(40.0, 3.0, sim::TunnelTexture{});
  sim::LidarSimConfig lidar;
  const auto s1 = sim::generate_scan(scene, model, curve, Pose{}, 0.5, lidar, 5);
  const auto s2 = sim::generate_scan(scene, model, curve, Pose{}, 0.5, lidar, 5);
  REQUIRE(s1.scan.points.size() == s2.scan.points.size());
  for (size_t i = 0; i < s1.scan.points.size(); ++i) {
    CHECK(s1.scan.points[i].position == s2.scan.points[i].position);
    CHECK(s1.scan.points[i].intensity == s2.scan.points[i].intensity);
  }
}

TEST_CASE("undistorting with the true motion recovers a static scan") {
  const auto model = ProjectionModel::uniform(256, 32, M_PI / 2.0);
  const auto scene = sim::make_tunnel_scene(60.0, 3.0, sim::TunnelTexture{});
  const auto curve = sim::constant_velocity_curve(Pose{}, Vec3(2.0, 0.0, 0.0));
  sim::LidarSimConfig cfg;
  cfg.range_noise = 0.0;
  cfg.intensity_noise = 0.0;
  const auto gen = sim::generate_scan(scene, model, curve, Pose{}, 0.0, cfg, 1);

  // True relative pose table from the curve.
  std::vector<std::pair<double, Pose>> poses;
  const double t_k = gen.scan.t_end();
  for (double t = 0.0; t < t_k; t += 0.002) {
    poses.emplace_back(t, curve.pose(t));
  }
  poses.emplace_back(t_k, curve.pose(t_k));
  const auto table = RelativePoseTable::from_global_poses(poses);
  const LidarScan undistorted = undistort_scan(gen.scan, table, Pose{});

  // Compare against a static scan from the end pose: each undistorted
  // point must lie on the scene surface seen from the end frame.
  const Pose end_pose = curve.pose(t_k);
  double max_err = 0.0;
  for (const auto& p : undistorted.points) {
    const Vec3 p_G = end_pose * p.position;
    const double radial = std::hypot(p_G.y(), p_G.z());
    max_err = std::max(max_err, std::abs(radial - 3.0));
  }
  CHECK(max_err < 1e-4);
}

TEST_CASE("untextured tunnel flags the axis via the degeneracy module") {
  const auto model = ProjectionModel::uniform(512, 64, M_PI / 2.0);
  const auto scene = sim::make_tunnel_scene(80.0, 3.0, sim::TunnelTexture{},
                                            /*textured=*/false);
  sim::LidarSimConfig cfg;
  cfg.range_noise = 0.005;
  const auto gen = sim::generate_scan(
      scene, model, sim::static_curve(Pose{Quat::Identity(), Vec3(10.0, 0.0, 0.0)}),
      Pose{}, 0.0, cfg, 3);

  // Surface normals straight from the simulator geometry.
  std::vector<PointNormal> corrs;
  for (size_t i = 0; i < gen.scan.points.size(); i += 13) {
    const Vec3 p = gen.scan.points[i].position +
                   Vec3(10.0, 0.0, 0.0);  // global frame
    Vec3 n(0.0, -p.y(), -p.z());
    if (n.norm() < 1e-9) continue;
    corrs.push_back({p, n.normalized()});
  }
  const auto report = detect_uninformative_directions(corrs, DegeneracyConfig{});
  REQUIRE(report.directions.size() == 1);
  const double angle =
      std::acos(std::clamp(std::abs(report.directions[0].dot(Vec3::UnitX())),
                           0.0, 1.0));
  CHECK(angle < 5.0 * M_PI / 180.0);
}

TEST_CASE("tunnel texture classification separates band and stripe edges") {
  const sim::TunnelTexture tex;
  const double radius = 3.0;
  // A point exactly on a band edge: x at half band width from the center.
  const double band_center = 2.0 * tex.band_period + 0.5 * tex.band_period;
  // Pick an angular position well inside a stripe-free zone.
  const double beta = 0.5 * (2.0 * M_PI / tex.stripe_count);
  const Vec3 on_band(band_center + 0.5 * tex.band_width,
                     radius * std::cos(beta), radius * std::sin(beta));
  CHECK(sim::classify_tunnel_point(tex, radius, on_band, 0.1) ==
        sim::TunnelEdgeClass::kBandEdge);
}
