#include "ilio/config.hpp"
#include "ilio/io.hpp"
#include "ilio/sim.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace ilio;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("ilio_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scan files round trip byte-identically") {
  TempDir tmp;
  const auto model = ProjectionModel::uniform(64, 16, M_PI / 2.0);
  const auto scene = sim::make_sphere_scene(5.0);
  const auto gen = sim::generate_scan(scene, model, sim::static_curve(Pose{}),
                                      Pose{}, 1.25, sim::LidarSimConfig{}, 3);
  const auto p1 = (tmp.path / "a.clsc").string();
  const auto p2 = (tmp.path / "b.clsc").string();
  write_scan(p1, gen.scan);
  const LidarScan loaded = read_scan(p1);
  CHECK(loaded.t_start == gen.scan.t_start);
  CHECK(loaded.width == gen.scan.width);
  CHECK(loaded.points.size() == gen.scan.points.size());
  write_scan(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("imu csv and tum trajectories round trip exactly") {
  TempDir tmp;
  std::vector<ImuSample> imu;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    imu.push_back(ImuSample{0.005 * i + 0.1234567890123,
                            Vec3(g(rng), g(rng), g(rng)),
                            Vec3(g(rng), g(rng), g(rng))});
  }
  const auto imu_path = (tmp.path / "imu.csv").string();
  write_imu_csv(imu_path, imu);
  const auto back = read_imu_csv(imu_path);
  REQUIRE(back.size() == imu.size());
  for (size_t i = 0; i < imu.size(); ++i) {
    CHECK(back[i].t == imu[i].t);
    CHECK(back[i].acc == imu[i].acc);
    CHECK(back[i].gyro == imu[i].gyro);
  }

  Trajectory traj;
  for (int i = 0; i < 20; ++i) {
    traj.push_back({0.1 * i,
                    Pose{exp_so3(Vec3(g(rng), g(rng), g(rng)) * 0.3),
                         Vec3(g(rng), g(rng), g(rng))}});
  }
  const auto traj_path = (tmp.path / "traj.tum").string();
  write_trajectory_tum(traj_path, traj);
  const auto traj_back = read_trajectory_tum(traj_path);
  REQUIRE(traj_back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK(traj_back[i].t == traj[i].t);
    CHECK((traj_back[i].pose.translation - traj[i].pose.translation).norm() ==
          0.0);
    CHECK(rotation_distance(traj_back[i].pose.rotation,
                            traj[i].pose.rotation) < 1e-15);
  }
}

TEST_CASE("trajectory reader rejects non-monotone timestamps") {
  TempDir tmp;
  const auto path = (tmp.path / "bad.tum").string();
  std::ofstream f(path);
  f << "1.0 0 0 0 0 0 0 1\n0.5 0 0 0 0 0 0 1\n";
  f.close();
  CHECK_THROWS(read_trajectory_tum(path));
}

TEST_CASE("scan listing sorts by header start time") {
  TempDir tmp;
  LidarScan scan;
  scan.width = 4;
  scan.height = 1;
  scan.points.resize(2);
  scan.points[0].position = Vec3(1.0, 0.0, 0.0);
  scan.points[1].position = Vec3(2.0, 0.0, 0.0);

  scan.t_start = 3.0;
  write_scan((tmp.path / "zzz.clsc").string(), scan);
  scan.t_start = 1.0;
  write_scan((tmp.path / "mmm.clsc").string(), scan);
  scan.t_start = 2.0;
  write_scan((tmp.path / "aaa.clsc").string(), scan);

  const auto files = list_scan_files(tmp.path.string());
  REQUIRE(files.size() == 3);
  CHECK(read_scan(files[0]).t_start == 1.0);
  CHECK(read_scan(files[1]).t_start == 2.0);
  CHECK(read_scan(files[2]).t_start == 3.0);
}

TEST_CASE("config parsing applies sections, comments, and overrides") {
  std::istringstream ini(R"(
# projection setup
[projection]
width = 512
height = 64
vertical_fov_deg = 45.0   ; inline comment

[fusion]
lambda = 0.1
photometric = false

[features]
policy = strongest
)");
  RunConfig cfg = parse_config(ini);
  CHECK(cfg.projection.width == 512);
  CHECK(cfg.projection.height == 64);
  CHECK(cfg.projection.vertical_fov == Catch::Approx(M_PI / 4.0));
  CHECK(cfg.fusion.lambda == 0.1);
  CHECK_FALSE(cfg.fusion.photometric);
  CHECK(cfg.features.policy == SelectionPolicy::kStrongest);

  apply_config_override(cfg, "fusion.lambda=0.5");
  CHECK(cfg.fusion.lambda == 0.5);

  cfg.finalize();
  CHECK(cfg.projection.beam_elevations.size() == 64);
}

TEST_CASE("unknown keys, sections, and bad values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(apply_config_key(cfg, "projection", "bogus", "1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "nonsense", "width", "1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "fusion", "lambda", "-1"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "fusion", "lambda", "abc"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_key(cfg, "fusion", "photometric", "maybe"),
                  std::invalid_argument);
  CHECK_THROWS_AS(apply_config_override(cfg, "no_equals_sign"),
                  std::invalid_argument);
}

TEST_CASE("beam table from config must match the height") {
  RunConfig cfg;
  apply_config_key(cfg, "projection", "height", "4");
  apply_config_key(cfg, "projection", "beam_elevations_deg", "10, 5, -5");
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);
  apply_config_key(cfg, "projection", "beam_elevations_deg", "10, 5, -5, -10");
  cfg.finalize();
  CHECK(cfg.projection.beam_elevations.size() == 4);
  CHECK(cfg.projection.beam_elevations[0] == Catch::Approx(10.0 * M_PI / 180.0));
}

TEST_CASE("non-monotone beam tables are rejected") {
  RunConfig cfg;
  apply_config_key(cfg, "projection", "height", "3");
  apply_config_key(cfg, "projection", "beam_elevations_deg", "10, -5, 5");
  CHECK_THROWS_AS(cfg.finalize(), std::invalid_argument);
}
