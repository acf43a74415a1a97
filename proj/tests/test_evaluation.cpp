#include "ilio/evaluation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ilio;

namespace {

Trajectory straight_path(double speed, double duration, double dt) {
  Trajectory t;
  for (double s = 0.0; s <= duration + 1e-9; s += dt) {
    t.push_back({s, Pose{Quat::Identity(), Vec3(speed * s, 0.0, 0.0)}});
  }
  return t;
}

Trajectory transform_trajectory(const Trajectory& in, const Pose& T) {
  Trajectory out = in;
  for (auto& s : out) {
    s.pose = T * s.pose;
  }
  return out;
}

/// Independent alignment oracle: Gauss-Newton on (rotvec, translation) with
/// numeric Jacobians, unrelated to the closed-form SVD route.
double brute_force_aligned_rmse(const std::vector<Vec3>& est,
                                const std::vector<Vec3>& ref) {
  Vec6 params = Vec6::Zero();  // (rotvec, translation)
  auto residuals = [&](const Vec6& p) {
    const Quat R = exp_so3(p.head<3>());
    Eigen::VectorXd r(3 * est.size());
    for (size_t i = 0; i < est.size(); ++i) {
      r.segment<3>(3 * i) = R * est[i] + p.tail<3>() - ref[i];
    }
    return r;
  };
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd r0 = residuals(params);
    Eigen::MatrixXd J(r0.size(), 6);
    const double eps = 1e-7;
    for (int a = 0; a < 6; ++a) {
      Vec6 dp = Vec6::Zero();
      dp[a] = eps;
      J.col(a) = (residuals(params + dp) - residuals(params - dp)) / (2.0 * eps);
    }
    const Vec6 step =
        (J.transpose() * J + 1e-12 * Eigen::MatrixXd::Identity(6, 6))
            .ldlt()
            .solve(-J.transpose() * r0);
    params += step;
    if (step.norm() < 1e-14) break;
  }
  const Eigen::VectorXd r = residuals(params);
  double sq = 0.0;
  for (size_t i = 0; i < est.size(); ++i) {
    sq += r.segment<3>(3 * i).squaredNorm();
  }
  return std::sqrt(sq / est.size());
}

}  // namespace

TEST_CASE("identical trajectories have zero ATE and RTE") {
  const Trajectory t = straight_path(1.0, 30.0, 0.1);
  CHECK(evaluate_ate(t, t) == Catch::Approx(0.0).margin(1e-12));
  CHECK(evaluate_rte(t, t) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("rigid transforms are removed by the alignment") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Trajectory gt;
  for (int i = 0; i < 100; ++i) {
    gt.push_back({0.1 * i,
                  Pose{exp_so3(Vec3(g(rng), g(rng), g(rng)) * 0.1),
                       Vec3(g(rng), g(rng), g(rng)) * 5.0}});
  }
  const Pose T{exp_so3(Vec3(0.3, -0.5, 0.9)), Vec3(10.0, -4.0, 2.0)};
  const Trajectory est = transform_trajectory(gt, T);
  CHECK(evaluate_ate(est, gt) < 1e-9);
}

TEST_CASE("uniform orthogonal offset on a straight path matches the brute "
          "force oracle") {
  const Trajectory gt = straight_path(1.0, 30.0, 0.1);
  Trajectory est = gt;
  for (auto& s : est) s.pose.translation += Vec3(0.0, 0.1, 0.0);

  const double ate = evaluate_ate(est, gt);
  std::vector<Vec3> e, r;
  for (size_t i = 0; i < gt.size(); ++i) {
    e.push_back(est[i].pose.translation);
    r.push_back(gt[i].pose.translation);
  }
  const double oracle = brute_force_aligned_rmse(e, r);
  CHECK(std::abs(ate - oracle) < 1e-9);
  CHECK(ate < 1e-9);  // a pure translation aligns away entirely
}

TEST_CASE("alignment against the oracle on a noisy wandering path") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  Trajectory gt;
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 150; ++i) {
    p += Vec3(0.1, 0.02 * g(rng), 0.01 * g(rng));
    gt.push_back({0.1 * i, Pose{Quat::Identity(), p}});
  }
  const Pose T{exp_so3(Vec3(0.05, 0.1, -0.2)), Vec3(1.0, 2.0, -0.5)};
  Trajectory est = transform_trajectory(gt, T);
  for (auto& s : est) {
    s.pose.translation += Vec3(g(rng), g(rng), g(rng)) * 0.03;
  }
  std::vector<Vec3> e, r;
  for (size_t i = 0; i < gt.size(); ++i) {
    e.push_back(est[i].pose.translation);
    r.push_back(gt[i].pose.translation);
  }
  CHECK(std::abs(evaluate_ate(est, gt) - brute_force_aligned_rmse(e, r)) <
        1e-9);
}

TEST_CASE("constant along-track scale error reports as percent") {
  const Trajectory gt = straight_path(1.0, 100.0, 0.1);
  Trajectory est = gt;
  for (auto& s : est) s.pose.translation *= 1.01;
  const double rte = evaluate_rte(est, gt, 10.0);
  CHECK(rte == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("failure threshold constant matches the published rule") {
  CHECK(kRteFailureThreshold == 20.0);
}

TEST_CASE("too-short trajectories and sparse overlap raise errors") {
  const Trajectory t = straight_path(1.0, 5.0, 0.1);  // 5 m < 10 m segment
  CHECK_THROWS(evaluate_rte(t, t, 10.0));

  Trajectory offset = t;
  for (auto& s : offset) s.t += 100.0;  // no temporal overlap
  CHECK_THROWS(evaluate_ate(offset, t));
}

TEST_CASE("association picks nearest timestamps within the gap") {
  Trajectory a, b;
  for (int i = 0; i < 10; ++i) a.push_back({i * 1.0, Pose{}});
  b.push_back({0.01, Pose{}});
  b.push_back({0.98, Pose{}});
  b.push_back({5.6, Pose{}});   // 0.6 s away from sample 6 -> out of gap
  const auto pairs = associate_trajectories(a, b, 0.05);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].first == 0);
  CHECK(pairs[0].second == 0);
  CHECK(pairs[1].first == 1);
  CHECK(pairs[1].second == 1);
}
