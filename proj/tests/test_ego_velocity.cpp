#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "dero/ego_velocity.hpp"
#include "support/oracles.hpp"

using namespace dero;

namespace {

RadarTarget make_target(const Vec3& dir, double range, double doppler) {
  RadarTarget t;
  t.position = dir.normalized() * range;
  t.doppler = doppler;
  return t;
}

// noiseless static-scene scan for a given radar velocity
RadarScan make_scan(const Vec3& v, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> range(2.0, 20.0);
  RadarScan scan;
  for (int i = 0; i < n; ++i) {
    const Vec3 dir = oracles::random_vec3(rng).normalized();
    scan.targets.push_back(make_target(dir, range(rng), -dir.dot(v)));
  }
  return scan;
}

std::set<int> corrupt(RadarScan& scan, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.5, 5.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::set<int> out;
  const int n_out = static_cast<int>(fraction * scan.targets.size());
  while (static_cast<int>(out.size()) < n_out) {
    const int i = static_cast<int>(u(rng) * scan.targets.size());
    if (out.insert(i).second) scan.targets[i].doppler += (u(rng) < 0.5 ? -1.0 : 1.0) * mag(rng);
  }
  return out;
}

}  // namespace

TEST_SUITE("ego_velocity") {
  TEST_CASE("doppler residual") {
    RadarTarget t = make_target(Vec3(1, 0, 0), 5.0, 0.0);
    CHECK(doppler_residual(t, Vec3::Zero()) == doctest::Approx(0.0));

    t.doppler = -2.0;
    CHECK(doppler_residual(t, Vec3(2, 0, 0)) == doctest::Approx(0.0));

    t.doppler = 0.0;
    CHECK(doppler_residual(t, Vec3(2, 0, 0)) == doctest::Approx(2.0));
  }

  TEST_CASE("lsq recovers a noiseless velocity") {
    const Vec3 v(1.0, -0.5, 0.2);
    const RadarScan scan = make_scan(v, 50, 11);
    const EgoVelEstimate est = lsq_ego_velocity(scan.targets);
    CHECK((est.v - v).norm() < 1e-9);
    CHECK(est.inliers.size() == 50);
  }

  TEST_CASE("lsq of all-zero dopplers is zero velocity") {
    const RadarScan scan = make_scan(Vec3::Zero(), 20, 12);
    CHECK(lsq_ego_velocity(scan.targets).v.norm() < 1e-12);
  }

  TEST_CASE("lsq solves the diagonal 3-target system by hand") {
    std::vector<RadarTarget> targets = {make_target(Vec3(1, 0, 0), 5, -1.0),
                                        make_target(Vec3(0, 1, 0), 5, -2.0),
                                        make_target(Vec3(0, 0, 1), 5, -3.0)};
    const EgoVelEstimate est = lsq_ego_velocity(targets);
    CHECK((est.v - Vec3(1, 2, 3)).norm() < 1e-12);
  }

  TEST_CASE("lsq covariance floors at the nominal sigma below 10 targets") {
    std::vector<RadarTarget> targets = {make_target(Vec3(1, 0, 0), 5, -1.0),
                                        make_target(Vec3(0, 1, 0), 5, -2.0),
                                        make_target(Vec3(0, 0, 1), 5, -3.0)};
    const EgoVelEstimate est = lsq_ego_velocity(targets, 0.05);
    // diagonal directions: (U^T U)^-1 = I, so cov = sigma^2 I
    CHECK((est.cov - 0.0025 * Mat3::Identity()).norm() < 1e-12);
  }

  TEST_CASE("lsq rejects rank-deficient geometry") {
    // all directions in the xy-plane: no z information
    std::vector<RadarTarget> targets = {make_target(Vec3(1, 0, 0), 5, 0), make_target(Vec3(0, 1, 0), 5, 0),
                                        make_target(Vec3(1, 1, 0), 5, 0), make_target(Vec3(1, -1, 0), 5, 0)};
    CHECK_THROWS_AS(lsq_ego_velocity(targets), RankDeficient);
  }

  TEST_CASE("ransac rejects gross outliers") {
    const Vec3 v(1.0, 0.0, 0.0);
    RadarScan scan = make_scan(v, 50, 13);
    const std::set<int> outliers = corrupt(scan, 0.3, 14);

    RansacParams params;
    params.rng_seed = 99;
    const EgoVelEstimate est = ransac_ego_velocity(scan, params);
    CHECK((est.v - v).norm() < 1e-6);
    for (int i : est.inliers) CHECK(outliers.count(i) == 0);
  }

  TEST_CASE("ransac on an all-inlier scan equals plain lsq") {
    const RadarScan scan = make_scan(Vec3(0.7, -0.3, 0.1), 40, 15);
    RansacParams params;
    params.rng_seed = 1;
    const EgoVelEstimate ransac = ransac_ego_velocity(scan, params);
    const EgoVelEstimate lsq = lsq_ego_velocity(scan.targets);
    CHECK((ransac.v - lsq.v).norm() < 1e-12);
    CHECK(ransac.inliers.size() == lsq.inliers.size());
  }

  TEST_CASE("two targets are insufficient") {
    RadarScan scan;
    scan.targets = {make_target(Vec3(1, 0, 0), 5, 0), make_target(Vec3(0, 1, 0), 5, 0)};
    CHECK_THROWS_AS(ransac_ego_velocity(scan, RansacParams{}), InsufficientInliers);
  }

  TEST_CASE("exact recovery up to 50 percent outliers") {
    const Vec3 v(0.4, 1.2, -0.3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RadarScan scan = make_scan(v, 60, 100 + seed);
      corrupt(scan, 0.5, 200 + seed);
      RansacParams params;
      params.max_iterations = 60;  // sized for the 50 percent regime
      params.rng_seed = seed;
      const EgoVelEstimate est = ransac_ego_velocity(scan, params);
      CHECK((est.v - v).norm() < 1e-9);
    }
  }

  TEST_CASE("covariance shrinks with target count in expectation") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 0.05);
    const Vec3 v(1.0, 0.5, -0.2);
    double tr_small = 0.0, tr_large = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      RadarScan small = make_scan(v, 12, 300 + trial);
      RadarScan large = make_scan(v, 48, 700 + trial);
      for (auto& t : small.targets) t.doppler += g(rng);
      for (auto& t : large.targets) t.doppler += g(rng);
      tr_small += lsq_ego_velocity(small.targets).cov.trace();
      tr_large += lsq_ego_velocity(large.targets).cov.trace();
    }
    CHECK(tr_large < tr_small);
  }

  TEST_CASE("deterministic inlier sets for a fixed seed") {
    RadarScan scan = make_scan(Vec3(1, -1, 0.5), 40, 77);
    corrupt(scan, 0.25, 78);
    RansacParams params;
    params.rng_seed = 1234;
    const auto a = ransac_ego_velocity(scan, params);
    const auto b = ransac_ego_velocity(scan, params);
    CHECK(a.inliers == b.inliers);
    CHECK(a.v == b.v);
  }
}
