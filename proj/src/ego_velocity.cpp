#include "dero/ego_velocity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace dero {

double doppler_residual(const RadarTarget& tgt, const Vec3& v) {
  return tgt.doppler + unit_direction(tgt).dot(v);
}

namespace {

EgoVelEstimate lsq_on_indices(std::span<const RadarTarget> targets, const std::vector<int>& idx,
                              double sigma_r_nominal) {
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd u(n, 3);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    u.row(i) = unit_direction(targets[idx[i]]).transpose();
    b(i) = -targets[idx[i]].doppler;
  }
  const Mat3 utu = u.transpose() * u;
  Eigen::JacobiSVD<Mat3> svd(utu, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) < 1e-9 * svd.singularValues()(0) || svd.singularValues()(2) <= 0.0)
    throw RankDeficient();

  EgoVelEstimate est;
  est.v = utu.ldlt().solve(u.transpose() * b);
  double s2 = 0.0;
  if (n > 3) {
    const Eigen::VectorXd r = u * est.v - b;
    s2 = r.squaredNorm() / static_cast<double>(n - 3);
  }
  if (n < 10) s2 = std::max(s2, sigma_r_nominal * sigma_r_nominal);
  est.cov = s2 * utu.inverse();
  est.inliers = idx;
  return est;
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

}  // namespace

EgoVelEstimate lsq_ego_velocity(std::span<const RadarTarget> targets, double sigma_r_nominal) {
  if (targets.size() < 3) throw RankDeficient("need at least 3 targets");
  return lsq_on_indices(targets, all_indices(targets.size()), sigma_r_nominal);
}

EgoVelEstimate ransac_ego_velocity(const RadarScan& scan, const RansacParams& params,
                                   double sigma_r_nominal) {
  const auto& targets = scan.targets;
  const int n = static_cast<int>(targets.size());
  if (n < 3) throw InsufficientInliers("fewer than 3 targets in scan");

  std::vector<Vec3> dirs(n);
  for (int i = 0; i < n; ++i) dirs[i] = unit_direction(targets[i]);

  std::mt19937_64 rng(params.rng_seed);
  std::vector<int> sample_pool = all_indices(targets.size());

  std::vector<int> best;
  for (int it = 0; it < params.max_iterations; ++it) {
    // partial Fisher-Yates: first 3 entries become a uniform distinct triple
    for (int k = 0; k < 3; ++k) {
      std::uniform_int_distribution<int> pick(k, n - 1);
      std::swap(sample_pool[k], sample_pool[pick(rng)]);
    }
    const int a = sample_pool[0], b = sample_pool[1], c = sample_pool[2];
    Mat3 u;
    u.row(0) = dirs[a].transpose();
    u.row(1) = dirs[b].transpose();
    u.row(2) = dirs[c].transpose();
    if (std::abs(u.determinant()) < 1e-6) continue;
    const Vec3 d(-targets[a].doppler, -targets[b].doppler, -targets[c].doppler);
    const Vec3 v = u.partialPivLu().solve(d);
    if (!v.allFinite()) continue;

    std::vector<int> consensus;
    consensus.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (std::abs(targets[i].doppler + dirs[i].dot(v)) <= params.inlier_threshold) consensus.push_back(i);
    }
    if (consensus.size() > best.size()) best = std::move(consensus);
  }

  const auto min_inliers =
      std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(params.min_inlier_ratio * n)));
  if (best.size() < min_inliers) throw InsufficientInliers();
  return lsq_on_indices(targets, best, sigma_r_nominal);
}

}  // namespace dero
