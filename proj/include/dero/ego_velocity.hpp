#pragma once

#include <cstdint>
#include <span>

#include "dero/types.hpp"

namespace dero {

struct RansacParams {
  int max_iterations{17};
  double inlier_threshold{0.15};  // m/s
  double min_inlier_ratio{0.25};
  std::uint64_t rng_seed{0};
};

// Residual of a static-scene target: doppler + u^T v.
double doppler_residual(const RadarTarget& tgt, const Vec3& v);

// Unweighted least squares over all targets. The covariance is
// s^2 (U^T U)^-1 with the unbiased residual variance s^2, floored at
// sigma_r_nominal^2 below 10 targets. Throws RankDeficient when the
// direction matrix has rank < 3.
EgoVelEstimate lsq_ego_velocity(std::span<const RadarTarget> targets, double sigma_r_nominal = 0.05);

// 3-point RANSAC with LSQ refit on the largest consensus set. Deterministic
// for a fixed rng_seed. Throws InsufficientInliers when the best consensus
// is below max(3, min_inlier_ratio * N).
EgoVelEstimate ransac_ego_velocity(const RadarScan& scan, const RansacParams& params,
                                   double sigma_r_nominal = 0.05);

}  // namespace dero
