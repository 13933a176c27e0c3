#pragma once

#include <span>
#include <vector>

#include "dero/types.hpp"

namespace dero {

struct IcpParams {
  int max_iterations{50};
  double transform_tol{1e-6};
  double max_corr_dist{2.0};  // m
  int min_points{10};
  double sigma_floor{0.05};  // m
  double sigma_scale{2.0};
  double rotation_gate_deg{15.0};
};

struct IcpResult {
  Mat3 rotation{Mat3::Identity()};  // maps source points into the target frame
  Vec3 translation{Vec3::Zero()};
  double fitness{0.0};  // m, RMS of matched residuals
  int matched_count{0};
  bool converged{false};
};

// Point-to-point ICP: nearest-neighbor association within max_corr_dist,
// closed-form SVD alignment, iterated until the transform change drops
// below transform_tol or max_iterations is hit. Throws TooFewPoints /
// DegenerateGeometry.
IcpResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target, const Mat3& rot_init,
                       const Vec3& trans_init, const IcpParams& params = {});

// Measurement noise level from registration quality:
// max(sigma_floor, sigma_scale * fitness / sqrt(matched_count)).
double fitness_to_sigma(double fitness, int matched_count, double sigma_floor = 0.05,
                        double sigma_scale = 2.0);

}  // namespace dero
