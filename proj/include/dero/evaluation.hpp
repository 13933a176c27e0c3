#pragma once

#include <span>
#include <vector>

#include "dero/types.hpp"

namespace dero {

// Time-associated estimate/ground-truth pose pairs with the yaw+translation
// alignment already applied to the estimate.
struct AlignedPair {
  std::vector<double> t;
  std::vector<Vec3> p_est;
  std::vector<Quat> q_est;
  std::vector<Vec3> p_gt;
  std::vector<Quat> q_gt;

  std::size_t size() const { return t.size(); }
};

struct YawAlignment {
  double yaw{0.0};  // rad, applied to the estimate about +z
  Vec3 translation{Vec3::Zero()};
};

// Closed-form position-yaw (4-DoF) alignment of the estimate onto the
// ground truth over nearest-neighbor associations within max_dt.
// Throws TooFewPairs below 2 associations.
std::pair<YawAlignment, AlignedPair> align_position_yaw(std::span<const StampedPose> est,
                                                        std::span<const StampedPose> gt,
                                                        double max_dt = 0.02);

struct AteResult {
  double translation_rmse{0.0};  // m
  double rotation_rmse_deg{0.0};
  int pairs{0};
};

AteResult ate(const AlignedPair& pair);

struct RelErrBin {
  double distance{0.0};  // m
  std::vector<double> translation_err;   // m
  std::vector<double> rotation_err_deg;  // deg
  bool too_short{false};
};

// KITTI-style relative errors over ground-truth arc length for each
// distance bin; bins the trajectory cannot reach are flagged too_short.
std::vector<RelErrBin> relative_errors(const AlignedPair& pair, std::span<const double> distances);

}  // namespace dero
