#pragma once

#include "dero/types.hpp"

namespace dero {

// Full dead-reckoning state: position, attitude, gyro bias, radar scale.
struct DrState {
  Vec3 p{Vec3::Zero()};        // m, nav frame
  Quat q{Quat::identity()};    // q_b^n
  Vec3 b_g{Vec3::Zero()};      // rad/s
  Vec3 s_r{Vec3::Ones()};      // dimensionless per-axis radar scale
};

struct CloneState {
  Vec3 p{Vec3::Zero()};
  Quat q{Quat::identity()};
  double t{0.0};
};

// Error-state ordering within the 18x18 covariance.
inline constexpr int kIdxPos = 0;
inline constexpr int kIdxAtt = 3;
inline constexpr int kIdxBg = 6;
inline constexpr int kIdxSr = 9;
inline constexpr int kIdxClonePos = 12;
inline constexpr int kIdxCloneAtt = 15;
inline constexpr int kDrDim = 12;
inline constexpr int kAugDim = 18;

using Mat12 = Eigen::Matrix<double, kDrDim, kDrDim>;
using Mat18 = Eigen::Matrix<double, kAugDim, kAugDim>;

// DR state + cloned pose + augmented covariance + accumulated transition
// product. b_a comes from coarse alignment and is held constant.
struct AugmentedBelief {
  DrState dr;
  CloneState clone;
  Mat18 P{Mat18::Zero()};
  Mat12 Upsilon{Mat12::Identity()};
  int scan_count{0};
  Vec3 b_a{Vec3::Zero()};
  double t{0.0};
};

}  // namespace dero
