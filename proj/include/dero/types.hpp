#pragma once

#include <vector>

#include "dero/geometry.hpp"

namespace dero {

// One IMU reading. The gyro value is the mean angular rate over the period
// ending at t (delta-angle / dt); the specific force is sampled at t.
struct ImuSample {
  double t{0.0};
  Vec3 gyro{Vec3::Zero()};   // rad/s, body frame
  Vec3 accel{Vec3::Zero()};  // m/s^2 specific force, body frame
};

struct RadarTarget {
  Vec3 position{Vec3::Zero()};  // m, radar frame
  double doppler{0.0};          // m/s radial speed, positive = receding
  double power{0.0};            // dB, pass-through
};

struct RadarScan {
  double t{0.0};
  std::vector<RadarTarget> targets;
};

// IMU-radar calibration: C_b^r as quaternion, radar position in body frame.
struct Extrinsics {
  Quat q_b_r{Quat::identity()};
  Vec3 p_r_b{Vec3::Zero()};

  Mat3 C_b_r() const { return quat_to_rot(q_b_r); }
  Mat3 C_r_b() const { return quat_to_rot(q_b_r).transpose(); }
};

// All stochastic parameters. Noise densities are per sqrt(Hz); the Markov
// driving terms sigma_bg / sigma_sr are PSD square roots of Eq.-style
// first-order processes. sigma_a is the tilt measurement noise in rad.
struct NoiseConfig {
  double sigma_g{0.003};          // rad/s/sqrt(Hz) gyro noise
  double sigma_bg{1e-5};          // rad/s/sqrt(s) gyro bias driving noise
  double sigma_sr{1e-4};          // 1/sqrt(s) radar scale driving noise
  double sigma_a{0.01};           // rad tilt measurement noise
  double sigma_r_nominal{0.05};   // m/s nominal per-axis radar velocity noise
  double sigma_f{0.0023};         // m/s^2/sqrt(Hz) accelerometer noise
  double tau_b{3600.0};           // s gyro bias Markov time constant
  double tau_r{1e6};              // s radar scale Markov time constant
  double gamma{0.059};            // m/s^2 adaptive tilt threshold
  double kappa{100.0};            // adaptive inflation factor
  double gravity{9.81};           // m/s^2
  double p0_pos{0.0};             // m, initial position sigma
  Vec3 p0_att{Vec3(0.017453292519943295, 0.017453292519943295, 0.05235987755982988)};  // rad
  double p0_bg{0.0034906585039886592};  // rad/s (0.2 deg/s)
  double p0_sr{0.05};

  // Throws InvalidConfig on non-positive stochastic parameters.
  void validate() const;
};

// Output of RANSAC/LSQ on one scan.
struct EgoVelEstimate {
  Vec3 v{Vec3::Zero()};                 // m/s, radar frame
  Mat3 cov{Mat3::Zero()};               // (m/s)^2
  std::vector<int> inliers;             // indices into the source scan
};

struct StampedPose {
  double t{0.0};
  Vec3 p{Vec3::Zero()};
  Quat q{Quat::identity()};
};

// Renormalizes the rotation and checks finiteness. Throws InvalidCalibration.
Extrinsics validate_extrinsics(const Extrinsics& e);

// position / |position|. Throws ZeroRange.
Vec3 unit_direction(const RadarTarget& tgt);

}  // namespace dero
