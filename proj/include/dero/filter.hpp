#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dero/ego_velocity.hpp"
#include "dero/icp.hpp"
#include "dero/mechanization.hpp"
#include "dero/state.hpp"

namespace dero {

enum class FilterMode { kFull, kNoScale, kNoTilt, kNoIcp, kDrOnly };

struct FilterParams {
  int cloning_window{3};             // M
  double align_window{3.0};          // s of stationary IMU data for coarse alignment
  double scale_clamp_lo{0.5};
  double scale_clamp_hi{1.5};
  double nominal_radar_period{0.1};  // s, used for the stale-clone gate
  double max_innovation_cond{1e12};
  bool use_icp{true};
  bool use_tilt{true};
  bool estimate_scale{true};

  void set_mode(FilterMode mode) {
    use_icp = mode == FilterMode::kFull || mode == FilterMode::kNoScale || mode == FilterMode::kNoTilt;
    use_tilt = mode == FilterMode::kFull || mode == FilterMode::kNoScale || mode == FilterMode::kNoIcp;
    estimate_scale = mode != FilterMode::kNoScale;
  }
};

struct AlignmentResult {
  Vec3 b_g{Vec3::Zero()};
  Vec3 b_a{Vec3::Zero()};
  double roll{0.0};
  double pitch{0.0};
};

// Stationary-window alignment: mean gyro as bias, tilt from mean specific
// force, residual accelerometer bias against rotated gravity. Rejects
// windows shorter than 1 s or with gyro variance above 10x the expected
// sampling-rate-scaled noise level.
AlignmentResult coarse_alignment(std::span<const ImuSample> window, const NoiseConfig& cfg);

struct ErrorDynamics {
  Mat12 F{Mat12::Zero()};
  Mat12 G{Mat12::Zero()};
};

// Continuous-time error dynamics blocks of the 12-dim DR error state for
// process noise w = (n_r, n_g, n_bg, n_sr).
ErrorDynamics assemble_error_dynamics(const DrState& state, const Vec3& v_r_meas, const Vec3& omega,
                                      const Extrinsics& ext, const NoiseConfig& cfg);

// Second-order transition matrix I + F T + 0.5 F^2 T^2.
Mat12 discretize_phi(const Mat12& F, double T);

// Radar-epoch time update: advances position with the radar velocity,
// decays the Markov states, propagates the augmented covariance and the
// accumulated transition product. Returns the epoch nav-frame velocity.
// hold_pose propagates the covariance only (degraded epoch, no velocity).
Vec3 time_update(AugmentedBelief& belief, const Vec3& v_r_meas, const Mat3& Q_scan, const Vec3& omega,
                 const Extrinsics& ext, const NoiseConfig& cfg, double T,
                 const FilterParams& params = {}, bool hold_pose = false);

struct RangeResidual {
  Vec3 z{Vec3::Zero()};
  Eigen::Matrix<double, 3, kAugDim> H{Eigen::Matrix<double, 3, kAugDim>::Zero()};
};

// Residual and Jacobian of the relative-translation measurement between the
// clone epoch and now. Throws StaleClone when the clone is older than
// 2 * M * nominal_radar_period.
RangeResidual range_residual(const AugmentedBelief& belief, const Vec3& p_meas, const Extrinsics& ext,
                             const FilterParams& params = {});

// Removes the accelerometer bias and the radar-derived linear acceleration
// from a specific-force sample.
Vec3 compensate_accel(const Vec3& f_meas, const AugmentedBelief& belief, const Vec3& v_now,
                      const Vec3& v_prev, double T);

// (roll, pitch) from a gravity-dominated specific force. Throws FreeFall
// when |f| <= 0.5 g.
std::pair<double, double> tilt_measurement(const Vec3& f, double gravity = 9.81);

// 2x3 Jacobian of the (roll, pitch) residual w.r.t. the misalignment angle.
Eigen::Matrix<double, 2, 3> tilt_update_model(const Quat& q);

// sigma_a, inflated by sqrt(1 + kappa (d/gamma)^2) when | |f| - g | > gamma.
double adaptive_tilt_sigma(const Vec3& f, const NoiseConfig& cfg);

struct UpdateInfo {
  Eigen::Matrix<double, kAugDim, 1> dx{Eigen::Matrix<double, kAugDim, 1>::Zero()};
  double innovation_cond{0.0};
};

// Stacked EKF update with Joseph-form covariance, error injection into the
// full state, and re-cloning of the current pose. Throws SingularInnovation
// (before mutating) when the innovation condition number exceeds the limit.
UpdateInfo measurement_update(AugmentedBelief& belief, const Eigen::VectorXd& z, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& R, const FilterParams& params = {});

// Copies the current pose into the clone and rebuilds the clone covariance
// blocks from the DR pose blocks; resets Upsilon and the scan counter.
void reclone(AugmentedBelief& belief);

struct TrajectoryPoint {
  double t{0.0};
  DrState state;
};

struct EpochDiagnostics {
  double t{0.0};
  Vec3 v_r{Vec3::Zero()};
  double trace_q{0.0};
  int inlier_count{0};
  int scan_count{0};
  bool updated{false};
  double sigma_a_eff{0.0};
  double sigma_pr{0.0};
  double z_norm{0.0};
  double innovation_cond{0.0};
  bool flagged{false};
};

struct RunOptions {
  NoiseConfig noise;
  RansacParams ransac;
  IcpParams icp;
  FilterParams filter;
  std::uint64_t seed{0};
  // When set, pose is initialized from it instead of the coarse-alignment
  // attitude at the origin.
  std::optional<StampedPose> init_pose;
};

struct RunResult {
  std::vector<TrajectoryPoint> trajectory;
  std::vector<EpochDiagnostics> diagnostics;
  AlignmentResult alignment;
  double start_time{0.0};
};

// Full pipeline over time-ordered streams: coarse alignment, gyro
// mechanization at IMU rate, per-scan RANSAC/LSQ + DR mechanization + time
// update, ICP + tilt updates every M-th scan. Throws EmptyStream on empty
// inputs.
RunResult run(std::span<const ImuSample> imu, std::span<const RadarScan> radar, const Extrinsics& ext,
              const RunOptions& opts);

}  // namespace dero
