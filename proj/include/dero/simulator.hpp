#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dero/types.hpp"

namespace dero {

enum class ProfileKind { kStationary, kCircle, kFigure8, kWaypointSpline };

// Analytic trajectory description. Position is C2-continuous so the
// specific force is well-defined; circle and figure-8 close after an
// integer number of laps with an optional stationary hold plus quintic
// speed ramp at the start.
struct TrajectoryProfile {
  ProfileKind kind{ProfileKind::kFigure8};
  double duration{60.0};  // s, includes hold and ramp
  double speed{3.0};      // m/s target average cruise speed
  double size{20.0};      // m, radius / figure-8 half-width / waypoint scale
  std::uint64_t seed{0};
  double hold{5.0};  // s stationary lead-in (coarse-alignment window)
  double ramp{3.0};  // s quintic speed ramp after the hold
  std::vector<Vec3> waypoints;  // spline profile; default loop when empty
};

struct SimEnvironment {
  int n_landmarks{300};
  double fov_half_deg{60.0};  // azimuth and elevation half-angle
  double max_range{25.0};     // m
  double min_range{0.5};      // m
  int max_targets{64};
  double dropout{0.0};  // probability of an empty scan
};

struct TruthSample {
  double t{0.0};
  Vec3 p{Vec3::Zero()};      // m, nav frame
  Vec3 v{Vec3::Zero()};      // m/s, nav frame
  Vec3 a{Vec3::Zero()};      // m/s^2 linear acceleration, nav frame
  Quat q{Quat::identity()};  // q_b^n
  Vec3 omega{Vec3::Zero()};  // rad/s instantaneous body rate
};

class TrajectoryModel {
 public:
  virtual ~TrajectoryModel() = default;
  virtual TruthSample at(double t) const = 0;
};

std::unique_ptr<TrajectoryModel> make_trajectory(const TrajectoryProfile& profile);

// Truth sampled at a fixed rate over [0, duration], stamps i / rate.
std::vector<TruthSample> gen_trajectory(const TrajectoryProfile& profile, double rate);

// IMU synthesis against the truth sequence. Gyro samples carry the mean
// rate over the preceding interval (delta-angle / dt) so that exact
// exponential integration reproduces the truth attitude; the gyro bias
// evolves as a first-order Markov process with tau_b. Specific force is
// sampled instantaneously with g^n = (0, 0, +g).
std::vector<ImuSample> synth_imu(std::span<const TruthSample> truth, const Vec3& gyro_bias0,
                                 const Vec3& accel_bias, const NoiseConfig& cfg, std::uint64_t seed);

// Radar synthesis: landmarks drawn around the trajectory, FOV/range
// filtered, per-target doppler -u^T (diag(s)^-1 v^r) plus noise; a fraction
// outlier_rate of targets receives a gross corruption of magnitude
// uniform in [0.5, 5] m/s with random sign.
std::vector<RadarScan> synth_radar(std::span<const TruthSample> truth, const SimEnvironment& env,
                                   const Vec3& scale, double sigma_doppler, double outlier_rate,
                                   const Extrinsics& ext, double radar_rate, std::uint64_t seed);

}  // namespace dero
