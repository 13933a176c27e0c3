#pragma once

#include <span>

#include "dero/state.hpp"

namespace dero {

struct MechOutput {
  Vec3 v_n{Vec3::Zero()};    // body velocity in nav frame at the radar epoch
  Vec3 p{Vec3::Zero()};      // m
  Quat q{Quat::identity()};  // q_b^n
  bool gyro_gap{false};      // attitude held because the window was empty
};

// Body velocity in the nav frame from a radar velocity measurement:
// C(q) C_r^b diag(s) v_meas - C(q) skew(omega) p_r^b. The scale compensation
// inverts the measurement model v_meas = diag(s)^-1 v_r.
Vec3 body_velocity_from_radar(const Vec3& v_r_meas, const Vec3& scale, const Vec3& omega, const Quat& q,
                              const Extrinsics& ext);

// One radar-period DR step: attitude integrated per gyro sample with
// bias-compensated rates, velocity at the epoch from the radar measurement,
// position advanced by v * T (zero-order hold over the radar period).
// Each gyro sample integrates over the span since the previous sample
// (or window start for the first).
MechOutput propagate_pose(const DrState& state, std::span<const ImuSample> gyro_window,
                          const Vec3& v_r_meas, const Extrinsics& ext, double T);

}  // namespace dero
