#include "dero/mechanization.hpp"

#include <Eigen/Geometry>

namespace dero {

Vec3 body_velocity_from_radar(const Vec3& v_r_meas, const Vec3& scale, const Vec3& omega, const Quat& q,
                              const Extrinsics& ext) {
  const Mat3 c_b_n = quat_to_rot(q);
  const Vec3 v_r = scale.asDiagonal() * v_r_meas;
  return c_b_n * (ext.C_r_b() * v_r) - c_b_n * (omega.cross(ext.p_r_b));
}

MechOutput propagate_pose(const DrState& state, std::span<const ImuSample> gyro_window,
                          const Vec3& v_r_meas, const Extrinsics& ext, double T) {
  MechOutput out;
  out.q = state.q;

  if (gyro_window.empty()) {
    out.gyro_gap = true;
  } else {
    double t_prev = gyro_window.front().t - (gyro_window.size() > 1
                                                 ? gyro_window[1].t - gyro_window[0].t
                                                 : T / static_cast<double>(gyro_window.size()));
    for (const auto& s : gyro_window) {
      const double dt = s.t - t_prev;
      t_prev = s.t;
      if (dt <= 0.0) continue;
      out.q = quat_integrate(out.q, s.gyro - state.b_g, dt);
    }
  }

  const Vec3 omega_epoch = gyro_window.empty() ? Vec3::Zero() : Vec3(gyro_window.back().gyro - state.b_g);
  out.v_n = body_velocity_from_radar(v_r_meas, state.s_r, omega_epoch, out.q, ext);
  out.p = state.p + out.v_n * T;
  return out;
}

}  // namespace dero
