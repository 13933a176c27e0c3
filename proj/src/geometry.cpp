#include "dero/geometry.hpp"

#include <cmath>

namespace dero {

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return s;
}

Quat quat_normalize(const Quat& q) {
  const double n = q.norm();
  if (n <= 0.0 || !std::isfinite(n)) throw InvalidCalibration("quaternion with zero or non-finite norm");
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat quat_mul(const Quat& a, const Quat& b) {
  Quat r{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
         a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
         a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
         a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  return quat_normalize(r);
}

Mat3 quat_to_rot(const Quat& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),  //
      2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),   //
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Quat quat_exp(const Vec3& theta) {
  const double angle = theta.norm();
  double c = std::cos(0.5 * angle);
  double s_over_a;
  if (angle < 1e-10) {
    // sin(a/2)/a -> 1/2 - a^2/48
    s_over_a = 0.5 - angle * angle / 48.0;
  } else {
    s_over_a = std::sin(0.5 * angle) / angle;
  }
  return quat_normalize({c, s_over_a * theta.x(), s_over_a * theta.y(), s_over_a * theta.z()});
}

Vec3 quat_log(const Quat& q_in) {
  Quat q = q_in;
  if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(vn, q.w);
  return (angle / vn) * q.vec();
}

Quat quat_integrate(const Quat& q, const Vec3& omega, double dt) {
  return quat_mul(q, quat_exp(omega * dt));
}

Quat small_angle_quat(const Vec3& dpsi) {
  return quat_normalize({1.0, 0.5 * dpsi.x(), 0.5 * dpsi.y(), 0.5 * dpsi.z()});
}

Quat quat_from_euler(const EulerAngles& e) { return quat_from_euler(e.roll, e.pitch, e.yaw); }

Quat quat_from_euler(double roll, double pitch, double yaw) {
  const Quat qz{std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
  const Quat qy{std::cos(0.5 * pitch), 0.0, std::sin(0.5 * pitch), 0.0};
  const Quat qx{std::cos(0.5 * roll), std::sin(0.5 * roll), 0.0, 0.0};
  return quat_mul(quat_mul(qz, qy), qx);
}

EulerAngles euler_from_quat(const Quat& q_in) {
  const Quat q = quat_normalize(q_in);
  const Mat3 r = quat_to_rot(q);
  // C_b^n = Rz(yaw) Ry(pitch) Rx(roll): r(2,0) = -sin(pitch)
  const double sp = -r(2, 0);
  if (std::abs(sp) >= std::cos(1e-6)) throw GimbalLock();
  EulerAngles e;
  e.pitch = std::asin(sp);
  e.roll = std::atan2(r(2, 1), r(2, 2));
  e.yaw = std::atan2(r(1, 0), r(0, 0));
  return e;
}

double wrap_pi(double angle) {
  double a = std::fmod(angle + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

}  // namespace dero
