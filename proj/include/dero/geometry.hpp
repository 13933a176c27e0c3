#pragma once

#include <Eigen/Core>

#include "dero/errors.hpp"

namespace dero {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Scalar-first Hamilton unit quaternion. C(q) maps body-frame vectors into
// the navigation frame (q_b^n convention); C(a*b) = C(a)*C(b).
struct Quat {
  double w{1.0};
  double x{0.0};
  double y{0.0};
  double z{0.0};

  Quat() = default;
  Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

  Vec3 vec() const { return {x, y, z}; }
  double norm() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
};

// 3-2-1 (yaw-pitch-roll) Euler angles, radians.
struct EulerAngles {
  double roll{0.0};
  double pitch{0.0};
  double yaw{0.0};
};

// Cross-product matrix: skew(v) * u == v x u.
Mat3 skew(const Vec3& v);

Quat quat_normalize(const Quat& q);

// Hamilton product, renormalized.
Quat quat_mul(const Quat& a, const Quat& b);

// Direction cosine matrix of q (body-to-nav for q_b^n).
Mat3 quat_to_rot(const Quat& q);

// Exact exponential of the rotation vector theta (angle = |theta|).
Quat quat_exp(const Vec3& theta);

// Rotation-vector logarithm; inverse of quat_exp for angles < pi.
Vec3 quat_log(const Quat& q);

// Zero-order-hold attitude step: solves qdot = 0.5 q (x) omega over dt with
// the exact rotation-vector exponential.
Quat quat_integrate(const Quat& q, const Vec3& omega, double dt);

// First-order error quaternion normalize([1, 0.5 dpsi]). Valid |dpsi| < 0.5 rad.
Quat small_angle_quat(const Vec3& dpsi);

Quat quat_from_euler(const EulerAngles& e);
Quat quat_from_euler(double roll, double pitch, double yaw);

// 3-2-1 extraction. Throws GimbalLock when pitch is within 1e-6 rad of +/-90 deg.
EulerAngles euler_from_quat(const Quat& q);

// Wrap angle to (-pi, pi].
double wrap_pi(double angle);

}  // namespace dero
