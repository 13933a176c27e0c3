#include "dero/types.hpp"

#include <cmath>

namespace dero {

void NoiseConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidConfig(std::string(name) + " must be strictly positive");
  };
  positive(sigma_g, "sigma_g");
  positive(sigma_bg, "sigma_bg");
  positive(sigma_sr, "sigma_sr");
  positive(sigma_a, "sigma_a");
  positive(sigma_r_nominal, "sigma_r_nominal");
  positive(sigma_f, "sigma_f");
  positive(tau_b, "tau_b");
  positive(tau_r, "tau_r");
  positive(gamma, "gamma");
  positive(kappa, "kappa");
  positive(gravity, "gravity");
  if (p0_pos < 0.0 || p0_bg < 0.0 || p0_sr < 0.0 || (p0_att.array() < 0.0).any())
    throw InvalidConfig("initial covariance entries must be non-negative");
}

Extrinsics validate_extrinsics(const Extrinsics& e) {
  if (!e.p_r_b.allFinite()) throw InvalidCalibration("lever arm has non-finite components");
  const double n = e.q_b_r.norm();
  if (!std::isfinite(n) || n < 1e-9) throw InvalidCalibration("extrinsic rotation has zero or non-finite norm");
  Extrinsics out = e;
  out.q_b_r = quat_normalize(e.q_b_r);
  return out;
}

Vec3 unit_direction(const RadarTarget& tgt) {
  const double r = tgt.position.norm();
  if (r <= 0.0 || !std::isfinite(r)) throw ZeroRange();
  return tgt.position / r;
}

}  // namespace dero
