#include "dero/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "dero/random.hpp"

namespace dero {

AlignmentResult coarse_alignment(std::span<const ImuSample> window, const NoiseConfig& cfg) {
  if (window.size() < 2 || window.back().t - window.front().t < 1.0) throw WindowTooShort();
  const double n = static_cast<double>(window.size());

  Vec3 mean_w = Vec3::Zero(), mean_f = Vec3::Zero();
  for (const auto& s : window) {
    mean_w += s.gyro;
    mean_f += s.accel;
  }
  mean_w /= n;
  mean_f /= n;

  // gate against the expected discrete sample variance at the stream rate
  Vec3 var = Vec3::Zero();
  for (const auto& s : window) var += (s.gyro - mean_w).cwiseAbs2();
  var /= n;
  const double rate = (n - 1.0) / (window.back().t - window.front().t);
  const double var_limit = 10.0 * cfg.sigma_g * cfg.sigma_g * rate;
  if ((var.array() > var_limit).any()) throw NotStationary();

  AlignmentResult out;
  out.b_g = mean_w;
  const auto [roll, pitch] = tilt_measurement(mean_f, cfg.gravity);
  out.roll = roll;
  out.pitch = pitch;
  const Mat3 c_n_b = quat_to_rot(quat_from_euler(roll, pitch, 0.0)).transpose();
  out.b_a = mean_f - c_n_b * Vec3(0.0, 0.0, -cfg.gravity);
  return out;
}

ErrorDynamics assemble_error_dynamics(const DrState& state, const Vec3& v_r_meas, const Vec3& omega,
                                      const Extrinsics& ext, const NoiseConfig& cfg) {
  ErrorDynamics d;
  const Mat3 c_b_n = quat_to_rot(state.q);
  const Mat3 c_r_b = ext.C_r_b();
  const Vec3 v_r_hat = state.s_r.asDiagonal() * v_r_meas;

  d.F.block<3, 3>(kIdxPos, kIdxAtt) = -skew(c_b_n * omega.cross(ext.p_r_b) - c_b_n * (c_r_b * v_r_hat));
  d.F.block<3, 3>(kIdxPos, kIdxBg) = -c_b_n * skew(ext.p_r_b);
  d.F.block<3, 3>(kIdxPos, kIdxSr) = c_b_n * c_r_b * v_r_meas.asDiagonal();
  d.F.block<3, 3>(kIdxAtt, kIdxBg) = c_b_n;
  d.F.block<3, 3>(kIdxBg, kIdxBg) = -Mat3::Identity() / cfg.tau_b;
  d.F.block<3, 3>(kIdxSr, kIdxSr) = -Mat3::Identity() / cfg.tau_r;

  // noise columns ordered (n_r, n_g, n_bg, n_sr)
  d.G.block<3, 3>(kIdxPos, 0) = c_b_n * c_r_b * state.s_r.asDiagonal();
  d.G.block<3, 3>(kIdxPos, 3) = c_b_n * skew(ext.p_r_b);
  d.G.block<3, 3>(kIdxAtt, 3) = -c_b_n;
  d.G.block<6, 6>(kIdxBg, kIdxBg).setIdentity();
  return d;
}

Mat12 discretize_phi(const Mat12& F, double T) {
  return Mat12::Identity() + F * T + 0.5 * (F * F) * (T * T);
}

Vec3 time_update(AugmentedBelief& belief, const Vec3& v_r_meas, const Mat3& Q_scan, const Vec3& omega,
                 const Extrinsics& ext, const NoiseConfig& cfg, double T, const FilterParams& params,
                 bool hold_pose) {
  const ErrorDynamics dyn = assemble_error_dynamics(belief.dr, v_r_meas, omega, ext, cfg);
  const Mat12 phi = discretize_phi(dyn.F, T);

  Mat12 qd = Mat12::Zero();
  qd.block<3, 3>(0, 0) = Q_scan;
  qd.block<3, 3>(3, 3) = cfg.sigma_g * cfg.sigma_g * Mat3::Identity();
  qd.block<3, 3>(6, 6) = cfg.sigma_bg * cfg.sigma_bg * Mat3::Identity();
  qd.block<3, 3>(9, 9) = cfg.sigma_sr * cfg.sigma_sr * Mat3::Identity();
  qd *= T;

  Vec3 v_n = Vec3::Zero();
  if (!hold_pose) {
    v_n = body_velocity_from_radar(v_r_meas, belief.dr.s_r, omega, belief.dr.q, ext);
    belief.dr.p += v_n * T;
  }
  belief.dr.b_g *= std::exp(-T / cfg.tau_b);
  if (params.estimate_scale) belief.dr.s_r *= std::exp(-T / cfg.tau_r);

  const Mat12 p11 = belief.P.block<kDrDim, kDrDim>(0, 0);
  const Eigen::Matrix<double, kDrDim, 6> p1c = belief.P.block<kDrDim, 6>(0, kIdxClonePos);
  belief.P.block<kDrDim, kDrDim>(0, 0) = phi * p11 * phi.transpose() + dyn.G * qd * dyn.G.transpose();
  belief.P.block<kDrDim, 6>(0, kIdxClonePos) = phi * p1c;
  belief.P.block<6, kDrDim>(kIdxClonePos, 0) = (phi * p1c).transpose();
  belief.P = (0.5 * (belief.P + belief.P.transpose())).eval();

  belief.Upsilon = phi * belief.Upsilon;
  belief.t += T;
  return v_n;
}

RangeResidual range_residual(const AugmentedBelief& belief, const Vec3& p_meas, const Extrinsics& ext,
                             const FilterParams& params) {
  const double stale_after = 2.0 * params.cloning_window * params.nominal_radar_period;
  if (belief.t - belief.clone.t > stale_after + 1e-9) throw StaleClone();

  const Mat3 c_bk_n = quat_to_rot(belief.dr.q);
  const Mat3 a = ext.C_b_r() * quat_to_rot(belief.clone.q).transpose();

  RangeResidual rr;
  rr.z = a * (belief.dr.p - belief.clone.p) - p_meas;
  rr.H.block<3, 3>(0, kIdxPos) = a;
  rr.H.block<3, 3>(0, kIdxAtt) = a * skew(c_bk_n * ext.p_r_b);
  rr.H.block<3, 3>(0, kIdxClonePos) = -a;
  rr.H.block<3, 3>(0, kIdxCloneAtt) = a * skew(belief.clone.p - belief.dr.p - c_bk_n * ext.p_r_b);
  return rr;
}

Vec3 compensate_accel(const Vec3& f_meas, const AugmentedBelief& belief, const Vec3& v_now,
                      const Vec3& v_prev, double T) {
  const Mat3 c_n_b = quat_to_rot(belief.dr.q).transpose();
  return f_meas - belief.b_a - c_n_b * ((v_now - v_prev) / T);
}

std::pair<double, double> tilt_measurement(const Vec3& f, double gravity) {
  if (f.norm() <= 0.5 * gravity) throw FreeFall();
  const double roll = std::atan2(-f.y(), -f.z());
  const double pitch = std::atan(f.x() / std::sqrt(f.y() * f.y() + f.z() * f.z()));
  return {roll, pitch};
}

Eigen::Matrix<double, 2, 3> tilt_update_model(const Quat& q) {
  const EulerAngles e = euler_from_quat(q);
  if (std::abs(e.pitch) > 80.0 * M_PI / 180.0) throw GimbalLock("pitch beyond 80 deg for tilt update");
  const double cy = std::cos(e.yaw), sy = std::sin(e.yaw), ct = std::cos(e.pitch);
  Eigen::Matrix<double, 2, 3> h;
  h << -cy / ct, -sy / ct, 0.0,  //
      sy, -cy, 0.0;
  return h;
}

double adaptive_tilt_sigma(const Vec3& f, const NoiseConfig& cfg) {
  const double d = std::abs(f.norm() - cfg.gravity);
  if (d <= cfg.gamma) return cfg.sigma_a;
  const double r = d / cfg.gamma;
  return cfg.sigma_a * std::sqrt(1.0 + cfg.kappa * r * r);
}

UpdateInfo measurement_update(AugmentedBelief& belief, const Eigen::VectorXd& z, const Eigen::MatrixXd& H,
                              const Eigen::MatrixXd& R, const FilterParams& params) {
  const Eigen::MatrixXd S = H * belief.P * H.transpose() + R;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  UpdateInfo info;
  info.innovation_cond =
      smin > 0.0 ? svd.singularValues()(0) / smin : std::numeric_limits<double>::infinity();
  if (!(info.innovation_cond < params.max_innovation_cond)) throw SingularInnovation();

  const Eigen::MatrixXd K = S.ldlt().solve(H * belief.P).transpose();
  info.dx = K * z;

  const Mat18 ikh = Mat18::Identity() - K * H;
  belief.P = (ikh * belief.P * ikh.transpose() + K * R * K.transpose()).eval();
  belief.P = (0.5 * (belief.P + belief.P.transpose())).eval();

  // inject with the dx = estimate - truth convention
  const auto& dx = info.dx;
  belief.dr.p -= dx.segment<3>(kIdxPos);
  belief.dr.q = quat_mul(small_angle_quat(dx.segment<3>(kIdxAtt)), belief.dr.q);
  belief.dr.b_g -= dx.segment<3>(kIdxBg);
  if (params.estimate_scale) {
    belief.dr.s_r -= dx.segment<3>(kIdxSr);
    belief.dr.s_r =
        belief.dr.s_r.cwiseMax(params.scale_clamp_lo).cwiseMin(params.scale_clamp_hi).eval();
  }
  belief.clone.p -= dx.segment<3>(kIdxClonePos);
  belief.clone.q = quat_mul(small_angle_quat(dx.segment<3>(kIdxCloneAtt)), belief.clone.q);

  reclone(belief);
  return info;
}

void reclone(AugmentedBelief& belief) {
  belief.clone.p = belief.dr.p;
  belief.clone.q = belief.dr.q;
  belief.clone.t = belief.t;
  belief.P.block<6, 6>(kIdxClonePos, kIdxClonePos) = belief.P.block<6, 6>(0, 0);
  belief.P.block<kDrDim, 6>(0, kIdxClonePos) = belief.P.block<kDrDim, 6>(0, 0);
  belief.P.block<6, kDrDim>(kIdxClonePos, 0) = belief.P.block<6, kDrDim>(0, 0);
  belief.Upsilon = Mat12::Identity();
  belief.scan_count = 0;
}

namespace {

double rotation_angle(const Mat3& r) {
  return std::acos(std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0));
}

}  // namespace

RunResult run(std::span<const ImuSample> imu, std::span<const RadarScan> radar, const Extrinsics& ext_in,
              const RunOptions& opts) {
  if (imu.empty()) throw EmptyStream("empty IMU stream");
  if (radar.empty()) throw EmptyStream("empty radar stream");
  opts.noise.validate();
  const Extrinsics ext = validate_extrinsics(ext_in);
  const NoiseConfig& cfg = opts.noise;
  const FilterParams& fp = opts.filter;

  const double t0 = imu.front().t;
  std::size_t align_end = 1;
  while (align_end < imu.size() && imu[align_end].t <= t0 + fp.align_window) ++align_end;

  RunResult result;
  result.alignment = coarse_alignment(imu.subspan(0, align_end), cfg);

  double dt_imu = 0.0025;
  if (imu.size() > 1) dt_imu = (imu.back().t - imu.front().t) / static_cast<double>(imu.size() - 1);

  AugmentedBelief belief;
  belief.dr.b_g = result.alignment.b_g;
  belief.b_a = result.alignment.b_a;
  belief.dr.q = quat_from_euler(result.alignment.roll, result.alignment.pitch, 0.0);
  if (opts.init_pose) {
    belief.dr.p = opts.init_pose->p;
    belief.dr.q = quat_normalize(opts.init_pose->q);
  }
  const double start_t = imu[align_end - 1].t;
  belief.t = start_t;
  result.start_time = start_t;

  belief.P.setZero();
  belief.P.block<3, 3>(kIdxPos, kIdxPos) = cfg.p0_pos * cfg.p0_pos * Mat3::Identity();
  belief.P.block<3, 3>(kIdxAtt, kIdxAtt) = cfg.p0_att.cwiseAbs2().asDiagonal();
  belief.P.block<3, 3>(kIdxBg, kIdxBg) = cfg.p0_bg * cfg.p0_bg * Mat3::Identity();
  if (fp.estimate_scale)
    belief.P.block<3, 3>(kIdxSr, kIdxSr) = cfg.p0_sr * cfg.p0_sr * Mat3::Identity();
  reclone(belief);

  result.trajectory.push_back({belief.t, belief.dr});

  std::vector<Vec3> clone_cloud;
  std::vector<Vec3> curr_cloud;
  Vec3 v_prev = Vec3::Zero();
  double t_prev_epoch = start_t;
  double t_prev_imu = start_t;
  bool have_imu = false;
  ImuSample last_imu;

  std::size_t ri = 0;
  while (ri < radar.size() && radar[ri].t <= start_t) ++ri;

  auto process_imu = [&](const ImuSample& s) {
    const double dt = s.t - t_prev_imu;
    t_prev_imu = s.t;
    if (dt > 0.0) belief.dr.q = quat_integrate(belief.dr.q, s.gyro - belief.dr.b_g, dt);
    last_imu = s;
    have_imu = true;
  };

  auto process_scan = [&](const RadarScan& scan, std::size_t scan_index) {
    EpochDiagnostics diag;
    diag.t = scan.t;
    const double T = scan.t - t_prev_epoch;
    if (T > 1.0) diag.flagged = true;  // stream gap; Q_d scales with T
    t_prev_epoch = scan.t;
    belief.scan_count += 1;

    EgoVelEstimate est;
    bool est_ok = true;
    RansacParams rp = opts.ransac;
    rp.rng_seed = derive_seed(opts.seed, scan_index);
    try {
      est = ransac_ego_velocity(scan, rp, cfg.sigma_r_nominal);
    } catch (const Error&) {
      est_ok = false;
      diag.flagged = true;
    }

    const Vec3 v_meas = est_ok ? est.v : Vec3::Zero();
    const Mat3 q_scan =
        est_ok ? est.cov : Mat3(10.0 * cfg.sigma_r_nominal * cfg.sigma_r_nominal * Mat3::Identity());
    const Vec3 omega = have_imu ? Vec3(last_imu.gyro - belief.dr.b_g) : Vec3::Zero();

    const Vec3 v_now = time_update(belief, v_meas, q_scan, omega, ext, cfg, T, fp, !est_ok);
    belief.t = scan.t;

    diag.v_r = v_meas;
    diag.trace_q = q_scan.trace();
    diag.inlier_count = static_cast<int>(est.inliers.size());
    diag.scan_count = belief.scan_count;

    curr_cloud.clear();
    if (est_ok) {
      curr_cloud.reserve(est.inliers.size());
      for (int i : est.inliers) curr_cloud.push_back(scan.targets[i].position);
    }

    const bool dr_only = !fp.use_icp && !fp.use_tilt;
    if (belief.scan_count >= fp.cloning_window && !dr_only) {
      Eigen::Matrix<double, 5, 1> z = Eigen::Matrix<double, 5, 1>::Zero();
      Eigen::Matrix<double, 5, kAugDim> H = Eigen::Matrix<double, 5, kAugDim>::Zero();
      Eigen::Matrix<double, 5, 1> r_diag = Eigen::Matrix<double, 5, 1>::Zero();
      int rows = 0;

      if (fp.use_icp && est_ok && static_cast<int>(clone_cloud.size()) >= opts.icp.min_points &&
          static_cast<int>(curr_cloud.size()) >= opts.icp.min_points) {
        const Mat3 c_k = quat_to_rot(belief.dr.q);
        const Mat3 c_c = quat_to_rot(belief.clone.q);
        const Mat3 r_init = ext.C_b_r() * c_c.transpose() * c_k * ext.C_r_b();
        const Vec3 t_init =
            ext.C_b_r() * (c_c.transpose() * ((belief.dr.p + c_k * ext.p_r_b) -
                                              (belief.clone.p + c_c * ext.p_r_b)));
        try {
          const IcpResult icp = icp_register(curr_cloud, clone_cloud, r_init, t_init, opts.icp);
          if (rotation_angle(icp.rotation * r_init.transpose()) <=
              opts.icp.rotation_gate_deg * M_PI / 180.0) {
            const RangeResidual rr = range_residual(belief, icp.translation, ext, fp);
            const double sigma_pr =
                fitness_to_sigma(icp.fitness, icp.matched_count, opts.icp.sigma_floor, opts.icp.sigma_scale);
            z.segment<3>(rows) = rr.z;
            H.block<3, kAugDim>(rows, 0) = rr.H;
            r_diag.segment<3>(rows).setConstant(sigma_pr * sigma_pr);
            rows += 3;
            diag.sigma_pr = sigma_pr;
          } else {
            diag.flagged = true;
          }
        } catch (const Error&) {
          diag.flagged = true;
        }
      }

      if (fp.use_tilt && have_imu && std::abs(last_imu.t - scan.t) <= 0.5 * dt_imu + 1e-12) {
        try {
          const Vec3 f_hat = compensate_accel(last_imu.accel, belief, v_now, v_prev, T);
          const auto [roll_m, pitch_m] = tilt_measurement(f_hat, cfg.gravity);
          const Eigen::Matrix<double, 2, 3> h_a = tilt_update_model(belief.dr.q);
          const EulerAngles e = euler_from_quat(belief.dr.q);
          const double sigma_a_eff = adaptive_tilt_sigma(f_hat, cfg);
          z(rows) = wrap_pi(e.roll - roll_m);
          z(rows + 1) = wrap_pi(e.pitch - pitch_m);
          H.block<2, 3>(rows, kIdxAtt) = h_a;
          r_diag.segment<2>(rows).setConstant(sigma_a_eff * sigma_a_eff);
          rows += 2;
          diag.sigma_a_eff = sigma_a_eff;
        } catch (const Error&) {
          diag.flagged = true;
        }
      }

      if (rows > 0) {
        try {
          const UpdateInfo info = measurement_update(belief, z.head(rows), H.topRows(rows),
                                                     Eigen::MatrixXd(r_diag.head(rows).asDiagonal()), fp);
          diag.updated = true;
          diag.z_norm = z.head(rows).norm();
          diag.innovation_cond = info.innovation_cond;
        } catch (const SingularInnovation&) {
          diag.flagged = true;
          reclone(belief);
        }
      } else {
        reclone(belief);
      }
      clone_cloud = curr_cloud;
    }

    v_prev = v_now;
    result.trajectory.push_back({belief.t, belief.dr});
    result.diagnostics.push_back(diag);
  };

  std::size_t ii = align_end;
  while (ii < imu.size() || ri < radar.size()) {
    const bool imu_next =
        ri >= radar.size() || (ii < imu.size() && imu[ii].t <= radar[ri].t);
    if (imu_next) {
      process_imu(imu[ii]);
      ++ii;
    } else {
      process_scan(radar[ri], ri);
      ++ri;
    }
  }
  return result;
}

}  // namespace dero
