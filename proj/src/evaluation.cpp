#include "dero/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace dero {

namespace {

// injective, time-ordered nearest-neighbor association
std::vector<std::pair<std::size_t, std::size_t>> associate(std::span<const StampedPose> est,
                                                           std::span<const StampedPose> gt,
                                                           double max_dt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (gt.empty()) return pairs;
  std::size_t j = 0;
  std::ptrdiff_t last_j = -1;
  for (std::size_t i = 0; i < est.size(); ++i) {
    while (j + 1 < gt.size() && std::abs(gt[j + 1].t - est[i].t) <= std::abs(gt[j].t - est[i].t)) ++j;
    if (std::abs(gt[j].t - est[i].t) <= max_dt && static_cast<std::ptrdiff_t>(j) > last_j) {
      pairs.emplace_back(i, j);
      last_j = static_cast<std::ptrdiff_t>(j);
    }
  }
  return pairs;
}

// atan2 form keeps full precision for small angles, unlike acos(trace)
double rotation_angle(const Mat3& r) {
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0));
}

}  // namespace

std::pair<YawAlignment, AlignedPair> align_position_yaw(std::span<const StampedPose> est,
                                                        std::span<const StampedPose> gt, double max_dt) {
  const auto pairs = associate(est, gt, max_dt);
  if (pairs.size() < 2) throw TooFewPairs();

  Vec3 mu_e = Vec3::Zero(), mu_g = Vec3::Zero();
  for (const auto& [i, j] : pairs) {
    mu_e += est[i].p;
    mu_g += gt[j].p;
  }
  mu_e /= static_cast<double>(pairs.size());
  mu_g /= static_cast<double>(pairs.size());

  // yaw from the 2D cross/dot correlation of centered horizontal positions
  double sx = 0.0, cx = 0.0;
  for (const auto& [i, j] : pairs) {
    const Vec3 e = est[i].p - mu_e;
    const Vec3 g = gt[j].p - mu_g;
    sx += e.x() * g.y() - e.y() * g.x();
    cx += e.x() * g.x() + e.y() * g.y();
  }

  YawAlignment align;
  align.yaw = std::atan2(sx, cx);
  const Mat3 r_yaw = quat_to_rot(quat_from_euler(0.0, 0.0, align.yaw));
  align.translation = mu_g - r_yaw * mu_e;
  const Quat q_yaw = quat_from_euler(0.0, 0.0, align.yaw);

  AlignedPair out;
  out.t.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    out.t.push_back(gt[j].t);
    out.p_est.push_back(r_yaw * est[i].p + align.translation);
    out.q_est.push_back(quat_mul(q_yaw, est[i].q));
    out.p_gt.push_back(gt[j].p);
    out.q_gt.push_back(gt[j].q);
  }
  return {align, out};
}

AteResult ate(const AlignedPair& pair) {
  AteResult res;
  res.pairs = static_cast<int>(pair.size());
  if (pair.size() == 0) return res;
  double ss_t = 0.0, ss_r = 0.0;
  for (std::size_t k = 0; k < pair.size(); ++k) {
    ss_t += (pair.p_est[k] - pair.p_gt[k]).squaredNorm();
    const double ang =
        rotation_angle(quat_to_rot(pair.q_est[k]).transpose() * quat_to_rot(pair.q_gt[k]));
    ss_r += ang * ang;
  }
  res.translation_rmse = std::sqrt(ss_t / static_cast<double>(pair.size()));
  res.rotation_rmse_deg = std::sqrt(ss_r / static_cast<double>(pair.size())) * 180.0 / M_PI;
  return res;
}

std::vector<RelErrBin> relative_errors(const AlignedPair& pair, std::span<const double> distances) {
  const std::size_t n = pair.size();
  std::vector<double> arc(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) arc[k] = arc[k - 1] + (pair.p_gt[k] - pair.p_gt[k - 1]).norm();

  std::vector<RelErrBin> bins;
  for (const double d : distances) {
    RelErrBin bin;
    bin.distance = d;
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = std::lower_bound(arc.begin() + static_cast<std::ptrdiff_t>(i), arc.end(), arc[i] + d);
      if (it == arc.end()) break;
      const auto j = static_cast<std::size_t>(it - arc.begin());

      const Mat3 re_i = quat_to_rot(pair.q_est[i]);
      const Mat3 rg_i = quat_to_rot(pair.q_gt[i]);
      const Vec3 dp_e = re_i.transpose() * (pair.p_est[j] - pair.p_est[i]);
      const Vec3 dp_g = rg_i.transpose() * (pair.p_gt[j] - pair.p_gt[i]);
      const Mat3 dr_e = re_i.transpose() * quat_to_rot(pair.q_est[j]);
      const Mat3 dr_g = rg_i.transpose() * quat_to_rot(pair.q_gt[j]);

      bin.translation_err.push_back((dp_g - dp_e).norm());
      bin.rotation_err_deg.push_back(rotation_angle(dr_e.transpose() * dr_g) * 180.0 / M_PI);
    }
    bin.too_short = bin.translation_err.empty();
    bins.push_back(std::move(bin));
  }
  return bins;
}

}  // namespace dero
