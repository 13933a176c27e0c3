#include "dero/icp.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <unordered_map>

#include <Eigen/Dense>

namespace dero {

namespace {

// Uniform voxel hash for nearest-neighbor queries on larger clouds.
class VoxelGrid {
 public:
  VoxelGrid(std::span<const Vec3> pts, double cell) : pts_(pts), cell_(cell) {
    cells_.reserve(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) cells_[key(pts[i])].push_back(static_cast<int>(i));
  }

  int nearest(const Vec3& q, double max_dist, double* dist_out) const {
    const int reach = static_cast<int>(std::ceil(max_dist / cell_));
    const Eigen::Vector3i c = coords(q);
    int best = -1;
    double best_d2 = max_dist * max_dist;
    for (int dx = -reach; dx <= reach; ++dx)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dz = -reach; dz <= reach; ++dz) {
          const auto it = cells_.find(pack(c.x() + dx, c.y() + dy, c.z() + dz));
          if (it == cells_.end()) continue;
          for (int i : it->second) {
            const double d2 = (pts_[i] - q).squaredNorm();
            if (d2 < best_d2) {
              best_d2 = d2;
              best = i;
            }
          }
        }
    if (best >= 0 && dist_out) *dist_out = std::sqrt(best_d2);
    return best;
  }

 private:
  Eigen::Vector3i coords(const Vec3& p) const {
    return {static_cast<int>(std::floor(p.x() / cell_)), static_cast<int>(std::floor(p.y() / cell_)),
            static_cast<int>(std::floor(p.z() / cell_))};
  }
  static std::int64_t pack(int x, int y, int z) {
    auto u = [](int v) { return static_cast<std::int64_t>(static_cast<std::uint32_t>(v + (1 << 20))); };
    return (u(x) << 42) | (u(y) << 21) | u(z);
  }
  std::int64_t key(const Vec3& p) const {
    const auto c = coords(p);
    return pack(c.x(), c.y(), c.z());
  }

  std::span<const Vec3> pts_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

int brute_nearest(std::span<const Vec3> pts, const Vec3& q, double max_dist, double* dist_out) {
  int best = -1;
  double best_d2 = max_dist * max_dist;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  if (best >= 0 && dist_out) *dist_out = std::sqrt(best_d2);
  return best;
}

struct Alignment {
  Mat3 rot;
  Vec3 trans;
  double rms;
  int matched;
};

}  // namespace

IcpResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target, const Mat3& rot_init,
                       const Vec3& trans_init, const IcpParams& params) {
  if (static_cast<int>(source.size()) < params.min_points ||
      static_cast<int>(target.size()) < params.min_points)
    throw TooFewPoints();

  const bool use_grid = target.size() >= 1000;
  std::unique_ptr<VoxelGrid> grid;
  if (use_grid) grid = std::make_unique<VoxelGrid>(target, std::max(0.25, params.max_corr_dist));

  Mat3 rot = rot_init;
  Vec3 trans = trans_init;

  IcpResult result;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    // associate
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      const Vec3 moved = rot * source[i] + trans;
      const int j = use_grid ? grid->nearest(moved, params.max_corr_dist, nullptr)
                             : brute_nearest(target, moved, params.max_corr_dist, nullptr);
      if (j >= 0) pairs.emplace_back(static_cast<int>(i), j);
    }
    if (pairs.size() < 3) throw DegenerateGeometry("fewer than 3 matched pairs");

    // closed-form rigid alignment on the matched pairs
    Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
    for (const auto& [i, j] : pairs) {
      mu_s += source[i];
      mu_t += target[j];
    }
    mu_s /= static_cast<double>(pairs.size());
    mu_t /= static_cast<double>(pairs.size());

    Mat3 cross = Mat3::Zero();
    for (const auto& [i, j] : pairs) cross += (source[i] - mu_s) * (target[j] - mu_t).transpose();

    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) < 1e-12 * std::max(1.0, svd.singularValues()(0)))
      throw DegenerateGeometry("cross-covariance rank < 2");
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 rot_new = svd.matrixV() * d * svd.matrixU().transpose();
    const Vec3 trans_new = mu_t - rot_new * mu_s;

    double ss = 0.0;
    for (const auto& [i, j] : pairs) ss += (rot_new * source[i] + trans_new - target[j]).squaredNorm();
    const double rms = std::sqrt(ss / static_cast<double>(pairs.size()));

    const double dtrans = (trans_new - trans).norm();
    const double cos_dang = std::clamp(0.5 * ((rot_new * rot.transpose()).trace() - 1.0), -1.0, 1.0);
    const double dang = std::acos(cos_dang);

    rot = rot_new;
    trans = trans_new;
    result.fitness = rms;
    result.matched_count = static_cast<int>(pairs.size());

    if (dtrans < params.transform_tol && dang < params.transform_tol) {
      result.converged = true;
      break;
    }
  }

  result.rotation = rot;
  result.translation = trans;
  return result;
}

double fitness_to_sigma(double fitness, int matched_count, double sigma_floor, double sigma_scale) {
  const double n = std::max(1, matched_count);
  return std::max(sigma_floor, sigma_scale * fitness / std::sqrt(n));
}

}  // namespace dero
