#include "dero/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dero/random.hpp"

namespace dero {

namespace {

// quintic smoothstep and derivatives (C2 at both ends)
double smoothstep5(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
double smoothstep5_d(double x) { return 30.0 * x * x * (1.0 + x * (-2.0 + x)); }
double smoothstep5_dd(double x) { return 60.0 * x * (1.0 + x * (-3.0 + 2.0 * x)); }
double smoothstep5_int(double x) {  // integral of smoothstep5 from 0
  return x * x * x * x * (2.5 + x * (-3.0 + x));
}

// symmetric hold + quintic ramp + cruise + ramp-down + hold parametrization
// of a path parameter u; the platform is at rest at both ends
struct RampedParam {
  double hold{0.0};
  double ramp{0.0};
  double duration{0.0};
  double rate{0.0};  // cruise du/dt

  double total_u() const { return rate * effective_motion_time(); }
  double effective_motion_time() const { return duration - 2.0 * hold - ramp; }

  // u, du/dt, d2u/dt2
  void eval(double t, double& u, double& du, double& ddu) const {
    const double tm = t - hold;
    const double t_end = duration - hold;  // motion stops here
    if (tm <= 0.0) {
      u = du = ddu = 0.0;
      return;
    }
    if (t >= t_end) {
      u = total_u();
      du = ddu = 0.0;
      return;
    }
    if (ramp > 0.0 && tm < ramp) {
      const double x = tm / ramp;
      u = rate * ramp * smoothstep5_int(x);
      du = rate * smoothstep5(x);
      ddu = rate * smoothstep5_d(x) / ramp;
      return;
    }
    const double remaining = t_end - t;
    if (ramp > 0.0 && remaining < ramp) {
      const double x = remaining / ramp;
      u = total_u() - rate * ramp * smoothstep5_int(x);
      du = rate * smoothstep5(x);
      ddu = -rate * smoothstep5_d(x) / ramp;
      return;
    }
    u = rate * (0.5 * ramp + (tm - ramp));
    du = rate;
    ddu = 0.0;
  }
};

class StationaryModel final : public TrajectoryModel {
 public:
  TruthSample at(double t) const override {
    TruthSample s;
    s.t = t;
    return s;
  }
};

// planar curve c(u) with analytic derivatives; yaw follows the heading
class PlanarCurveModel : public TrajectoryModel {
 public:
  PlanarCurveModel(RampedParam param) : param_(param) {}

  TruthSample at(double t) const override {
    double u, du, ddu;
    param_.eval(t, u, du, ddu);
    Eigen::Vector2d c, c1, c2;
    curve(u, c, c1, c2);

    TruthSample s;
    s.t = t;
    s.p = Vec3(c.x(), c.y(), 0.0);
    s.v = Vec3(c1.x() * du, c1.y() * du, 0.0);
    s.a = Vec3(c2.x() * du * du + c1.x() * ddu, c2.y() * du * du + c1.y() * ddu, 0.0);

    const double yaw = std::atan2(c1.y(), c1.x());
    s.q = quat_from_euler(0.0, 0.0, yaw);
    const double dyaw_du = (c1.x() * c2.y() - c1.y() * c2.x()) / c1.squaredNorm();
    s.omega = Vec3(0.0, 0.0, dyaw_du * du);
    return s;
  }

 protected:
  virtual void curve(double u, Eigen::Vector2d& c, Eigen::Vector2d& c1, Eigen::Vector2d& c2) const = 0;

 private:
  RampedParam param_;
};

class CircleModel final : public PlanarCurveModel {
 public:
  CircleModel(RampedParam param, double radius) : PlanarCurveModel(param), r_(radius) {}

 protected:
  void curve(double u, Eigen::Vector2d& c, Eigen::Vector2d& c1, Eigen::Vector2d& c2) const override {
    c = {r_ * std::sin(u), r_ * (1.0 - std::cos(u))};
    c1 = {r_ * std::cos(u), r_ * std::sin(u)};
    c2 = {-r_ * std::sin(u), r_ * std::cos(u)};
  }

 private:
  double r_;
};

// Gerono lemniscate (A sin u, A/2 sin 2u)
class Figure8Model final : public PlanarCurveModel {
 public:
  Figure8Model(RampedParam param, double half_width) : PlanarCurveModel(param), a_(half_width) {}

  // arc length of the unit lemniscate over one period
  static double unit_length() {
    static const double value = [] {
      const int n = 1 << 14;
      const double h = 2.0 * M_PI / n;
      auto f = [](double u) {
        const double c1 = std::cos(u), c2 = std::cos(2.0 * u);
        return std::sqrt(c1 * c1 + c2 * c2);
      };
      double sum = f(0.0) + f(2.0 * M_PI);
      for (int i = 1; i < n; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
      return sum * h / 3.0;
    }();
    return value;
  }

 protected:
  void curve(double u, Eigen::Vector2d& c, Eigen::Vector2d& c1, Eigen::Vector2d& c2) const override {
    c = {a_ * std::sin(u), 0.5 * a_ * std::sin(2.0 * u)};
    c1 = {a_ * std::cos(u), a_ * std::cos(2.0 * u)};
    c2 = {-a_ * std::sin(u), -2.0 * a_ * std::sin(2.0 * u)};
  }

 private:
  double a_;
};

// natural cubic spline through waypoints with a whole-motion quintic time
// warp (zero velocity and acceleration at both ends)
class SplineModel final : public TrajectoryModel {
 public:
  SplineModel(std::vector<Vec3> pts, double hold, double motion_time) : hold_(hold), tm_(motion_time) {
    const int n = static_cast<int>(pts.size());
    knots_.resize(n);
    knots_[0] = 0.0;
    for (int i = 1; i < n; ++i) knots_[i] = knots_[i - 1] + std::max(1e-6, (pts[i] - pts[i - 1]).norm());
    total_ = knots_.back();
    for (int axis = 0; axis < 3; ++axis) {
      Eigen::VectorXd y(n);
      for (int i = 0; i < n; ++i) y(i) = pts[i](axis);
      m_[axis] = second_derivatives(y);
      y_[axis] = y;
    }
  }

  TruthSample at(double t) const override {
    TruthSample s;
    s.t = t;
    double ss, ds, dds;
    warp(t, ss, ds, dds);
    Vec3 p, d1, d2;
    eval_spline(ss, p, d1, d2);
    s.p = p;
    s.v = d1 * ds;
    s.a = d2 * ds * ds + d1 * dds;

    const double vxy = std::hypot(d1.x(), d1.y());
    double yaw = 0.0;
    if (vxy > 1e-9) yaw = std::atan2(d1.y(), d1.x());
    s.q = quat_from_euler(0.0, 0.0, yaw);
    double dyaw_ds = 0.0;
    if (vxy > 1e-9) dyaw_ds = (d1.x() * d2.y() - d1.y() * d2.x()) / (vxy * vxy);
    s.omega = Vec3(0.0, 0.0, dyaw_ds * ds);
    return s;
  }

 private:
  // arc-length warp with zero velocity and acceleration at both ends
  void warp(double t, double& ss, double& ds, double& dds) const {
    const double tm = std::clamp(t - hold_, 0.0, tm_);
    const double x = tm / tm_;
    ss = total_ * smoothstep5(x);
    ds = total_ * smoothstep5_d(x) / tm_;
    dds = total_ * smoothstep5_dd(x) / (tm_ * tm_);
    if (t < hold_ || t > hold_ + tm_) {
      ds = 0.0;
      dds = 0.0;
    }
  }

  Eigen::VectorXd second_derivatives(const Eigen::VectorXd& y) const {
    const int n = static_cast<int>(knots_.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    a(0, 0) = 1.0;
    a(n - 1, n - 1) = 1.0;
    for (int i = 1; i + 1 < n; ++i) {
      const double h0 = knots_[i] - knots_[i - 1];
      const double h1 = knots_[i + 1] - knots_[i];
      a(i, i - 1) = h0 / 6.0;
      a(i, i) = (h0 + h1) / 3.0;
      a(i, i + 1) = h1 / 6.0;
      b(i) = (y(i + 1) - y(i)) / h1 - (y(i) - y(i - 1)) / h0;
    }
    return a.partialPivLu().solve(b);
  }

  void eval_spline(double s, Vec3& p, Vec3& d1, Vec3& d2) const {
    const int n = static_cast<int>(knots_.size());
    int i = static_cast<int>(std::upper_bound(knots_.begin(), knots_.end(), s) - knots_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - s) / h;
    const double b = (s - knots_[i]) / h;
    for (int axis = 0; axis < 3; ++axis) {
      const double y0 = y_[axis](i), y1 = y_[axis](i + 1);
      const double m0 = m_[axis](i), m1 = m_[axis](i + 1);
      p(axis) = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
      d1(axis) = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
      d2(axis) = a * m0 + b * m1;
    }
  }

  double hold_, tm_, total_{0.0};
  std::vector<double> knots_;
  Eigen::VectorXd y_[3];
  Eigen::VectorXd m_[3];
};

}  // namespace

std::unique_ptr<TrajectoryModel> make_trajectory(const TrajectoryProfile& profile) {
  if (profile.duration <= 0.0) throw InvalidConfig("trajectory duration must be positive");
  switch (profile.kind) {
    case ProfileKind::kStationary:
      return std::make_unique<StationaryModel>();
    case ProfileKind::kCircle: {
      RampedParam param{profile.hold, profile.ramp, profile.duration, 0.0};
      const double tm = param.effective_motion_time();
      if (tm <= 0.0) throw InvalidConfig("duration too short for holds + ramps");
      const double lap = 2.0 * M_PI * profile.size;
      const double laps = std::max(1.0, std::round(profile.speed * tm / lap));
      param.rate = 2.0 * M_PI * laps / tm;
      return std::make_unique<CircleModel>(param, profile.size);
    }
    case ProfileKind::kFigure8: {
      RampedParam param{profile.hold, profile.ramp, profile.duration, 0.0};
      const double tm = param.effective_motion_time();
      if (tm <= 0.0) throw InvalidConfig("duration too short for holds + ramps");
      const double lap = profile.size * Figure8Model::unit_length();
      const double laps = std::max(1.0, std::round(profile.speed * tm / lap));
      param.rate = 2.0 * M_PI * laps / tm;
      return std::make_unique<Figure8Model>(param, profile.size);
    }
    case ProfileKind::kWaypointSpline: {
      std::vector<Vec3> pts = profile.waypoints;
      if (pts.empty()) {
        const double s = profile.size;
        pts = {{0, 0, 0}, {s, 0, 0}, {s, s, -0.5}, {0, s, -1.0}, {-0.3 * s, 0.4 * s, -0.5}, {0, 0, 0}};
      }
      if (pts.size() < 3) throw InvalidConfig("spline needs at least 3 waypoints");
      double chord = 0.0;
      for (std::size_t i = 1; i < pts.size(); ++i) chord += (pts[i] - pts[i - 1]).norm();
      const double tm = profile.duration - profile.hold;
      if (tm <= 0.0) throw InvalidConfig("duration too short for hold");
      return std::make_unique<SplineModel>(std::move(pts), profile.hold, tm);
    }
  }
  throw InvalidConfig("unknown trajectory kind");
}

std::vector<TruthSample> gen_trajectory(const TrajectoryProfile& profile, double rate) {
  const auto model = make_trajectory(profile);
  const auto n = static_cast<std::size_t>(std::floor(profile.duration * rate));
  std::vector<TruthSample> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) out.push_back(model->at(static_cast<double>(i) / rate));
  return out;
}

std::vector<ImuSample> synth_imu(std::span<const TruthSample> truth, const Vec3& gyro_bias0,
                                 const Vec3& accel_bias, const NoiseConfig& cfg, std::uint64_t seed) {
  std::vector<ImuSample> out;
  if (truth.size() < 2) return out;
  out.reserve(truth.size() - 1);

  std::mt19937_64 rng(derive_seed(seed, 0x1a2b));
  std::normal_distribution<double> gauss;
  auto randn3 = [&] { return Vec3(gauss(rng), gauss(rng), gauss(rng)); };

  Vec3 b_g = gyro_bias0;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    const auto& prev = truth[i - 1];
    const auto& cur = truth[i];
    const double dt = cur.t - prev.t;

    // exact first-order Markov step for the bias (random walk as tau -> inf)
    const double decay = std::exp(-dt / cfg.tau_b);
    const double var = std::isfinite(cfg.tau_b) ? 0.5 * cfg.tau_b * (1.0 - decay * decay) : dt;
    b_g = decay * b_g + cfg.sigma_bg * std::sqrt(var) * randn3();

    ImuSample s;
    s.t = cur.t;
    const Vec3 mean_rate = quat_log(quat_mul(prev.q.conjugate(), cur.q)) / dt;
    s.gyro = mean_rate + b_g + (cfg.sigma_g / std::sqrt(dt)) * randn3();

    const Mat3 c_n_b = quat_to_rot(cur.q).transpose();
    const Vec3 g_n(0.0, 0.0, cfg.gravity);
    s.accel = c_n_b * (cur.a - g_n) + accel_bias + (cfg.sigma_f / std::sqrt(dt)) * randn3();
    out.push_back(s);
  }
  return out;
}

std::vector<RadarScan> synth_radar(std::span<const TruthSample> truth, const SimEnvironment& env,
                                   const Vec3& scale, double sigma_doppler, double outlier_rate,
                                   const Extrinsics& ext, double radar_rate, std::uint64_t seed) {
  std::vector<RadarScan> out;
  if (truth.size() < 2) return out;
  const double imu_rate = 1.0 / (truth[1].t - truth[0].t);
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(imu_rate / radar_rate)));

  // landmarks in a box around the path
  Vec3 lo = truth.front().p, hi = truth.front().p;
  for (const auto& s : truth) {
    lo = lo.cwiseMin(s.p);
    hi = hi.cwiseMax(s.p);
  }
  const double margin = std::max(0.4 * env.max_range, 5.0);
  lo -= Vec3(margin, margin, 3.0);
  hi += Vec3(margin, margin, 1.5);

  std::mt19937_64 lm_rng(derive_seed(seed, 0xfeed));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> landmarks(env.n_landmarks);
  for (auto& lm : landmarks)
    lm = Vec3(lo.x() + uni(lm_rng) * (hi.x() - lo.x()), lo.y() + uni(lm_rng) * (hi.y() - lo.y()),
              lo.z() + uni(lm_rng) * (hi.z() - lo.z()));

  const double fov = env.fov_half_deg * M_PI / 180.0;
  const Mat3 c_b_r = ext.C_b_r();
  const Vec3 inv_scale = scale.cwiseInverse();

  for (std::size_t i = stride; i < truth.size(); i += stride) {
    const auto& ts = truth[i];
    RadarScan scan;
    scan.t = ts.t;
    std::mt19937_64 rng(derive_seed(seed, 0xabc000 + i));
    std::normal_distribution<double> gauss;

    if (uni(rng) >= env.dropout) {
      const Mat3 c_n_b = quat_to_rot(ts.q).transpose();
      const Vec3 p_radar_n = ts.p + quat_to_rot(ts.q) * ext.p_r_b;
      const Vec3 v_r = c_b_r * (c_n_b * ts.v + ts.omega.cross(ext.p_r_b));

      std::vector<RadarTarget> visible;
      for (const auto& lm : landmarks) {
        const Vec3 x_r = c_b_r * (c_n_b * (lm - p_radar_n));
        const double range = x_r.norm();
        if (range < env.min_range || range > env.max_range) continue;
        if (std::abs(std::atan2(x_r.y(), x_r.x())) > fov) continue;
        if (std::abs(std::atan2(x_r.z(), std::hypot(x_r.x(), x_r.y()))) > fov) continue;
        RadarTarget tgt;
        tgt.position = x_r;
        tgt.doppler = -(x_r / range).dot(inv_scale.asDiagonal() * v_r) + sigma_doppler * gauss(rng);
        tgt.power = 20.0 - 20.0 * std::log10(range);
        visible.push_back(tgt);
      }
      std::shuffle(visible.begin(), visible.end(), rng);
      if (static_cast<int>(visible.size()) > env.max_targets) visible.resize(env.max_targets);
      for (auto& tgt : visible) {
        if (uni(rng) < outlier_rate) {
          const double mag = 0.5 + 4.5 * uni(rng);
          tgt.doppler += (uni(rng) < 0.5 ? -mag : mag);
        }
      }
      scan.targets = std::move(visible);
    }
    out.push_back(std::move(scan));
  }
  return out;
}

}  // namespace dero
