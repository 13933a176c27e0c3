#include "dero/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dero/dataset_io.hpp"
#include "dero/evaluation.hpp"
#include "dero/filter.hpp"
#include "dero/log.hpp"
#include "dero/simulator.hpp"

namespace dero {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

Vec3 parse_vec3(const std::string& s, const char* flag) {
  Vec3 v;
  std::stringstream ss(s);
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, tok, ',')) throw ParseError(std::string(flag) + " expects x,y,z");
    v(i) = std::stod(tok);
  }
  return v;
}

struct SimArgs {
  std::string out;
  std::string profile{"figure8"};
  double duration{60.0};
  double speed{3.0};
  double size{20.0};
  double hold{5.0};
  double ramp{3.0};
  std::uint64_t seed{0};
  double imu_rate{400.0};
  double radar_rate{10.0};
  double sigma_g{-1.0};
  double sigma_f{-1.0};
  double sigma_bg{-1.0};
  double sigma_doppler{0.05};
  double outlier_rate{0.0};
  std::string gyro_bias{"0,0,0"};
  std::string accel_bias{"0,0,0"};
  std::string scale{"1,1,1"};
  std::string calib_q{"1,0,0,0"};
  std::string calib_lever{"0,0,0"};
  int landmarks{300};
  double max_range{25.0};
  double fov{60.0};
  int max_targets{64};
  double dropout{0.0};
};

int cmd_sim(const SimArgs& a) {
  TrajectoryProfile profile;
  if (a.profile == "figure8") {
    profile.kind = ProfileKind::kFigure8;
  } else if (a.profile == "circle") {
    profile.kind = ProfileKind::kCircle;
  } else if (a.profile == "stationary") {
    profile.kind = ProfileKind::kStationary;
  } else if (a.profile == "spline") {
    profile.kind = ProfileKind::kWaypointSpline;
  } else {
    std::cerr << "unknown profile: " << a.profile << "\n";
    return 2;
  }
  profile.duration = a.duration;
  profile.speed = a.speed;
  profile.size = a.size;
  profile.hold = a.hold;
  profile.ramp = a.ramp;
  profile.seed = a.seed;

  // generation noise: defaults unless overridden; filter config in
  // calib.json always carries the defaults
  NoiseConfig gen_cfg;
  if (a.sigma_g >= 0.0) gen_cfg.sigma_g = std::max(a.sigma_g, 1e-12);
  if (a.sigma_f >= 0.0) gen_cfg.sigma_f = std::max(a.sigma_f, 1e-12);
  if (a.sigma_bg >= 0.0) gen_cfg.sigma_bg = std::max(a.sigma_bg, 1e-12);

  Extrinsics ext;
  {
    std::stringstream ss(a.calib_q);
    std::string tok;
    double q[4];
    for (double& qi : q) {
      if (!std::getline(ss, tok, ',')) throw ParseError("--calib-q expects w,x,y,z");
      qi = std::stod(tok);
    }
    ext.q_b_r = Quat(q[0], q[1], q[2], q[3]);
    ext.p_r_b = parse_vec3(a.calib_lever, "--calib-lever");
    ext = validate_extrinsics(ext);
  }

  const auto truth = gen_trajectory(profile, a.imu_rate);
  const auto imu =
      synth_imu(truth, parse_vec3(a.gyro_bias, "--gyro-bias"), parse_vec3(a.accel_bias, "--accel-bias"),
                gen_cfg, a.seed);

  SimEnvironment env;
  env.n_landmarks = a.landmarks;
  env.max_range = a.max_range;
  env.fov_half_deg = a.fov;
  env.max_targets = a.max_targets;
  env.dropout = a.dropout;
  const auto radar = synth_radar(truth, env, parse_vec3(a.scale, "--scale"), a.sigma_doppler,
                                 a.outlier_rate, ext, a.radar_rate, a.seed);

  // ground truth decimated to ~100 Hz
  const auto gt_stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(a.imu_rate / 100.0)));
  std::vector<StampedPose> gt;
  for (std::size_t i = 0; i < truth.size(); i += gt_stride)
    gt.push_back({truth[i].t, truth[i].p, truth[i].q});

  GenerationRecord gen;
  gen.profile = a.profile;
  gen.seed = a.seed;
  gen.duration = a.duration;
  gen.speed = a.speed;
  gen.size = a.size;
  gen.sigma_g = gen_cfg.sigma_g;
  gen.sigma_f = gen_cfg.sigma_f;
  gen.sigma_bg = gen_cfg.sigma_bg;
  gen.sigma_doppler = a.sigma_doppler;
  gen.outlier_rate = a.outlier_rate;
  gen.gyro_bias = parse_vec3(a.gyro_bias, "--gyro-bias");
  gen.accel_bias = parse_vec3(a.accel_bias, "--accel-bias");
  gen.scale = parse_vec3(a.scale, "--scale");

  write_dataset(a.out, imu, radar, gt, ext, NoiseConfig{}, a.imu_rate, a.radar_rate, gen);
  std::cout << "dataset written to " << a.out << " (" << imu.size() << " imu samples, " << radar.size()
            << " radar scans)\n";
  return 0;
}

struct RunArgs {
  std::string data;
  std::string out;
  std::string mode{"full"};
  int cloning_window{3};
  std::uint64_t seed{0};
  std::string config;
  std::string init{"align"};
};

FilterMode parse_mode(const std::string& mode) {
  if (mode == "full") return FilterMode::kFull;
  if (mode == "no-scale") return FilterMode::kNoScale;
  if (mode == "no-tilt") return FilterMode::kNoTilt;
  if (mode == "no-icp") return FilterMode::kNoIcp;
  if (mode == "dr-only") return FilterMode::kDrOnly;
  throw ParseError("unknown mode: " + mode);
}

int cmd_run(const RunArgs& a) {
  const Dataset ds = read_dataset(a.data);

  RunOptions opts;
  opts.noise = ds.noise;
  opts.seed = a.seed;
  opts.filter.cloning_window = a.cloning_window;
  opts.filter.nominal_radar_period = ds.radar_rate > 0.0 ? 1.0 / ds.radar_rate : 0.1;
  opts.filter.set_mode(parse_mode(a.mode));

  if (!a.config.empty()) {
    std::ifstream f(a.config);
    if (!f) throw IoError("cannot open config: " + a.config);
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid config JSON: ") + e.what());
    }
    if (j.contains("noise")) opts.noise = noise_from_json_text(j.at("noise").dump(), opts.noise);
    if (j.contains("ransac")) {
      const auto& r = j.at("ransac");
      opts.ransac.max_iterations = r.value("max_iterations", opts.ransac.max_iterations);
      opts.ransac.inlier_threshold = r.value("inlier_threshold", opts.ransac.inlier_threshold);
      opts.ransac.min_inlier_ratio = r.value("min_inlier_ratio", opts.ransac.min_inlier_ratio);
    }
    if (j.contains("icp")) {
      const auto& c = j.at("icp");
      opts.icp.max_iterations = c.value("max_iterations", opts.icp.max_iterations);
      opts.icp.transform_tol = c.value("tolerance", opts.icp.transform_tol);
      opts.icp.max_corr_dist = c.value("max_correspondence_distance", opts.icp.max_corr_dist);
      opts.icp.min_points = c.value("min_points", opts.icp.min_points);
      opts.icp.sigma_floor = c.value("sigma_floor", opts.icp.sigma_floor);
      opts.icp.sigma_scale = c.value("sigma_scale", opts.icp.sigma_scale);
      opts.icp.rotation_gate_deg = c.value("rotation_gate_deg", opts.icp.rotation_gate_deg);
    }
    if (j.contains("filter")) {
      const auto& fj = j.at("filter");
      opts.filter.cloning_window = fj.value("M", opts.filter.cloning_window);
      opts.filter.align_window = fj.value("align_window", opts.filter.align_window);
      if (fj.contains("scale_clamp")) {
        opts.filter.scale_clamp_lo = fj.at("scale_clamp")[0].get<double>();
        opts.filter.scale_clamp_hi = fj.at("scale_clamp")[1].get<double>();
      }
    }
  }

  if (a.init == "truth") {
    if (ds.truth.empty()) throw IoError("--init truth requires a ground truth file");
    const double start_t = ds.imu.front().t + opts.filter.align_window;
    const StampedPose* best = &ds.truth.front();
    for (const auto& p : ds.truth)
      if (std::abs(p.t - start_t) < std::abs(best->t - start_t)) best = &p;
    opts.init_pose = *best;
  } else if (a.init != "align") {
    throw ParseError("--init must be truth or align");
  }

  const RunResult result = run(ds.imu, ds.radar, ds.ext, opts);

  fs::create_directories(a.out);
  write_trajectory(result.trajectory, fs::path(a.out) / "trajectory.csv");
  write_diagnostics(result.diagnostics, fs::path(a.out) / "diagnostics.csv");

  int updates = 0, flagged = 0;
  for (const auto& d : result.diagnostics) {
    updates += d.updated ? 1 : 0;
    flagged += d.flagged ? 1 : 0;
  }
  std::cout << "processed " << result.diagnostics.size() << " radar epochs, " << updates
            << " updates, " << flagged << " flagged\n";

  if (!ds.truth.empty() && !result.trajectory.empty()) {
    const auto& last = result.trajectory.back();
    const StampedPose* best = &ds.truth.front();
    for (const auto& p : ds.truth)
      if (std::abs(p.t - last.t) < std::abs(best->t - last.t)) best = &p;
    const double pos_err = (last.state.p - best->p).norm();
    std::cout << "final position error vs ground truth: " << pos_err << " m\n";
  }
  return 0;
}

struct EvalArgs {
  std::string est;
  std::string gt;
  std::string out;
  std::string distances{"50,100,150,200"};
  double max_dt{0.02};
};

int cmd_eval(const EvalArgs& a) {
  const auto est = read_pose_csv(a.est);
  const auto gt = read_pose_csv(a.gt);

  std::vector<double> dists;
  {
    std::stringstream ss(a.distances);
    std::string tok;
    while (std::getline(ss, tok, ',')) dists.push_back(std::stod(tok));
  }

  const auto [align, pair] = align_position_yaw(est, gt, a.max_dt);
  const AteResult ate_res = ate(pair);
  const auto bins = relative_errors(pair, dists);

  fs::create_directories(a.out);
  json metrics;
  metrics["ate_translation_m"] = ate_res.translation_rmse;
  metrics["ate_rotation_deg"] = ate_res.rotation_rmse_deg;
  metrics["pairs"] = ate_res.pairs;
  metrics["yaw_align_rad"] = align.yaw;
  metrics["translation_align_m"] =
      json::array({align.translation.x(), align.translation.y(), align.translation.z()});
  std::ofstream mf(fs::path(a.out) / "metrics.json");
  if (!mf) throw IoError("cannot write metrics.json");
  mf << metrics.dump(2) << '\n';

  std::ofstream rf(fs::path(a.out) / "rel_errors.csv");
  if (!rf) throw IoError("cannot write rel_errors.csv");
  rf << "bin,type,value\n";
  char buf[64];
  for (const auto& bin : bins) {
    for (double v : bin.translation_err) {
      std::snprintf(buf, sizeof(buf), "%g,trans_m,%.12g\n", bin.distance, v);
      rf << buf;
    }
    for (double v : bin.rotation_err_deg) {
      std::snprintf(buf, sizeof(buf), "%g,rot_deg,%.12g\n", bin.distance, v);
      rf << buf;
    }
    if (bin.too_short) log::warn("bin %g m: trajectory too short, skipped", bin.distance);
  }

  std::cout << "ATE translation " << ate_res.translation_rmse << " m, rotation "
            << ate_res.rotation_rmse_deg << " deg over " << ate_res.pairs << " pairs\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"DeRO radar-inertial dead-reckoning toolkit"};
  app.require_subcommand(1);

  SimArgs sim_args;
  auto* sim = app.add_subcommand("sim", "generate a synthetic dataset");
  sim->add_option("--out", sim_args.out, "output dataset directory")->required();
  sim->add_option("--profile", sim_args.profile, "figure8|circle|stationary|spline");
  sim->add_option("--duration", sim_args.duration, "s");
  sim->add_option("--speed", sim_args.speed, "m/s");
  sim->add_option("--size", sim_args.size, "m");
  sim->add_option("--hold", sim_args.hold, "s stationary lead-in");
  sim->add_option("--ramp", sim_args.ramp, "s speed ramp");
  sim->add_option("--seed", sim_args.seed);
  sim->add_option("--imu-rate", sim_args.imu_rate, "Hz");
  sim->add_option("--radar-rate", sim_args.radar_rate, "Hz");
  sim->add_option("--sigma-g", sim_args.sigma_g, "rad/s/sqrt(Hz) gyro noise (generation)");
  sim->add_option("--sigma-f", sim_args.sigma_f, "m/s^2/sqrt(Hz) accel noise (generation)");
  sim->add_option("--sigma-bg", sim_args.sigma_bg, "gyro bias driving noise (generation)");
  sim->add_option("--sigma-doppler", sim_args.sigma_doppler, "m/s doppler noise");
  sim->add_option("--outlier-rate", sim_args.outlier_rate, "fraction of corrupted targets");
  sim->add_option("--gyro-bias", sim_args.gyro_bias, "x,y,z rad/s");
  sim->add_option("--accel-bias", sim_args.accel_bias, "x,y,z m/s^2");
  sim->add_option("--scale", sim_args.scale, "true radar scale x,y,z");
  sim->add_option("--calib-q", sim_args.calib_q, "q_b_r w,x,y,z");
  sim->add_option("--calib-lever", sim_args.calib_lever, "p_r_b x,y,z m");
  sim->add_option("--landmarks", sim_args.landmarks);
  sim->add_option("--max-range", sim_args.max_range, "m");
  sim->add_option("--fov", sim_args.fov, "deg half-angle");
  sim->add_option("--max-targets", sim_args.max_targets);
  sim->add_option("--dropout", sim_args.dropout, "empty-scan probability");

  RunArgs run_args;
  auto* runc = app.add_subcommand("run", "run the estimation pipeline on a dataset");
  runc->add_option("--data", run_args.data, "dataset directory")->required();
  runc->add_option("--out", run_args.out, "output directory")->required();
  runc->add_option("--mode", run_args.mode, "full|no-scale|no-tilt|no-icp|dr-only");
  runc->add_option("--M", run_args.cloning_window, "cloning window");
  runc->add_option("--seed", run_args.seed, "RANSAC seed");
  runc->add_option("--config", run_args.config, "JSON config overrides");
  runc->add_option("--init", run_args.init, "truth|align");

  EvalArgs eval_args;
  auto* evalc = app.add_subcommand("eval", "evaluate a trajectory against ground truth");
  evalc->add_option("--est", eval_args.est, "estimate CSV")->required();
  evalc->add_option("--gt", eval_args.gt, "ground truth CSV")->required();
  evalc->add_option("--out", eval_args.out, "output directory")->required();
  evalc->add_option("--distances", eval_args.distances, "comma-separated bins, m");
  evalc->add_option("--max-dt", eval_args.max_dt, "association gate, s");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (sim->parsed()) return cmd_sim(sim_args);
    if (runc->parsed()) return cmd_run(run_args);
    if (evalc->parsed()) return cmd_eval(eval_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dero
