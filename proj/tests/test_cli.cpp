#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dero/cli.hpp"
#include "dero/dataset_io.hpp"
#include "dero/evaluation.hpp"
#include "dero/filter.hpp"
#include "dero/simulator.hpp"
#include "support/oracles.hpp"

using namespace dero;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const char* name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct SimStreams {
  std::vector<TruthSample> truth;
  std::vector<ImuSample> imu;
  std::vector<RadarScan> radar;
  Extrinsics ext;
};

SimStreams noiseless_figure8(double duration, std::uint64_t seed) {
  TrajectoryProfile profile;
  profile.kind = ProfileKind::kFigure8;
  profile.duration = duration;
  profile.speed = 3.0;
  profile.size = 12.0;
  profile.hold = 5.0;
  profile.ramp = 3.0;
  SimStreams s;
  s.truth = gen_trajectory(profile, 400.0);
  NoiseConfig gen_cfg;
  gen_cfg.sigma_g = gen_cfg.sigma_f = gen_cfg.sigma_bg = 1e-15;
  s.imu = synth_imu(s.truth, Vec3::Zero(), Vec3::Zero(), gen_cfg, seed);
  SimEnvironment env;
  env.n_landmarks = 400;
  s.radar = synth_radar(s.truth, env, Vec3::Ones(), 0.0, 0.0, s.ext, 10.0, seed);
  return s;
}

StampedPose truth_pose_at(const std::vector<TruthSample>& truth, double t) {
  const TruthSample* best = &truth.front();
  for (const auto& s : truth)
    if (std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
  return {best->t, best->p, best->q};
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("noiseless closed loop holds centimetre accuracy") {
    const SimStreams s = noiseless_figure8(30.0, 7);
    RunOptions opts;
    opts.init_pose = truth_pose_at(s.truth, s.imu.front().t + opts.filter.align_window);
    const RunResult res = run(s.imu, s.radar, s.ext, opts);

    const auto& last = res.trajectory.back();
    const StampedPose gt = truth_pose_at(s.truth, last.t);
    CHECK((last.state.p - gt.p).norm() <= 0.02);
    CHECK(oracles::quat_angle_between(last.state.q, gt.q) <= 0.05 * M_PI / 180.0);
  }

  TEST_CASE("disabling icp and tilt reduces to dead reckoning") {
    const SimStreams s = noiseless_figure8(20.0, 8);
    RunOptions opts;
    opts.init_pose = truth_pose_at(s.truth, s.imu.front().t + opts.filter.align_window);

    RunOptions ablated = opts;
    ablated.filter.use_icp = false;
    ablated.filter.use_tilt = false;
    const RunResult a = run(s.imu, s.radar, s.ext, ablated);

    RunOptions dr = opts;
    dr.filter.set_mode(FilterMode::kDrOnly);
    const RunResult b = run(s.imu, s.radar, s.ext, dr);

    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); i += 17) {
      CHECK((a.trajectory[i].state.p - b.trajectory[i].state.p).norm() <= 1e-12);
      CHECK(oracles::quat_angle_between(a.trajectory[i].state.q, b.trajectory[i].state.q) <= 1e-12);
    }
  }

  TEST_CASE("stationary unobservable scale follows the exact Markov decay") {
    TrajectoryProfile profile;
    profile.kind = ProfileKind::kStationary;
    profile.duration = 63.0;
    const auto truth = gen_trajectory(profile, 400.0);
    NoiseConfig gen_cfg;
    gen_cfg.sigma_g = gen_cfg.sigma_f = gen_cfg.sigma_bg = 1e-15;
    const auto imu = synth_imu(truth, Vec3::Zero(), Vec3::Zero(), gen_cfg, 9);
    SimEnvironment env;
    const auto radar = synth_radar(truth, env, Vec3::Ones(), 0.0, 0.0, Extrinsics{}, 10.0, 9);

    RunOptions opts;
    opts.filter.use_icp = false;
    opts.filter.use_tilt = false;
    const RunResult res = run(imu, radar, Extrinsics{}, opts);

    const auto& last = res.trajectory.back();
    const double elapsed = last.t - res.start_time;
    CHECK(elapsed >= 59.0);
    const double expect = std::exp(-elapsed / opts.noise.tau_r);
    CHECK((last.state.s_r - expect * Vec3::Ones()).norm() <= 1e-6);
  }

  TEST_CASE("empty streams are fatal") {
    const SimStreams s = noiseless_figure8(12.0, 10);
    RunOptions opts;
    CHECK_THROWS_AS(run({}, s.radar, s.ext, opts), EmptyStream);
    CHECK_THROWS_AS(run(s.imu, {}, s.ext, opts), EmptyStream);
  }
}

TEST_SUITE("cli") {
  TEST_CASE("sim produces a deterministic dataset and records the scale") {
    TempDir d1("dero_cli_sim1");
    TempDir d2("dero_cli_sim2");
    const std::vector<std::string> args = {"sim",     "--out",      d1.str(),          "--profile",
                                           "figure8", "--duration", "20",              "--seed",
                                           "7",       "--scale",    "1.005,0.995,1.0", "--speed",
                                           "2.5"};
    REQUIRE(cli_main(args) == 0);
    auto args2 = args;
    args2[2] = d2.str();
    REQUIRE(cli_main(args2) == 0);

    CHECK(slurp(d1.path / "imu.csv") == slurp(d2.path / "imu.csv"));
    CHECK(slurp(d1.path / "radar.jsonl") == slurp(d2.path / "radar.jsonl"));

    const Dataset ds = read_dataset(d1.path);
    CHECK((ds.generation.scale - Vec3(1.005, 0.995, 1.0)).norm() == 0.0);
  }

  TEST_CASE("stationary datasets carry all-zero dopplers") {
    TempDir d("dero_cli_stationary");
    REQUIRE(cli_main({"sim", "--out", d.str(), "--profile", "stationary", "--duration", "8",
                      "--sigma-doppler", "0", "--seed", "3"}) == 0);
    const Dataset ds = read_dataset(d.path);
    int seen = 0;
    for (const auto& scan : ds.radar)
      for (const auto& tgt : scan.targets) {
        CHECK(std::abs(tgt.doppler) < 1e-12);
        ++seen;
      }
    CHECK(seen > 0);
  }

  TEST_CASE("run on a missing dataset exits nonzero with a manifest message") {
    TempDir d("dero_cli_missing");
    const int rc = cli_main({"run", "--data", (d.path / "nope").string(), "--out", d.str()});
    CHECK(rc != 0);
  }

  TEST_CASE("end-to-end determinism of metrics.json") {
    TempDir data("dero_cli_e2e_data");
    REQUIRE(cli_main({"sim", "--out", data.str(), "--profile", "figure8", "--duration", "20",
                      "--seed", "11", "--sigma-doppler", "0.05"}) == 0);

    TempDir out1("dero_cli_e2e_run1");
    TempDir out2("dero_cli_e2e_run2");
    TempDir ev1("dero_cli_e2e_eval1");
    TempDir ev2("dero_cli_e2e_eval2");

    REQUIRE(cli_main({"run", "--data", data.str(), "--out", out1.str(), "--seed", "5"}) == 0);
    REQUIRE(cli_main({"run", "--data", data.str(), "--out", out2.str(), "--seed", "5"}) == 0);
    CHECK(slurp(out1.path / "trajectory.csv") == slurp(out2.path / "trajectory.csv"));

    REQUIRE(cli_main({"eval", "--est", (out1.path / "trajectory.csv").string(), "--gt",
                      (data.path / "groundtruth.csv").string(), "--out", ev1.str(), "--distances",
                      "10,20"}) == 0);
    REQUIRE(cli_main({"eval", "--est", (out2.path / "trajectory.csv").string(), "--gt",
                      (data.path / "groundtruth.csv").string(), "--out", ev2.str(), "--distances",
                      "10,20"}) == 0);
    CHECK(slurp(ev1.path / "metrics.json") == slurp(ev2.path / "metrics.json"));
    CHECK(!slurp(ev1.path / "metrics.json").empty());
    CHECK(!slurp(ev1.path / "rel_errors.csv").empty());
  }

  TEST_CASE("dr-only mode equals the library-level ablation") {
    TempDir data("dero_cli_drdata");
    REQUIRE(cli_main({"sim", "--out", data.str(), "--profile", "figure8", "--duration", "20",
                      "--seed", "13", "--sigma-doppler", "0"}) == 0);
    TempDir out("dero_cli_drout");
    REQUIRE(cli_main({"run", "--data", data.str(), "--out", out.str(), "--mode", "dr-only"}) == 0);

    const Dataset ds = read_dataset(data.path);
    RunOptions opts;
    opts.noise = ds.noise;
    opts.filter.set_mode(FilterMode::kDrOnly);
    const RunResult res = run(ds.imu, ds.radar, ds.ext, opts);
    const auto from_cli = read_trajectory(out.path / "trajectory.csv");
    REQUIRE(from_cli.size() == res.trajectory.size());
    for (std::size_t i = 0; i < from_cli.size(); i += 11)
      CHECK((from_cli[i].state.p - res.trajectory[i].state.p).norm() < 1e-9);
  }
}
