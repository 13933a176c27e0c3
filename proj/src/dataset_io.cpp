#include "dero/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dero/log.hpp"

namespace dero {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw ParseError("bad number '" + std::string(tok) + "' at " + where);
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  return f;
}

std::string read_file(const std::filesystem::path& path) {
  auto f = open_in(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json noise_to_json_obj(const NoiseConfig& cfg) {
  json j;
  j["sigma_g"] = cfg.sigma_g;
  j["sigma_bg"] = cfg.sigma_bg;
  j["sigma_sr"] = cfg.sigma_sr;
  j["sigma_a"] = cfg.sigma_a;
  j["sigma_r_nominal"] = cfg.sigma_r_nominal;
  j["sigma_f"] = cfg.sigma_f;
  j["tau_b"] = cfg.tau_b;
  j["tau_r"] = cfg.tau_r;
  j["gamma"] = cfg.gamma;
  j["kappa"] = cfg.kappa;
  j["gravity"] = cfg.gravity;
  j["p0_pos"] = cfg.p0_pos;
  j["p0_att"] = vec3_to_json(cfg.p0_att);
  j["p0_bg"] = cfg.p0_bg;
  j["p0_sr"] = cfg.p0_sr;
  return j;
}

NoiseConfig noise_from_json_obj(const json& j, const NoiseConfig& base) {
  NoiseConfig cfg = base;
  auto get = [&j](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  get("sigma_g", cfg.sigma_g);
  get("sigma_bg", cfg.sigma_bg);
  get("sigma_sr", cfg.sigma_sr);
  get("sigma_a", cfg.sigma_a);
  get("sigma_r_nominal", cfg.sigma_r_nominal);
  get("sigma_f", cfg.sigma_f);
  get("tau_b", cfg.tau_b);
  get("tau_r", cfg.tau_r);
  get("gamma", cfg.gamma);
  get("kappa", cfg.kappa);
  get("gravity", cfg.gravity);
  get("p0_pos", cfg.p0_pos);
  if (j.contains("p0_att")) cfg.p0_att = vec3_from_json(j.at("p0_att"));
  get("p0_bg", cfg.p0_bg);
  get("p0_sr", cfg.p0_sr);
  return cfg;
}

void write_imu_csv(const std::filesystem::path& path, std::span<const ImuSample> imu) {
  auto f = open_out(path);
  f << "t,wx,wy,wz,fx,fy,fz\n";
  for (const auto& s : imu) {
    f << fmt(s.t) << ',' << fmt(s.gyro.x()) << ',' << fmt(s.gyro.y()) << ',' << fmt(s.gyro.z()) << ','
      << fmt(s.accel.x()) << ',' << fmt(s.accel.y()) << ',' << fmt(s.accel.z()) << '\n';
  }
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::vector<ImuSample> out;
  std::string line;
  std::getline(f, line);  // header
  int lineno = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path.filename().string() + ":" + std::to_string(lineno);
    const auto tok = split_csv(line);
    if (tok.size() != 7) throw ParseError("expected 7 columns at " + where);
    ImuSample s;
    s.t = parse_double(tok[0], where);
    for (int i = 0; i < 3; ++i) s.gyro(i) = parse_double(tok[1 + i], where);
    for (int i = 0; i < 3; ++i) s.accel(i) = parse_double(tok[4 + i], where);
    if (s.t <= last_t) throw NonMonotoneTime("non-increasing timestamp at " + where);
    last_t = s.t;
    out.push_back(s);
  }
  return out;
}

void write_radar_jsonl(const std::filesystem::path& path, std::span<const RadarScan> radar) {
  auto f = open_out(path);
  for (const auto& scan : radar) {
    json j;
    j["t"] = scan.t;
    json targets = json::array();
    for (const auto& tgt : scan.targets) {
      targets.push_back({{"x", tgt.position.x()},
                         {"y", tgt.position.y()},
                         {"z", tgt.position.z()},
                         {"doppler", tgt.doppler},
                         {"power", tgt.power}});
    }
    j["targets"] = std::move(targets);
    f << j.dump() << '\n';
  }
}

std::vector<RadarScan> read_radar_jsonl(const std::filesystem::path& path,
                                        std::vector<std::string>& warnings) {
  auto f = open_in(path);
  std::vector<RadarScan> out;
  std::string line;
  int lineno = 0;
  int dropped = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path.filename().string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("invalid JSON at " + where + ": " + e.what());
    }
    RadarScan scan;
    try {
      scan.t = j.at("t").get<double>();
      for (const auto& tj : j.at("targets")) {
        RadarTarget tgt;
        tgt.position =
            Vec3(tj.at("x").get<double>(), tj.at("y").get<double>(), tj.at("z").get<double>());
        tgt.doppler = tj.at("doppler").get<double>();
        tgt.power = tj.value("power", 0.0);
        if (tgt.position.norm() <= 0.0 || !tgt.position.allFinite()) {
          ++dropped;
          continue;
        }
        scan.targets.push_back(tgt);
      }
    } catch (const json::exception& e) {
      throw ParseError("bad scan record at " + where + ": " + e.what());
    }
    if (scan.t <= last_t) throw NonMonotoneTime("non-increasing scan timestamp at " + where);
    last_t = scan.t;
    out.push_back(std::move(scan));
  }
  if (dropped > 0) warnings.push_back("dropped " + std::to_string(dropped) + " zero-range radar targets");
  return out;
}

void write_pose_csv(const std::filesystem::path& path, std::span<const StampedPose> poses) {
  auto f = open_out(path);
  f << "t,px,py,pz,qw,qx,qy,qz\n";
  for (const auto& p : poses) {
    f << fmt(p.t) << ',' << fmt(p.p.x()) << ',' << fmt(p.p.y()) << ',' << fmt(p.p.z()) << ','
      << fmt(p.q.w) << ',' << fmt(p.q.x) << ',' << fmt(p.q.y) << ',' << fmt(p.q.z) << '\n';
  }
}

}  // namespace

std::string noise_to_json(const NoiseConfig& cfg) { return noise_to_json_obj(cfg).dump(2); }

NoiseConfig noise_from_json_text(const std::string& text, const NoiseConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid noise JSON: ") + e.what());
  }
  return noise_from_json_obj(j, base);
}

std::vector<StampedPose> read_pose_csv(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::vector<StampedPose> out;
  std::string line;
  std::getline(f, line);  // header
  int lineno = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path.filename().string() + ":" + std::to_string(lineno);
    const auto tok = split_csv(line);
    if (tok.size() < 8) throw ParseError("expected at least 8 columns at " + where);
    StampedPose p;
    p.t = parse_double(tok[0], where);
    p.p = Vec3(parse_double(tok[1], where), parse_double(tok[2], where), parse_double(tok[3], where));
    p.q = Quat(parse_double(tok[4], where), parse_double(tok[5], where), parse_double(tok[6], where),
               parse_double(tok[7], where));
    if (p.t <= last_t) throw NonMonotoneTime("non-increasing timestamp at " + where);
    last_t = p.t;
    out.push_back(p);
  }
  return out;
}

void write_trajectory(std::span<const TrajectoryPoint> traj, const std::filesystem::path& path) {
  if (traj.empty()) throw IoError("refusing to write empty trajectory");
  auto f = open_out(path);
  f << "t,px,py,pz,qw,qx,qy,qz,bgx,bgy,bgz,srx,sry,srz\n";
  for (const auto& tp : traj) {
    const auto& s = tp.state;
    f << fmt(tp.t) << ',' << fmt(s.p.x()) << ',' << fmt(s.p.y()) << ',' << fmt(s.p.z()) << ','
      << fmt(s.q.w) << ',' << fmt(s.q.x) << ',' << fmt(s.q.y) << ',' << fmt(s.q.z) << ','
      << fmt(s.b_g.x()) << ',' << fmt(s.b_g.y()) << ',' << fmt(s.b_g.z()) << ',' << fmt(s.s_r.x())
      << ',' << fmt(s.s_r.y()) << ',' << fmt(s.s_r.z()) << '\n';
  }
}

std::vector<TrajectoryPoint> read_trajectory(const std::filesystem::path& path) {
  auto f = open_in(path);
  std::vector<TrajectoryPoint> out;
  std::string line;
  std::getline(f, line);
  int lineno = 1;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path.filename().string() + ":" + std::to_string(lineno);
    const auto tok = split_csv(line);
    if (tok.size() != 14) throw ParseError("expected 14 columns at " + where);
    TrajectoryPoint tp;
    tp.t = parse_double(tok[0], where);
    tp.state.p =
        Vec3(parse_double(tok[1], where), parse_double(tok[2], where), parse_double(tok[3], where));
    tp.state.q = Quat(parse_double(tok[4], where), parse_double(tok[5], where),
                      parse_double(tok[6], where), parse_double(tok[7], where));
    tp.state.b_g =
        Vec3(parse_double(tok[8], where), parse_double(tok[9], where), parse_double(tok[10], where));
    tp.state.s_r =
        Vec3(parse_double(tok[11], where), parse_double(tok[12], where), parse_double(tok[13], where));
    if (tp.t <= last_t) throw NonMonotoneTime("non-increasing timestamp at " + where);
    last_t = tp.t;
    out.push_back(tp);
  }
  return out;
}

void write_diagnostics(std::span<const EpochDiagnostics> diag, const std::filesystem::path& path) {
  auto f = open_out(path);
  f << "t,vrx,vry,vrz,trace_Q,inliers,scan_count,updated,sigma_a_eff,sigma_pr,z_norm,innov_cond,"
       "flagged\n";
  for (const auto& d : diag) {
    f << fmt(d.t) << ',' << fmt(d.v_r.x()) << ',' << fmt(d.v_r.y()) << ',' << fmt(d.v_r.z()) << ','
      << fmt(d.trace_q) << ',' << d.inlier_count << ',' << d.scan_count << ',' << (d.updated ? 1 : 0)
      << ',' << fmt(d.sigma_a_eff) << ',' << fmt(d.sigma_pr) << ',' << fmt(d.z_norm) << ','
      << fmt(d.innovation_cond) << ',' << (d.flagged ? 1 : 0) << '\n';
  }
}

void write_dataset(const std::filesystem::path& dir, std::span<const ImuSample> imu,
                   std::span<const RadarScan> radar, std::span<const StampedPose> truth,
                   const Extrinsics& ext, const NoiseConfig& noise, double imu_rate, double radar_rate,
                   const GenerationRecord& gen) {
  std::filesystem::create_directories(dir);
  write_imu_csv(dir / "imu.csv", imu);
  write_radar_jsonl(dir / "radar.jsonl", radar);
  if (!truth.empty()) write_pose_csv(dir / "groundtruth.csv", truth);

  json calib;
  calib["q_b_r"] = json::array({ext.q_b_r.w, ext.q_b_r.x, ext.q_b_r.y, ext.q_b_r.z});
  calib["p_r_b"] = vec3_to_json(ext.p_r_b);
  calib["noise"] = noise_to_json_obj(noise);
  open_out(dir / "calib.json") << calib.dump(2) << '\n';

  json manifest;
  manifest["imu"] = "imu.csv";
  manifest["radar"] = "radar.jsonl";
  if (!truth.empty()) manifest["groundtruth"] = "groundtruth.csv";
  manifest["calib"] = "calib.json";
  manifest["imu_rate"] = imu_rate;
  manifest["radar_rate"] = radar_rate;
  manifest["frames"] = "nav NED; body FRD; radar FLU; quaternions scalar-first body-to-nav";
  json g;
  g["profile"] = gen.profile;
  g["seed"] = gen.seed;
  g["duration"] = gen.duration;
  g["speed"] = gen.speed;
  g["size"] = gen.size;
  g["sigma_g"] = gen.sigma_g;
  g["sigma_f"] = gen.sigma_f;
  g["sigma_bg"] = gen.sigma_bg;
  g["sigma_doppler"] = gen.sigma_doppler;
  g["outlier_rate"] = gen.outlier_rate;
  g["gyro_bias"] = vec3_to_json(gen.gyro_bias);
  g["accel_bias"] = vec3_to_json(gen.accel_bias);
  g["scale"] = vec3_to_json(gen.scale);
  manifest["generation"] = std::move(g);
  open_out(dir / "dataset.json") << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "dataset.json";
  if (!std::filesystem::exists(manifest_path)) throw IoError("manifest not found: " + manifest_path.string());

  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ParseError("invalid manifest: " + std::string(e.what()));
  }

  Dataset ds;
  ds.imu = read_imu_csv(dir / manifest.value("imu", "imu.csv"));
  ds.radar = read_radar_jsonl(dir / manifest.value("radar", "radar.jsonl"), ds.warnings);
  ds.imu_rate = manifest.value("imu_rate", 400.0);
  ds.radar_rate = manifest.value("radar_rate", 10.0);

  if (manifest.contains("groundtruth")) {
    const auto gt_path = dir / manifest.at("groundtruth").get<std::string>();
    if (std::filesystem::exists(gt_path)) {
      ds.truth = read_pose_csv(gt_path);
    } else {
      ds.warnings.push_back("groundtruth file missing: " + gt_path.string());
    }
  }

  const auto calib_path = dir / manifest.value("calib", "calib.json");
  if (std::filesystem::exists(calib_path)) {
    json calib;
    try {
      calib = json::parse(read_file(calib_path));
    } catch (const json::exception& e) {
      throw ParseError("invalid calib.json: " + std::string(e.what()));
    }
    if (calib.contains("q_b_r")) {
      const auto& q = calib.at("q_b_r");
      if (!q.is_array() || q.size() != 4) throw ParseError("calib q_b_r must be [w,x,y,z]");
      ds.ext.q_b_r = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    }
    if (calib.contains("p_r_b")) ds.ext.p_r_b = vec3_from_json(calib.at("p_r_b"));
    if (calib.contains("noise")) ds.noise = noise_from_json_obj(calib.at("noise"), ds.noise);
    ds.ext = validate_extrinsics(ds.ext);
  } else {
    ds.warnings.push_back("calib.json missing, using identity extrinsics and default noise");
  }

  if (manifest.contains("generation")) {
    const auto& g = manifest.at("generation");
    ds.generation.profile = g.value("profile", "unknown");
    ds.generation.seed = g.value("seed", 0ULL);
    ds.generation.duration = g.value("duration", 0.0);
    ds.generation.speed = g.value("speed", 0.0);
    ds.generation.size = g.value("size", 0.0);
    ds.generation.sigma_g = g.value("sigma_g", 0.0);
    ds.generation.sigma_f = g.value("sigma_f", 0.0);
    ds.generation.sigma_bg = g.value("sigma_bg", 0.0);
    ds.generation.sigma_doppler = g.value("sigma_doppler", 0.0);
    ds.generation.outlier_rate = g.value("outlier_rate", 0.0);
    if (g.contains("gyro_bias")) ds.generation.gyro_bias = vec3_from_json(g.at("gyro_bias"));
    if (g.contains("accel_bias")) ds.generation.accel_bias = vec3_from_json(g.at("accel_bias"));
    if (g.contains("scale")) ds.generation.scale = vec3_from_json(g.at("scale"));
  }

  for (const auto& w : ds.warnings) log::warn("%s", w.c_str());
  return ds;
}

}  // namespace dero
