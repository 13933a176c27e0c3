#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dero/filter.hpp"
#include "dero/types.hpp"

namespace dero {

// Generation parameters recorded in the dataset manifest (the true scale is
// needed for later scoring).
struct GenerationRecord {
  std::string profile{"figure8"};
  std::uint64_t seed{0};
  double duration{60.0};
  double speed{3.0};
  double size{20.0};
  double sigma_g{0.0};
  double sigma_f{0.0};
  double sigma_bg{0.0};
  double sigma_doppler{0.0};
  double outlier_rate{0.0};
  Vec3 gyro_bias{Vec3::Zero()};
  Vec3 accel_bias{Vec3::Zero()};
  Vec3 scale{Vec3::Ones()};
};

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<RadarScan> radar;
  std::vector<StampedPose> truth;  // empty when no ground truth file
  Extrinsics ext;
  NoiseConfig noise;
  double imu_rate{400.0};
  double radar_rate{10.0};
  GenerationRecord generation;
  std::vector<std::string> warnings;
};

// Reads a dataset directory (dataset.json manifest + referenced files).
// Streams are strictly time-ordered on return; violations throw
// NonMonotoneTime naming the offending line. A missing calibration file
// falls back to identity extrinsics with a warning record.
Dataset read_dataset(const std::filesystem::path& dir);

// Writes imu.csv, radar.jsonl, groundtruth.csv (when non-empty), calib.json
// and the dataset.json manifest.
void write_dataset(const std::filesystem::path& dir, std::span<const ImuSample> imu,
                   std::span<const RadarScan> radar, std::span<const StampedPose> truth,
                   const Extrinsics& ext, const NoiseConfig& noise, double imu_rate, double radar_rate,
                   const GenerationRecord& gen);

// t,px,py,pz,qw,qx,qy,qz,bgx,bgy,bgz,srx,sry,srz
void write_trajectory(std::span<const TrajectoryPoint> traj, const std::filesystem::path& path);
std::vector<TrajectoryPoint> read_trajectory(const std::filesystem::path& path);

// Reads the first 8 columns (t + pose) of a trajectory or ground-truth CSV.
std::vector<StampedPose> read_pose_csv(const std::filesystem::path& path);

void write_diagnostics(std::span<const EpochDiagnostics> diag, const std::filesystem::path& path);

// NoiseConfig <-> JSON (shared by calib.json and run config files).
std::string noise_to_json(const NoiseConfig& cfg);
NoiseConfig noise_from_json_text(const std::string& text, const NoiseConfig& base);

}  // namespace dero
