#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sklab/lab.hpp"
#include "sklab/overdamped.hpp"

namespace sklab {

/// %.17g, with "nan" / "inf" / "-inf" spelled out.
std::string format_double(double v);

void write_trajectory_csv(const std::filesystem::path& file, const TrajectoryBundle& bundle);
void write_overdamped_csv(const std::filesystem::path& file, const OverdampedTrajectory& traj);
/// t, <prefix>_0, ... for a bare path.
void write_path_csv(const std::filesystem::path& file, const Path& path, const std::string& prefix);
void write_ladder_csv(const std::filesystem::path& file, const RateLadder& ladder);
void write_distance_csv(const std::filesystem::path& file, const DistanceStudy& study);
void write_tightness_csv(const std::filesystem::path& norm_file, const std::filesystem::path& window_file,
                         const TightnessTable& table);

std::string sha256_hex(const std::string& bytes);

struct RunManifest {
  std::string command_line;
  std::string subcommand;
  std::string model_name;
  std::string config_source;  // file path or preset name
  std::string config_digest;  // sha256 of the config bytes
  std::uint64_t master_seed = 0;
  double t0 = 0.0;
  double t_end = 1.0;
  std::int64_t n_steps = 0;
  std::string scheme;
  std::vector<double> eps;
  std::int64_t n_replicas = 0;
  int threads = 1;
  std::string started_at;
  std::string finished_at;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
  std::string error;  // empty on success
};

void write_manifest(const std::filesystem::path& file, const RunManifest& manifest);

/// UTC time as ISO 8601.
std::string utc_timestamp();

}  // namespace sklab
