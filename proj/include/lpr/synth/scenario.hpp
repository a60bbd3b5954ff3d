#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lpr/synth/sensor.hpp"
#include "lpr/synth/world.hpp"

namespace lpr {

struct ScenarioParams {
  std::uint64_t seed = 1;
  double extent = 400.0;
  std::size_t num_landmarks = 900;
  double min_separation = 5.0;
  // Rectangular loop centered on the origin.
  double loop_width = 140.0;
  double loop_height = 90.0;
  double map_scan_spacing = 5.0;
  double clearance = 4.0;
  double sensor_height = 1.8;
  bool distorted = true;
};

struct Scenario {
  ScenarioParams params;
  World world;
  SensorModel sensor;
  std::vector<RigidTransform> map_poses;  // sensor poses along the loop, heading-aligned
};

Scenario make_scenario(const ScenarioParams& params);

/// Poses every `spacing` meters of arc around a closed rectangle (last corner
/// not repeated).
std::vector<RigidTransform> loop_trajectory(double width, double height, double spacing, double z);

enum class QuerySet { Benign, Training, Occluded, Absent };

/// Benign and occluded queries sit on distinct pose samples `stride` apart
/// along the loop with a random heading; training queries are anywhere on
/// the loop with up to 3 m lateral offset; absent queries lie at least 80 m
/// from it.
std::vector<RigidTransform> query_poses(const Scenario& scenario, QuerySet set, std::size_t count, std::uint64_t seed,
                                        std::size_t stride = 2);

void save_world(const World& world, const SensorModel& sensor, const std::filesystem::path& path);
std::pair<World, SensorModel> load_world(const std::filesystem::path& path);
std::string world_to_json(const World& world, const SensorModel& sensor);

}  // namespace lpr
