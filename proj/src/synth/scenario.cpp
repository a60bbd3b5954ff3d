#include "lpr/synth/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

using nlohmann::json;

constexpr double kAbsentDistance = 80.0;

std::vector<Vec3> loop_corners(double width, double height, double z) {
  const double w = width / 2.0, h = height / 2.0;
  return {Vec3(-w, -h, z), Vec3(w, -h, z), Vec3(w, h, z), Vec3(-w, h, z), Vec3(-w, -h, z)};
}

json texture_json(const Texture& t) {
  return {{"pattern", static_cast<int>(t.pattern)}, {"low", t.low}, {"high", t.high}, {"period", t.period}, {"phase", t.phase}};
}

Texture texture_from(const json& j) {
  Texture t;
  t.pattern = static_cast<Pattern>(j.at("pattern").get<int>());
  t.low = j.at("low").get<double>();
  t.high = j.at("high").get<double>();
  t.period = j.at("period").get<double>();
  t.phase = j.at("phase").get<double>();
  return t;
}

}  // namespace

std::vector<RigidTransform> loop_trajectory(double width, double height, double spacing, double z) {
  if (!(spacing > 0.0) || !(width > 0.0) || !(height > 0.0)) throw Error(Errc::InvalidArgument, "bad loop geometry");
  const auto corners = loop_corners(width, height, z);
  const double perimeter = 2.0 * (width + height);
  const auto count = static_cast<std::size_t>(std::floor(perimeter / spacing + 1e-9));
  std::vector<RigidTransform> poses;
  for (std::size_t i = 0; i < count; ++i) {
    double s = static_cast<double>(i) * spacing;
    std::size_t seg = 0;
    while (seg + 1 < corners.size()) {
      const double len = (corners[seg + 1] - corners[seg]).norm();
      if (s < len) break;
      s -= len;
      ++seg;
    }
    const Vec3 dir = (corners[seg + 1] - corners[seg]).normalized();
    const Vec3 p = corners[seg] + s * dir;
    poses.push_back(RigidTransform::from_xyz_yaw(p.x(), p.y(), z, std::atan2(dir.y(), dir.x())));
  }
  return poses;
}

Scenario make_scenario(const ScenarioParams& params) {
  Scenario s;
  s.params = params;
  WorldOptions options;
  options.min_separation = params.min_separation;
  options.keep_clear = loop_corners(params.loop_width, params.loop_height, 0.0);
  options.clearance = params.clearance;
  s.world = generate_world(params.seed, params.extent, params.num_landmarks, options);
  s.sensor = params.distorted ? SensorModel::distorted(params.seed ^ 0x5e5e5e5eULL) : SensorModel::ideal();
  s.map_poses = loop_trajectory(params.loop_width, params.loop_height, params.map_scan_spacing, params.sensor_height);
  return s;
}

std::vector<RigidTransform> query_poses(const Scenario& scenario, QuerySet set, std::size_t count, std::uint64_t seed,
                                        std::size_t stride) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = scenario.params.sensor_height;
  const auto heading = [&] { return 2.0 * std::numbers::pi * unit(rng); };
  std::vector<RigidTransform> out;
  switch (set) {
    case QuerySet::Benign:
    case QuerySet::Occluded: {
      std::vector<std::size_t> slots;
      for (std::size_t i = 0; i < scenario.map_poses.size(); i += std::max<std::size_t>(stride, 1)) slots.push_back(i);
      std::shuffle(slots.begin(), slots.end(), rng);
      slots.resize(std::min(count, slots.size()));
      for (std::size_t i : slots) {
        const Vec3& p = scenario.map_poses[i].translation;
        out.push_back(RigidTransform::from_xyz_yaw(p.x(), p.y(), z, heading()));
      }
      break;
    }
    case QuerySet::Training: {
      const auto& poses = scenario.map_poses;
      for (std::size_t q = 0; q < count; ++q) {
        const double s = unit(rng) * static_cast<double>(poses.size());
        const auto i = static_cast<std::size_t>(s) % poses.size();
        const Vec3 a = poses[i].translation, b = poses[(i + 1) % poses.size()].translation;
        const Vec3 along = a + (s - std::floor(s)) * (b - a);
        const Vec3 dir = (b - a).normalized();
        const Vec3 side(-dir.y(), dir.x(), 0.0);
        const Vec3 p = along + (unit(rng) * 6.0 - 3.0) * side;
        out.push_back(RigidTransform::from_xyz_yaw(p.x(), p.y(), z, heading()));
      }
      break;
    }
    case QuerySet::Absent: {
      const auto corners = loop_corners(scenario.params.loop_width, scenario.params.loop_height, 0.0);
      const double half = scenario.world.extent / 2.0 - 20.0;
      for (int attempt = 0; out.size() < count && attempt < 100000; ++attempt) {
        const Vec3 p(-half + 2.0 * half * unit(rng), -half + 2.0 * half * unit(rng), 0.0);
        if (distance_to_polyline(p, corners) < kAbsentDistance) continue;
        out.push_back(RigidTransform::from_xyz_yaw(p.x(), p.y(), z, heading()));
      }
      if (out.size() < count) throw Error(Errc::InvalidArgument, "world too small for absent queries");
      break;
    }
  }
  return out;
}

std::string world_to_json(const World& world, const SensorModel& sensor) {
  json j;
  j["seed"] = world.seed;
  j["extent"] = world.extent;
  j["ground"] = {{"patch", world.ground.patch}, {"low", world.ground.low}, {"high", world.ground.high},
                 {"seed", world.ground.seed}};
  json landmarks = json::array();
  for (const auto& l : world.landmarks)
    landmarks.push_back({{"shape", static_cast<int>(l.shape)}, {"x", l.x}, {"y", l.y}, {"yaw", l.yaw},
                         {"half_x", l.half_x}, {"half_y", l.half_y}, {"height", l.height},
                         {"texture", texture_json(l.texture)}, {"retro", l.retro}});
  j["landmarks"] = std::move(landmarks);
  json beams = json::array();
  for (std::size_t b = 0; b < sensor.elevations_deg.size(); ++b)
    beams.push_back({{"elevation_deg", sensor.elevations_deg[b]}, {"gain", sensor.responses[b].gain},
                     {"offset", sensor.responses[b].offset}, {"saturation", sensor.responses[b].saturation}});
  j["sensor"] = {{"beams", beams},
                 {"azimuth_step_deg", sensor.azimuth_step_deg},
                 {"rotations", sensor.rotations},
                 {"rotation_elevation_offset_deg", sensor.rotation_elevation_offset_deg},
                 {"range_noise", sensor.range_noise},
                 {"intensity_noise", sensor.intensity_noise},
                 {"min_range", sensor.min_range},
                 {"max_range", sensor.max_range}};
  return j.dump(1);
}

void save_world(const World& world, const SensorModel& sensor, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << world_to_json(world, sensor) << '\n';
}

std::pair<World, SensorModel> load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, path.string());
  try {
    const json j = json::parse(in);
    World w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.extent = j.at("extent").get<double>();
    const auto& g = j.at("ground");
    w.ground = {g.at("patch").get<double>(), g.at("low").get<double>(), g.at("high").get<double>(),
                g.at("seed").get<std::uint64_t>()};
    for (const auto& l : j.at("landmarks")) {
      Landmark m;
      m.shape = static_cast<Shape>(l.at("shape").get<int>());
      m.x = l.at("x").get<double>();
      m.y = l.at("y").get<double>();
      m.yaw = l.at("yaw").get<double>();
      m.half_x = l.at("half_x").get<double>();
      m.half_y = l.at("half_y").get<double>();
      m.height = l.at("height").get<double>();
      m.texture = texture_from(l.at("texture"));
      m.retro = l.at("retro").get<bool>();
      w.landmarks.push_back(m);
    }
    SensorModel s;
    const auto& sj = j.at("sensor");
    for (const auto& b : sj.at("beams")) {
      s.elevations_deg.push_back(b.at("elevation_deg").get<double>());
      s.responses.push_back({b.at("gain").get<double>(), b.at("offset").get<double>(), b.at("saturation").get<double>()});
    }
    s.azimuth_step_deg = sj.at("azimuth_step_deg").get<double>();
    s.rotations = sj.at("rotations").get<int>();
    s.rotation_elevation_offset_deg = sj.at("rotation_elevation_offset_deg").get<double>();
    s.range_noise = sj.at("range_noise").get<double>();
    s.intensity_noise = sj.at("intensity_noise").get<double>();
    s.min_range = sj.at("min_range").get<double>();
    s.max_range = sj.at("max_range").get<double>();
    return {std::move(w), std::move(s)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace lpr
