#include "lpr/synth/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kRotationPeriod = 0.1;  // seconds

}  // namespace

double BeamResponse::operator()(double reflectance) const {
  return std::clamp(gain * reflectance + offset, 0.0, saturation);
}

SensorModel SensorModel::ideal() {
  SensorModel s;
  for (int b = 0; b < kDefaultNumBeams; ++b) s.elevations_deg.push_back(-15.0 + 2.0 * b);
  s.responses.assign(s.elevations_deg.size(), BeamResponse{});
  return s;
}

SensorModel SensorModel::distorted(std::uint64_t seed) {
  SensorModel s = ideal();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& r : s.responses) {
    r.gain = 0.7 + 0.6 * unit(rng);
    r.offset = -8.0 + 16.0 * unit(rng);
    r.saturation = 92.0 + 7.0 * unit(rng);
  }
  return s;
}

bool Occlusion::blocks(double azimuth) const {
  const double twopi = 2.0 * std::numbers::pi;
  double rel = std::fmod(azimuth - start, twopi);
  if (rel < 0.0) rel += twopi;
  return rel < width;
}

Scan simulate_scan(const World& world, const SensorModel& sensor, const RigidTransform& pose, std::uint64_t seed,
                   const std::optional<Occlusion>& occlusion) {
  if (sensor.responses.size() != sensor.elevations_deg.size())
    throw Error(Errc::InvalidArgument, "one response per beam required");
  const Vec3 origin = pose.translation;
  if (std::abs(origin.x()) > world.extent / 2.0 || std::abs(origin.y()) > world.extent / 2.0)
    throw Error(Errc::InvalidArgument, "pose outside the world extent");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < world.landmarks.size(); ++i) {
    const auto& l = world.landmarks[i];
    if (std::hypot(l.x - origin.x(), l.y - origin.y()) <= sensor.max_range + l.footprint_radius()) candidates.push_back(i);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto steps = static_cast<int>(std::lround(360.0 / sensor.azimuth_step_deg));
  Scan scan;
  for (int rot = 0; rot < sensor.rotations; ++rot) {
    for (int a = 0; a < steps; ++a) {
      const double azimuth = (a + 0.5 * rot) * sensor.azimuth_step_deg * kDeg;
      if (occlusion && occlusion->blocks(azimuth)) continue;
      for (int b = 0; b < sensor.num_beams(); ++b) {
        const double elevation = (sensor.elevations_deg[static_cast<std::size_t>(b)] +
                                  rot * sensor.rotation_elevation_offset_deg) * kDeg;
        const Vec3 dir(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                       std::sin(elevation));
        const auto hit = cast_ray(world, origin, pose.rotation * dir, sensor.max_range, &candidates);
        if (!hit || hit->distance < sensor.min_range) continue;
        const double range = hit->distance + sensor.range_noise * gauss(rng);
        const double noise = sensor.intensity_noise * gauss(rng);
        double measured = hit->reflectance >= 100.0 ? 200.0 : sensor.responses[static_cast<std::size_t>(b)](hit->reflectance);
        measured = std::clamp(std::round(measured + noise), 0.0, 255.0);
        Point p;
        p.position = dir * range;
        p.raw_intensity = static_cast<std::uint8_t>(measured);
        p.beam_id = b;
        p.timestamp = (rot + static_cast<double>(a) / steps) * kRotationPeriod;
        scan.points.push_back(p);
      }
    }
  }
  if (scan.points.empty()) throw Error(Errc::NoReturns, "pose sees no surface within range");
  scan.recompute_ranges();
  return scan;
}

}  // namespace lpr
