#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lpr/core/types.hpp"
#include "lpr/synth/world.hpp"

namespace lpr {

/// Per-beam response r_l(x) = min(saturation, gain*x + offset), clamped at 0.
struct BeamResponse {
  double gain = 1.0;
  double offset = 0.0;
  double saturation = 255.0;

  double operator()(double reflectance) const;
};

struct SensorModel {
  std::vector<double> elevations_deg;
  std::vector<BeamResponse> responses;
  double azimuth_step_deg = 0.4;
  int rotations = 2;
  // Each later rotation is tilted up by this much and shifted half a step.
  double rotation_elevation_offset_deg = 1.0;
  double range_noise = 0.02;
  double intensity_noise = 1.5;
  double min_range = 1.0;
  double max_range = 45.0;

  int num_beams() const { return static_cast<int>(elevations_deg.size()); }
  /// 16 beams from -15 to +15 degrees with identity responses.
  static SensorModel ideal();
  /// Same beams with seeded affine-plus-saturation distortions.
  static SensorModel distorted(std::uint64_t seed);
};

/// Blanks returns whose azimuth (sensor frame, radians) falls in
/// [start, start + width).
struct Occlusion {
  double start = 0.0;
  double width = 0.0;

  bool blocks(double azimuth) const;
};

/// Ray casts every (rotation, beam, azimuth) from `pose`; points come back in
/// the sensor frame. Throws NoReturns when nothing is hit.
Scan simulate_scan(const World& world, const SensorModel& sensor, const RigidTransform& pose, std::uint64_t seed,
                   const std::optional<Occlusion>& occlusion = std::nullopt);

}  // namespace lpr
