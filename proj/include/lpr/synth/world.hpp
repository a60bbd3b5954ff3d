#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lpr/core/types.hpp"

namespace lpr {

enum class Shape : std::uint8_t { Box = 0, Cylinder = 1 };
enum class Pattern : std::uint8_t { Uniform = 0, HorizontalStripes = 1, VerticalStripes = 2, Checker = 3 };

/// Two-level reflectance pattern over surface coordinates (u along the
/// surface, z up).
struct Texture {
  Pattern pattern = Pattern::Uniform;
  double low = 30.0;
  double high = 30.0;
  double period = 1.0;
  double phase = 0.0;

  double value(double u, double z) const;
};

/// Upright primitive standing on the ground plane.
struct Landmark {
  Shape shape = Shape::Box;
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double half_x = 1.0;  // radius for cylinders
  double half_y = 1.0;
  double height = 3.0;
  Texture texture;
  bool retro = false;  // reflectance reads >= 100 when set

  double footprint_radius() const;
};

struct Ground {
  double patch = 3.0;
  double low = 15.0;
  double high = 45.0;
  std::uint64_t seed = 0;

  double value(double x, double y) const;
};

struct World {
  std::uint64_t seed = 0;
  double extent = 400.0;  // square [-extent/2, extent/2]^2
  Ground ground;
  std::vector<Landmark> landmarks;
};

struct WorldOptions {
  double min_separation = 7.0;
  // Landmarks keep at least `clearance` meters off this polyline.
  std::vector<Vec3> keep_clear;
  double clearance = 0.0;
  int max_attempts = 200000;
};

World generate_world(std::uint64_t seed, double extent, std::size_t num_landmarks, const WorldOptions& options = {});

struct Hit {
  double distance = 0.0;
  Vec3 point = Vec3::Zero();
  double reflectance = 0.0;
};

/// Nearest surface along the ray within max_distance. `candidates`, when
/// given, restricts the landmarks tested.
std::optional<Hit> cast_ray(const World& world, const Vec3& origin, const Vec3& direction, double max_distance,
                            const std::vector<std::size_t>* candidates = nullptr);

/// Shortest distance from p to a polyline in the xy plane.
double distance_to_polyline(const Vec3& p, std::span<const Vec3> polyline);

}  // namespace lpr
