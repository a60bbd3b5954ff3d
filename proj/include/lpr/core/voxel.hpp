#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "lpr/core/types.hpp"

namespace lpr {

struct VoxelKey {
  std::int64_t x = 0, y = 0, z = 0;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

inline VoxelKey voxel_key(const Vec3& p, double cell_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size))};
}

/// Averages positions and calibrated intensities per occupied cell. Cells are
/// emitted in order of first appearance in the input.
VoxelCloud voxel_downsample(const Scan& scan, double cell_size);
VoxelCloud voxel_downsample(std::span<const Point> points, double cell_size, const Vec3& viewpoint);

/// Drops points farther than max_range from the sensor.
Scan crop_range(const Scan& scan, double max_range);

}  // namespace lpr
