#include "lpr/core/types.hpp"

#include <algorithm>

namespace lpr {

void Scan::recompute_ranges() {
  for (auto& p : points) p.range = std::sqrt(squared_distance(p.position, sensor_origin));
}

std::vector<Vec3> VoxelCloud::positions() const {
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(c.centroid);
  return out;
}

std::size_t NormalField::valid_count() const {
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
}

Scan transform_scan(const Scan& scan, const RigidTransform& transform) {
  Scan out = scan;
  out.sensor_origin = transform.apply(scan.sensor_origin);
  for (auto& p : out.points) p.position = transform.apply(p.position);
  return out;
}

}  // namespace lpr
