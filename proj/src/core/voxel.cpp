#include "lpr/core/voxel.hpp"

#include <cmath>
#include <unordered_map>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

struct Accum {
  Vec3 sum = Vec3::Zero();
  double intensity = 0.0;
  std::size_t count = 0;
};

}  // namespace

VoxelCloud voxel_downsample(std::span<const Point> points, double cell_size, const Vec3& viewpoint) {
  if (!(cell_size > 0.0)) throw Error(Errc::InvalidCellSize, "cell size must be > 0");
  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot;
  slot.reserve(points.size());
  std::vector<Accum> acc;
  for (const auto& p : points) {
    if (!p.calibrated_intensity) throw Error(Errc::InvalidArgument, "voxel_downsample needs calibrated intensities");
    const VoxelKey key = voxel_key(p.position, cell_size);
    auto [it, inserted] = slot.try_emplace(key, acc.size());
    if (inserted) acc.emplace_back();
    Accum& a = acc[it->second];
    a.sum += p.position;
    a.intensity += *p.calibrated_intensity;
    ++a.count;
  }
  VoxelCloud cloud;
  cloud.cell_size = cell_size;
  cloud.viewpoint = viewpoint;
  cloud.cells.reserve(acc.size());
  for (const auto& a : acc) {
    const double n = static_cast<double>(a.count);
    cloud.cells.push_back({a.sum / n, a.intensity / n, a.count});
  }
  return cloud;
}

VoxelCloud voxel_downsample(const Scan& scan, double cell_size) {
  return voxel_downsample(std::span<const Point>(scan.points), cell_size, scan.sensor_origin);
}

Scan crop_range(const Scan& scan, double max_range) {
  Scan out;
  out.id = scan.id;
  out.sensor_origin = scan.sensor_origin;
  out.points.reserve(scan.points.size());
  for (const auto& p : scan.points)
    if (p.range <= max_range) out.points.push_back(p);
  return out;
}

}  // namespace lpr
