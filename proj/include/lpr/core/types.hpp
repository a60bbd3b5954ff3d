#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace lpr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kDefaultNumBeams = 16;

/// One LiDAR return. `raw_intensity` is what the sensor reported; the
/// calibrated value lives in [0,1] once a calibration table has been applied.
struct Point {
  Vec3 position = Vec3::Zero();
  std::uint8_t raw_intensity = 0;
  std::optional<double> calibrated_intensity;
  int beam_id = 0;
  double timestamp = 0.0;
  double range = 0.0;
  // Set when the return was beyond the calibration range and only rescaled.
  bool uncalibrated = false;
};

struct Scan {
  std::string id;
  Vec3 sensor_origin = Vec3::Zero();
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void recompute_ranges();
};

struct VoxelCell {
  Vec3 centroid = Vec3::Zero();
  double intensity = 0.0;
  std::size_t count = 0;
};

/// Voxelized cloud; `viewpoint` is where normals get oriented toward.
struct VoxelCloud {
  double cell_size = 0.0;
  Vec3 viewpoint = Vec3::Zero();
  std::vector<VoxelCell> cells;

  std::size_t size() const { return cells.size(); }
  bool empty() const { return cells.empty(); }
  std::vector<Vec3> positions() const;
};

struct NormalField {
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return normals.size(); }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  std::size_t valid_count() const;
};

/// Rigid motion p' = rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
  RigidTransform operator*(const RigidTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation).normalized(); }

  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
    return {q.normalized().toRotationMatrix(), t};
  }
  static RigidTransform from_xyz_yaw(double x, double y, double z, double yaw) {
    return {Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix(), Vec3(x, y, z)};
  }
};

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Moves every point and the sensor origin into another frame.
Scan transform_scan(const Scan& scan, const RigidTransform& transform);

}  // namespace lpr
