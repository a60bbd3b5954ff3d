#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lpr/calib/calibration.hpp"
#include "lpr/descriptors/matching.hpp"
#include "lpr/mapdb/features.hpp"

namespace lpr {

struct PlaceMembers {
  Vec3 center = Vec3::Zero();
  double arc = 0.0;  // arc length of the center along the trajectory
  std::vector<Point> points;
};

/// Centers every `min_place_distance` of arc length; members are map points
/// within place_radius of the center. `point_arc` (optional, one per point)
/// is the trajectory arc position of the scan a point came from; with
/// place_window > 0 only points whose arc lies within half a window of the
/// center are kept.
std::vector<PlaceMembers> partition_places(std::span<const Point> map_points, std::span<const Vec3> trajectory,
                                           const PipelineParams& params, std::span<const double> point_arc = {});

/// Cumulative arc length at every trajectory pose.
std::vector<double> trajectory_arc(std::span<const Vec3> trajectory);

struct Place {
  std::uint32_t id = 0;
  Vec3 center = Vec3::Zero();
  FeatureCloud features;
  // ISHOT rows (row-major, float32) for the usable keypoints.
  std::vector<float> descriptors;
  std::vector<std::uint32_t> descriptor_keypoints;

  std::size_t keypoint_count() const { return features.keypoints.size(); }
  std::size_t descriptor_count() const { return descriptor_keypoints.size(); }
};

struct PlaceDatabase {
  std::vector<Place> places;
  Eigen::MatrixXd center_distances;
  DescriptorIndex index;  // every row tagged with (place, keypoint)
  std::vector<std::size_t> row_begin;  // first index row of each place, plus a final end
  CalibrationTable calibration;
  PipelineParams params;
  DescriptorKind kind = DescriptorKind::Ishot;

  std::size_t size() const { return places.size(); }
  double max_center_distance() const;
  /// Rebuilds the global index and distance matrix from `places`.
  void finalize();
};

/// Members must already carry calibrated intensities.
PlaceDatabase build_database(std::vector<PlaceMembers> places, const CalibrationTable& calibration,
                             const PipelineParams& params);

void save_database(const PlaceDatabase& db, const std::filesystem::path& path);
PlaceDatabase load_database(const std::filesystem::path& path);

}  // namespace lpr
