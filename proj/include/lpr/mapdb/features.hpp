#pragma once

#include <cstddef>
#include <vector>

#include "lpr/core/normals.hpp"
#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"
#include "lpr/descriptors/shot.hpp"
#include "lpr/keypoints/iss.hpp"

namespace lpr {

/// Every tunable of the shared scan/place front end.
struct PipelineParams {
  double voxel_size = 0.4;
  double max_range = 40.0;
  NormalParams normals;
  IssParams iss;
  ShotParams shot;
  double min_place_distance = 10.0;
  double place_radius = 40.0;
  // Arc length of trajectory whose scans feed one place; 0 keeps every map
  // point within place_radius.
  double place_window = 0.0;
};

/// Voxel cloud with normals, search index and ISS-BR keypoints.
struct FeatureCloud {
  VoxelCloud cloud;
  NormalField normals;
  SpatialIndex index;
  std::vector<Keypoint> keypoints;

  Surface surface() const { return {cloud, normals, index}; }
};

FeatureCloud prepare_features(VoxelCloud cloud, const PipelineParams& params);
/// Crops to max_range, voxelizes and detects keypoints on a calibrated scan.
FeatureCloud prepare_scan(const Scan& calibrated_scan, const PipelineParams& params);

/// Descriptor of keypoint `k`; a keypoint whose frame cannot be built comes
/// back as an unusable zero vector.
Descriptor describe_keypoint(const FeatureCloud& features, std::size_t k, DescriptorKind kind,
                             const ShotParams& params);

}  // namespace lpr
