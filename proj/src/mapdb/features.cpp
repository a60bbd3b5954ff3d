#include "lpr/mapdb/features.hpp"

#include "lpr/core/error.hpp"
#include "lpr/core/voxel.hpp"

namespace lpr {

FeatureCloud prepare_features(VoxelCloud cloud, const PipelineParams& params) {
  FeatureCloud f;
  f.cloud = std::move(cloud);
  f.index = SpatialIndex(f.cloud.positions());
  f.normals = estimate_normals(f.cloud, f.index, params.normals);
  if (!f.cloud.empty()) f.keypoints = detect_iss_br(f.cloud, f.index, params.iss);
  return f;
}

FeatureCloud prepare_scan(const Scan& calibrated_scan, const PipelineParams& params) {
  const Scan cropped = crop_range(calibrated_scan, params.max_range);
  if (cropped.empty()) throw Error(Errc::EmptyScan, "no returns within " + std::to_string(params.max_range) + " m");
  return prepare_features(voxel_downsample(cropped, params.voxel_size), params);
}

Descriptor describe_keypoint(const FeatureCloud& features, std::size_t k, DescriptorKind kind,
                             const ShotParams& params) {
  const Keypoint& kp = features.keypoints.at(k);
  Descriptor d;
  try {
    const auto lrf = compute_lrf(features.index, kp.position, params.lrf_radius, params.min_lrf_neighbors);
    d = kind == DescriptorKind::Ishot ? compute_ishot(features.surface(), kp, lrf, params)
                                      : compute_shot(features.surface(), kp, lrf, params);
  } catch (const Error& e) {
    if (e.code() != Errc::InsufficientSupport) throw;
    d.kind = kind;
    const std::size_t n = kShotVolumes * (params.shape_bins + (kind == DescriptorKind::Ishot ? params.intensity_bins : 0));
    d.values.assign(n, 0.0);
    d.usable = false;
  }
  d.keypoint_index = k;
  return d;
}

}  // namespace lpr
