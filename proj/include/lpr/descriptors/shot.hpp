#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"
#include "lpr/keypoints/iss.hpp"

namespace lpr {

/// Rows are the x, y, z axes; right-handed.
struct LocalReferenceFrame {
  Vec3 origin = Vec3::Zero();
  Mat3 axes = Mat3::Identity();

  Vec3 to_local(const Vec3& p) const { return axes * (p - origin); }
};

enum class DescriptorKind : std::uint8_t { Shot = 0, Ishot = 1 };

// 8 azimuth x 2 elevation x 2 radial volumes.
inline constexpr std::size_t kShotVolumes = 32;
inline constexpr std::size_t kShotLength = 352;
inline constexpr std::size_t kIntensityLength = 992;
inline constexpr std::size_t kIshotLength = kShotLength + kIntensityLength;

struct Descriptor {
  DescriptorKind kind = DescriptorKind::Shot;
  std::vector<double> values;
  std::size_t keypoint_index = 0;
  bool usable = true;  // false when the support held no valid neighbor
};

struct ShotParams {
  double radius = 7.0;
  double lrf_radius = 7.0;
  std::size_t shape_bins = 11;
  std::size_t intensity_bins = 31;
  std::size_t min_lrf_neighbors = 5;
};

/// Read-only view over a prepared cloud.
struct Surface {
  const VoxelCloud& cloud;
  const NormalField& normals;
  const SpatialIndex& index;
};

/// Distance-weighted covariance frame; x and z point toward the neighbor
/// majority, y = z cross x. Throws InsufficientSupport below min_neighbors.
LocalReferenceFrame compute_lrf(const SpatialIndex& index, const Vec3& keypoint, double radius,
                                std::size_t min_neighbors = 5);

Descriptor compute_shot(const Surface& surface, const Keypoint& keypoint, const LocalReferenceFrame& lrf,
                        const ShotParams& params = {});
/// Geometric cue followed by the histogram of intensity differences I_P - I_Q,
/// each cue normalized on its own.
Descriptor compute_ishot(const Surface& surface, const Keypoint& keypoint, const LocalReferenceFrame& lrf,
                         const ShotParams& params = {});

/// Keypoint at the cell nearest to `position`.
Keypoint keypoint_at(const Surface& surface, const Vec3& position);

}  // namespace lpr
