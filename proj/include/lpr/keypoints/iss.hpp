#pragma once

#include <numbers>
#include <vector>

#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"

namespace lpr {

struct Keypoint {
  Vec3 position = Vec3::Zero();
  double saliency = 0.0;  // smallest scatter eigenvalue
  bool is_boundary = false;
  std::size_t cell = 0;   // index of the source cell in the cloud
};

struct IssParams {
  double salient_radius = 2.4;
  double nonmax_radius = 1.2;
  double gamma21 = 0.975;
  double gamma32 = 0.975;
  std::size_t min_neighbors = 5;
  // Smallest eigenvalue below this (m^2) counts as flat, i.e. no keypoint.
  double min_saliency = 2e-3;
  double boundary_radius = 2.4;
  double gap_threshold = std::numbers::pi / 2.0;
};

/// ISS keypoints with boundary candidates removed before non-max suppression.
std::vector<Keypoint> detect_iss_br(const VoxelCloud& cloud, const SpatialIndex& index, const IssParams& params = {});
std::vector<Keypoint> detect_iss_br(const VoxelCloud& cloud, const IssParams& params = {});

/// Largest angular gap between neighbors projected on the local tangent plane
/// exceeds gap_threshold. Fewer than 3 neighbors counts as boundary.
bool is_boundary(const SpatialIndex& index, const Vec3& cell, double radius,
                 double gap_threshold = std::numbers::pi / 2.0);
bool is_boundary(const VoxelCloud& cloud, const Vec3& cell, double radius,
                 double gap_threshold = std::numbers::pi / 2.0);

/// Largest gap (radians) between consecutive polar angles, wrap-around included.
double max_angular_gap(std::vector<double> angles);

struct ScatterEigen {
  Vec3 values = Vec3::Zero();  // descending
  std::size_t neighbors = 0;
};
/// Eigenvalues of the unweighted covariance of cells within radius of p.
ScatterEigen scatter_eigenvalues(const SpatialIndex& index, const Vec3& p, double radius);

}  // namespace lpr
