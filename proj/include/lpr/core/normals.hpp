#pragma once

#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"

namespace lpr {

struct NormalParams {
  double radius = 1.0;
  std::size_t min_neighbors = 3;
  // Neighborhoods whose middle/largest eigenvalue ratio falls below this are
  // collinear (e.g. a single scan ring) and get no normal.
  double collinear_ratio = 1e-2;
};

/// PCA normals oriented toward cloud.viewpoint. Cells with too few neighbors
/// or a collinear neighborhood are flagged invalid.
NormalField estimate_normals(const VoxelCloud& cloud, const SpatialIndex& index, const NormalParams& params = {});
NormalField estimate_normals(const VoxelCloud& cloud, double radius);

/// Eigen-decomposition of a symmetric 3x3 with eigenvalues in descending order.
struct Eigen3 {
  Vec3 values;  // values(0) >= values(1) >= values(2)
  Mat3 vectors; // column i pairs with values(i)
};
Eigen3 eigen_descending(const Mat3& m);

}  // namespace lpr
