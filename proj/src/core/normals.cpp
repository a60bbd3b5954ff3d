#include "lpr/core/normals.hpp"

#include <Eigen/Eigenvalues>

#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"

namespace lpr {

Eigen3 eigen_descending(const Mat3& m) {
  Eigen::SelfAdjointEigenSolver<Mat3> solver(m);
  Eigen3 out;
  // Eigen returns ascending order.
  for (int i = 0; i < 3; ++i) {
    out.values(i) = solver.eigenvalues()(2 - i);
    out.vectors.col(i) = solver.eigenvectors().col(2 - i);
  }
  return out;
}

NormalField estimate_normals(const VoxelCloud& cloud, const SpatialIndex& index, const NormalParams& params) {
  NormalField field;
  field.normals.assign(cloud.size(), Vec3::Zero());
  field.valid.assign(cloud.size(), 0);
  parallel_for(cloud.size(), [&](std::size_t i) {
    const Vec3& p = cloud.cells[i].centroid;
    const auto nbrs = index.radius_search(p, params.radius);
    // The query cell itself is part of the result.
    if (nbrs.size() < params.min_neighbors + 1) return;
    Vec3 mean = Vec3::Zero();
    for (const auto& n : nbrs) mean += index.point(n.index);
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nbrs) {
      const Vec3 d = index.point(n.index) - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());
    const auto eig = eigen_descending(cov);
    if (!(eig.values(0) > 0.0) || eig.values(1) < params.collinear_ratio * eig.values(0)) return;
    Vec3 normal = eig.vectors.col(2).normalized();
    if (normal.dot(cloud.viewpoint - p) < 0.0) normal = -normal;
    field.normals[i] = normal;
    field.valid[i] = 1;
  });
  return field;
}

NormalField estimate_normals(const VoxelCloud& cloud, double radius) {
  if (!(radius > 0.0)) throw Error(Errc::InvalidArgument, "normal radius must be > 0");
  const SpatialIndex index(cloud.positions());
  NormalParams params;
  params.radius = radius;
  return estimate_normals(cloud, index, params);
}

}  // namespace lpr
