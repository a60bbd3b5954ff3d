#include "lpr/keypoints/iss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lpr/core/error.hpp"
#include "lpr/core/normals.hpp"
#include "lpr/core/parallel.hpp"

namespace lpr {

double max_angular_gap(std::vector<double> angles) {
  if (angles.empty()) return 2.0 * std::numbers::pi;
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap;
}

bool is_boundary(const SpatialIndex& index, const Vec3& cell, double radius, double gap_threshold) {
  const auto nbrs = index.radius_search(cell, radius);
  std::vector<Vec3> offsets;
  offsets.reserve(nbrs.size());
  for (const auto& n : nbrs)
    if (n.sq_distance > 0.0) offsets.push_back(index.point(n.index) - cell);
  if (offsets.size() < 3) return true;

  Vec3 mean = Vec3::Zero();
  for (const auto& o : offsets) mean += o;
  mean /= static_cast<double>(offsets.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& o : offsets) cov += (o - mean) * (o - mean).transpose();
  const auto eig = eigen_descending(cov);
  const Vec3 u = eig.vectors.col(0);
  const Vec3 v = eig.vectors.col(1);

  std::vector<double> angles;
  angles.reserve(offsets.size());
  for (const auto& o : offsets) {
    const double x = o.dot(u);
    const double y = o.dot(v);
    if (x == 0.0 && y == 0.0) continue;
    angles.push_back(std::atan2(y, x));
  }
  if (angles.size() < 3) return true;
  return max_angular_gap(std::move(angles)) > gap_threshold;
}

bool is_boundary(const VoxelCloud& cloud, const Vec3& cell, double radius, double gap_threshold) {
  if (cloud.empty()) return true;
  return is_boundary(SpatialIndex(cloud.positions()), cell, radius, gap_threshold);
}

ScatterEigen scatter_eigenvalues(const SpatialIndex& index, const Vec3& p, double radius) {
  const auto nbrs = index.radius_search(p, radius);
  ScatterEigen out;
  out.neighbors = nbrs.size();
  if (nbrs.empty()) return out;
  // Offsets from p keep the result independent of where the cloud sits.
  Vec3 mean = Vec3::Zero();
  for (const auto& n : nbrs) mean += index.point(n.index) - p;
  mean /= static_cast<double>(nbrs.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& n : nbrs) {
    const Vec3 d = index.point(n.index) - p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(nbrs.size());
  out.values = eigen_descending(cov).values;
  return out;
}

std::vector<Keypoint> detect_iss_br(const VoxelCloud& cloud, const SpatialIndex& index, const IssParams& params) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "keypoint detection on empty cloud");
  if (!(params.salient_radius > 0.0) || !(params.nonmax_radius > 0.0) || !(params.boundary_radius > 0.0))
    throw Error(Errc::InvalidArgument, "ISS radii must be positive");
  if (!(params.gamma21 > 0.0 && params.gamma21 < 1.0 && params.gamma32 > 0.0 && params.gamma32 < 1.0))
    throw Error(Errc::InvalidArgument, "ISS gammas must lie in (0,1)");

  const std::size_t n = cloud.size();
  std::vector<double> saliency(n, 0.0);
  std::vector<std::uint8_t> candidate(n, 0);
  parallel_for(n, [&](std::size_t i) {
    const auto eig = scatter_eigenvalues(index, cloud.cells[i].centroid, params.salient_radius);
    if (eig.neighbors < params.min_neighbors) return;
    const double l1 = eig.values(0), l2 = eig.values(1), l3 = eig.values(2);
    if (!(l3 > params.min_saliency)) return;
    if (l2 / l1 < params.gamma21 && l3 / l2 < params.gamma32) {
      saliency[i] = l3;
      candidate[i] = 1;
    }
  });
  parallel_for(n, [&](std::size_t i) {
    if (candidate[i] && is_boundary(index, cloud.cells[i].centroid, params.boundary_radius, params.gap_threshold))
      candidate[i] = 0;
  });

  std::vector<Keypoint> keypoints;
  for (std::size_t i = 0; i < n; ++i) {
    if (!candidate[i]) continue;
    bool is_max = true;
    for (const auto& nb : index.radius_search(cloud.cells[i].centroid, params.nonmax_radius)) {
      if (nb.index == i || !candidate[nb.index]) continue;
      const double s = saliency[nb.index];
      if (s > saliency[i] || (s == saliency[i] && nb.index < i)) {
        is_max = false;
        break;
      }
    }
    if (is_max) keypoints.push_back({cloud.cells[i].centroid, saliency[i], false, i});
  }
  return keypoints;
}

std::vector<Keypoint> detect_iss_br(const VoxelCloud& cloud, const IssParams& params) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "keypoint detection on empty cloud");
  return detect_iss_br(cloud, SpatialIndex(cloud.positions()), params);
}

}  // namespace lpr
