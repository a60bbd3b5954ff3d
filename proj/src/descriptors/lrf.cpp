#include <cmath>

#include "lpr/core/error.hpp"
#include "lpr/core/normals.hpp"
#include "lpr/descriptors/shot.hpp"

namespace lpr {
namespace {

// Flip `axis` so most offsets lie on its positive side; ties fall back to the
// weighted sum of projections.
Vec3 disambiguate(const Vec3& axis, const std::vector<Vec3>& offsets, const std::vector<double>& weights) {
  long balance = 0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double d = offsets[i].dot(axis);
    balance += d >= 0.0 ? 1 : -1;
    weighted += weights[i] * d;
  }
  if (balance < 0 || (balance == 0 && weighted < 0.0)) return -axis;
  return axis;
}

}  // namespace

LocalReferenceFrame compute_lrf(const SpatialIndex& index, const Vec3& keypoint, double radius,
                                std::size_t min_neighbors) {
  if (index.empty()) throw Error(Errc::InsufficientSupport, "empty cloud");
  const auto nbrs = index.radius_search(keypoint, radius);
  std::vector<Vec3> offsets;
  std::vector<double> weights;
  offsets.reserve(nbrs.size());
  weights.reserve(nbrs.size());
  Mat3 cov = Mat3::Zero();
  double weight_sum = 0.0;
  for (const auto& n : nbrs) {
    if (n.sq_distance == 0.0) continue;
    const Vec3 d = index.point(n.index) - keypoint;
    const double w = radius - std::sqrt(n.sq_distance);
    cov += w * d * d.transpose();
    weight_sum += w;
    offsets.push_back(d);
    weights.push_back(w);
  }
  if (offsets.size() < min_neighbors)
    throw Error(Errc::InsufficientSupport, std::to_string(offsets.size()) + " neighbors for local frame");
  if (weight_sum > 0.0) cov /= weight_sum;

  const auto eig = eigen_descending(cov);
  const Vec3 x = disambiguate(eig.vectors.col(0).normalized(), offsets, weights);
  const Vec3 z = disambiguate(eig.vectors.col(2).normalized(), offsets, weights);
  const Vec3 y = z.cross(x);

  LocalReferenceFrame lrf;
  lrf.origin = keypoint;
  lrf.axes.row(0) = x.transpose();
  lrf.axes.row(1) = y.transpose();
  lrf.axes.row(2) = z.transpose();
  return lrf;
}

}  // namespace lpr
