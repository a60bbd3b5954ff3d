#include "lpr/registration/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lpr/core/scan_io.hpp"

namespace lpr {

std::vector<std::vector<std::size_t>> geometric_consistency(std::span<const Correspondence> correspondences,
                                                            double resolution, std::size_t min_cluster) {
  const std::size_t n = correspondences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return correspondences[a].distance < correspondences[b].distance;
  });

  std::vector<std::uint8_t> taken(n, 0);
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t seed = order[s];
    if (taken[seed]) continue;
    std::vector<std::size_t> cluster{seed};
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t j = order[c];
      if (j == seed || taken[j]) continue;
      const Correspondence& cj = correspondences[j];
      bool ok = true;
      for (std::size_t m : cluster) {
        const Correspondence& cm = correspondences[m];
        if (cm.source == cj.source || cm.target == cj.target) {
          ok = false;
          break;
        }
        const double ds = (cj.source_point - cm.source_point).norm();
        const double dt = (cj.target_point - cm.target_point).norm();
        if (!(std::abs(ds - dt) < resolution)) {
          ok = false;
          break;
        }
      }
      if (ok) cluster.push_back(j);
    }
    if (cluster.size() >= min_cluster) {
      for (std::size_t m : cluster) taken[m] = 1;
      clusters.push_back(std::move(cluster));
    }
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return clusters;
}

RigidTransform estimate_rigid(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) throw Error(Errc::DimensionMismatch, "source and target sizes differ");
  if (source.size() < 3) throw Error(Errc::DegenerateConfiguration, "need at least 3 pairs");
  const double n = static_cast<double>(source.size());
  Vec3 cs = Vec3::Zero(), ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= n;
  ct /= n;
  Mat3 h = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 a = source[i] - cs;
    h += a * (target[i] - ct).transpose();
    spread += a * a.transpose();
  }
  // Collinear or coincident sources leave the rotation about their line free.
  const Eigen::SelfAdjointEigenSolver<Mat3> es(spread);
  const double largest = es.eigenvalues()(2);
  if (!(largest > 0.0) || es.eigenvalues()(1) <= 1e-12 * largest)
    throw Error(Errc::DegenerateConfiguration, "source points are collinear or coincident");

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = ct - t.rotation * cs;
  return t;
}

RigidTransform estimate_rigid(std::span<const Correspondence> cluster) {
  std::vector<Vec3> s, t;
  s.reserve(cluster.size());
  t.reserve(cluster.size());
  for (const auto& c : cluster) {
    s.push_back(c.source_point);
    t.push_back(c.target_point);
  }
  return estimate_rigid(s, t);
}

namespace {

struct Association {
  Eigen::Matrix<double, 6, 6> ata = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> atb = Eigen::Matrix<double, 6, 1>::Zero();
  double sq_error = 0.0;
  std::size_t count = 0;
};

Association associate(std::span<const Vec3> source, std::size_t stride, const SpatialIndex& target,
                      const NormalField& normals, const RigidTransform& t, double max_sq) {
  Association a;
  for (std::size_t i = 0; i < source.size(); i += stride) {
    const Vec3 p = t.apply(source[i]);
    const Neighbor nb = target.nearest(p);
    if (nb.sq_distance > max_sq || !normals.is_valid(nb.index)) continue;
    const Vec3& n = normals.normals[nb.index];
    const double r = n.dot(p - target.point(nb.index));
    Eigen::Matrix<double, 6, 1> j;
    j << p.cross(n), n;
    a.ata += j * j.transpose();
    a.atb -= j * r;
    a.sq_error += r * r;
    ++a.count;
  }
  return a;
}

}  // namespace

IcpResult icp_point_to_plane(std::span<const Vec3> source, const SpatialIndex& target, const NormalField& target_normals,
                             const RigidTransform& init, const IcpParams& params) {
  if (source.empty() || target.empty()) throw Error(Errc::NoCorrespondences, "empty cloud");
  if (!init.rotation.allFinite() || !init.translation.allFinite())
    throw Error(Errc::InvalidArgument, "initial transform is not finite");
  const std::size_t stride =
      params.max_source_points == 0 ? 1 : std::max<std::size_t>(1, source.size() / params.max_source_points);
  const double max_sq = params.max_corr_dist * params.max_corr_dist;

  IcpResult result;
  result.transform = init;
  result.source_points = (source.size() + stride - 1) / stride;
  Association a = associate(source, stride, target, target_normals, result.transform, max_sq);
  if (a.count == 0) throw Error(Errc::NoCorrespondences, "no target point within max_corr_dist");

  for (int it = 0; it < params.max_iter; ++it) {
    result.iterations = it + 1;
    const Eigen::Matrix<double, 6, 1> x = a.ata.ldlt().solve(a.atb);
    if (!x.allFinite()) break;
    const Vec3 w = x.head<3>();
    const double angle = w.norm();
    RigidTransform step;
    if (angle > 0.0) step.rotation = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    step.translation = x.tail<3>();
    result.transform = step * result.transform;
    // Keep the rotation orthonormal as small errors accumulate.
    const Eigen::JacobiSVD<Mat3> svd(result.transform.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    result.transform.rotation = svd.matrixU() * svd.matrixV().transpose();

    Association next = associate(source, stride, target, target_normals, result.transform, max_sq);
    if (next.count == 0) throw Error(Errc::NoCorrespondences, "correspondences lost during ICP");
    a = next;
    if (angle + x.tail<3>().norm() < params.tol) {
      result.converged = true;
      break;
    }
  }
  result.correspondences = a.count;
  result.residual = a.sq_error / static_cast<double>(a.count);
  return result;
}

double mean_sq_nearest(std::span<const Vec3> source, const SpatialIndex& target, const RigidTransform& t,
                       std::size_t max_points) {
  if (source.empty() || target.empty()) throw Error(Errc::NoCorrespondences, "empty cloud");
  const std::size_t stride = max_points == 0 ? 1 : std::max<std::size_t>(1, source.size() / max_points);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < source.size(); i += stride, ++n) sum += target.nearest(t.apply(source[i])).sq_distance;
  return sum / static_cast<double>(n);
}

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::None: return "None";
    case Rejection::NoCorrespondences: return "NoCorrespondences";
    case Rejection::NoConsistentCluster: return "NoConsistentCluster";
    case Rejection::DegenerateConfiguration: return "DegenerateConfiguration";
    case Rejection::ResidualTooHigh: return "ResidualTooHigh";
    case Rejection::CloudDistanceTooHigh: return "CloudDistanceTooHigh";
  }
  return "Unknown";
}

VerifyResult verify_correspondences(std::span<const Correspondence> correspondences, std::span<const Vec3> scan_cloud,
                                    const SpatialIndex& place_index, const NormalField& place_normals,
                                    const VerifyParams& params) {
  VerifyResult out;
  if (correspondences.empty()) {
    out.reason = Rejection::NoCorrespondences;
    return out;
  }
  const auto clusters = geometric_consistency(correspondences, params.resolution, params.min_cluster);
  if (clusters.empty()) {
    out.reason = Rejection::NoConsistentCluster;
    return out;
  }
  std::optional<RigidTransform> seed;
  for (const auto& cluster : clusters) {
    std::vector<Correspondence> members;
    for (std::size_t m : cluster) members.push_back(correspondences[m]);
    try {
      seed = estimate_rigid(members);
      out.cluster_size = cluster.size();
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::DegenerateConfiguration) throw;
    }
  }
  if (!seed) {
    out.reason = Rejection::DegenerateConfiguration;
    return out;
  }
  IcpResult icp;
  try {
    icp = icp_point_to_plane(scan_cloud, place_index, place_normals, *seed, params.icp);
  } catch (const Error& e) {
    if (e.code() != Errc::NoCorrespondences) throw;
    out.pose = *seed;
    out.reason = Rejection::NoCorrespondences;
    return out;
  }
  out.pose = icp.transform;
  out.residual = icp.residual;
  out.overlap = icp.overlap();
  if (params.max_cloud_distance < std::numeric_limits<double>::infinity())
    out.full_distance = mean_sq_nearest(scan_cloud, place_index, icp.transform, params.icp.max_source_points);
  out.icp_converged = icp.converged;
  if (!(icp.residual <= params.epsilon_icp)) {
    out.reason = Rejection::ResidualTooHigh;
  } else if (!(out.full_distance <= params.max_cloud_distance)) {
    out.reason = Rejection::CloudDistanceTooHigh;
  } else {
    out.accepted = true;
  }
  return out;
}

std::string format_pose_line(const std::string& scan_id, std::size_t place_id, const VerifyResult& result) {
  const auto q = result.pose.quaternion();
  const Vec3& t = result.pose.translation;
  std::string line = scan_id + ' ' + std::to_string(place_id);
  for (double v : {q.w(), q.x(), q.y(), q.z(), t.x(), t.y(), t.z(), result.residual}) line += ' ' + format_double(v);
  line += result.accepted ? " 1" : " 0";
  return line;
}

}  // namespace lpr
