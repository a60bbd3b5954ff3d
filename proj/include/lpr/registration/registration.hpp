#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpr/core/error.hpp"
#include "lpr/core/normals.hpp"
#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"

namespace lpr {

/// Scan keypoint paired with a place keypoint.
struct Correspondence {
  std::size_t source = 0;
  std::size_t target = 0;
  Vec3 source_point = Vec3::Zero();
  Vec3 target_point = Vec3::Zero();
  double distance = 0.0;  // descriptor distance
};
using CorrespondenceSet = std::vector<Correspondence>;

/// Greedy grouping seeded by ascending descriptor distance. A candidate joins
/// a cluster when its pairwise length differences to every member stay below
/// `resolution` and neither of its keypoints is used yet. Returns member
/// indices into `correspondences`, largest cluster first.
std::vector<std::vector<std::size_t>> geometric_consistency(std::span<const Correspondence> correspondences,
                                                            double resolution = 7.0, std::size_t min_cluster = 8);

/// Least-squares R, t with R*source + t ~ target (SVD, det R = +1).
RigidTransform estimate_rigid(std::span<const Vec3> source, std::span<const Vec3> target);
RigidTransform estimate_rigid(std::span<const Correspondence> cluster);

struct IcpParams {
  int max_iter = 50;
  double max_corr_dist = 2.0;
  double tol = 1e-6;
  // Source points used per iteration, evenly strided; 0 uses all.
  std::size_t max_source_points = 0;
};

struct IcpResult {
  RigidTransform transform;
  double residual = 0.0;  // mean squared point-to-plane error, m^2
  int iterations = 0;
  bool converged = false;
  std::size_t correspondences = 0;
  std::size_t source_points = 0;

  double overlap() const {
    return source_points == 0 ? 0.0 : static_cast<double>(correspondences) / static_cast<double>(source_points);
  }
};

/// Mean squared distance from every `stride`-th transformed source point to
/// its nearest target point, without any cutoff.
double mean_sq_nearest(std::span<const Vec3> source, const SpatialIndex& target, const RigidTransform& t,
                       std::size_t max_points = 0);

/// Linearized point-to-plane ICP against a target with normals.
IcpResult icp_point_to_plane(std::span<const Vec3> source, const SpatialIndex& target, const NormalField& target_normals,
                             const RigidTransform& init, const IcpParams& params = {});

struct VerifyParams {
  std::size_t k_nearest = 4;
  double resolution = 7.0;
  std::size_t min_cluster = 8;
  double epsilon_icp = 7.0;
  // Ceiling on mean_sq_nearest after ICP (m^2); infinity disables it.
  double max_cloud_distance = 1.0;
  IcpParams icp{50, 2.0, 1e-6, 4000};
};

enum class Rejection { None, NoCorrespondences, NoConsistentCluster, DegenerateConfiguration, ResidualTooHigh, CloudDistanceTooHigh };
std::string_view to_string(Rejection r);

struct VerifyResult {
  bool accepted = false;
  Rejection reason = Rejection::None;
  RigidTransform pose;
  double residual = 0.0;
  double overlap = 0.0;
  double full_distance = 0.0;  // mean_sq_nearest after ICP, m^2
  std::size_t cluster_size = 0;
  bool icp_converged = false;
};

/// Verification core: clustering, closed-form seed, ICP, threshold.
VerifyResult verify_correspondences(std::span<const Correspondence> correspondences, std::span<const Vec3> scan_cloud,
                                    const SpatialIndex& place_index, const NormalField& place_normals,
                                    const VerifyParams& params = {});

/// `scan_id place_id qw qx qy qz tx ty tz residual accepted`
std::string format_pose_line(const std::string& scan_id, std::size_t place_id, const VerifyResult& result);

}  // namespace lpr
