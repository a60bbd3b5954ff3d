#include "lpr/descriptors/shot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kAzimuth = 8;
constexpr double kSectorSpan = 2.0 * kPi / kAzimuth;

// Linear split of a value in [-1,1] between the two nearest bin centers.
struct BinSplit {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double w_hi = 0.0;
  std::size_t nearest = 0;
};

BinSplit split_value(double value, std::size_t bins) {
  const double u = (std::clamp(value, -1.0, 1.0) + 1.0) * 0.5 * static_cast<double>(bins) - 0.5;
  BinSplit s;
  if (u <= 0.0) return s;
  const double last = static_cast<double>(bins - 1);
  if (u >= last) {
    s.lo = s.hi = s.nearest = bins - 1;
    return s;
  }
  const double f = std::floor(u);
  s.lo = static_cast<std::size_t>(f);
  s.hi = s.lo + 1;
  s.w_hi = u - f;
  s.nearest = s.w_hi >= 0.5 ? s.hi : s.lo;
  return s;
}

// Volume index = (azimuth * 2 + elevation) * 2 + shell.
std::size_t volume_index(int azimuth, int elevation, int shell) {
  return static_cast<std::size_t>((azimuth * 2 + elevation) * 2 + shell);
}

struct SpatialSplit {
  std::size_t own = 0;
  // Up to three neighbor volumes, one per spatial dimension, with weights.
  std::size_t other[3] = {0, 0, 0};
  double w_other[3] = {0.0, 0.0, 0.0};
  double w_own = 0.0;
};

SpatialSplit split_space(const Vec3& local, double distance, double radius) {
  SpatialSplit s;
  const double phi = std::atan2(local.y(), local.x());
  int az = static_cast<int>(std::floor((phi + kPi) / kSectorSpan));
  az = std::clamp(az, 0, kAzimuth - 1);
  const int elev = local.z() > 0.0 ? 1 : 0;
  const int shell = distance > 0.5 * radius ? 1 : 0;
  s.own = volume_index(az, elev, shell);

  // Azimuth: cyclic neighbor.
  const double az_center = -kPi + (az + 0.5) * kSectorSpan;
  const double d_az = std::clamp((phi - az_center) / kSectorSpan, -0.5, 0.5);
  const int az_nb = (az + (d_az >= 0.0 ? 1 : kAzimuth - 1)) % kAzimuth;
  s.other[0] = volume_index(az_nb, elev, shell);
  s.w_other[0] = std::abs(d_az);
  s.w_own += 1.0 - std::abs(d_az);

  // Elevation: inclination from +z, centers at 45 and 135 degrees.
  const double incl = std::acos(std::clamp(local.z() / distance, -1.0, 1.0));
  const double el_center = elev == 1 ? 0.25 * kPi : 0.75 * kPi;
  const double d_el = (incl - el_center) / (0.5 * kPi);
  const bool toward_other_el = elev == 1 ? d_el > 0.0 : d_el < 0.0;
  if (toward_other_el) {
    s.other[1] = volume_index(az, 1 - elev, shell);
    s.w_other[1] = std::abs(d_el);
    s.w_own += 1.0 - std::abs(d_el);
  } else {
    s.w_own += 1.0;
  }

  // Radial: shell centers at radius/4 and 3*radius/4.
  const double sh_center = shell == 1 ? 0.75 * radius : 0.25 * radius;
  const double d_sh = (distance - sh_center) / (0.5 * radius);
  const bool toward_other_sh = shell == 1 ? d_sh < 0.0 : d_sh > 0.0;
  if (toward_other_sh) {
    s.other[2] = volume_index(az, elev, 1 - shell);
    s.w_other[2] = std::abs(d_sh);
    s.w_own += 1.0 - std::abs(d_sh);
  } else {
    s.w_own += 1.0;
  }
  return s;
}

// Adds one sample to a cue block: the histogram dimension splits a unit of
// weight between bins of the own volume, each spatial dimension splits a
// unit between the own and the adjacent volume at the nearest bin.
void accumulate(std::vector<double>& block, std::size_t bins, const SpatialSplit& sp, const BinSplit& b) {
  const std::size_t own = sp.own * bins;
  block[own + b.lo] += 1.0 - b.w_hi;
  if (b.w_hi > 0.0) block[own + b.hi] += b.w_hi;
  block[own + b.nearest] += sp.w_own;
  for (int k = 0; k < 3; ++k)
    if (sp.w_other[k] > 0.0) block[sp.other[k] * bins + b.nearest] += sp.w_other[k];
}

bool normalize(std::vector<double>& block) {
  double sq = 0.0;
  for (double v : block) sq += v * v;
  if (!(sq > 0.0)) return false;
  const double inv = 1.0 / std::sqrt(sq);
  for (double& v : block) v *= inv;
  return true;
}

Descriptor describe(const Surface& surface, const Keypoint& keypoint, const LocalReferenceFrame& lrf,
                    const ShotParams& params, bool with_intensity) {
  if (keypoint.cell >= surface.cloud.size()) throw Error(Errc::InvalidArgument, "keypoint cell out of range");
  const double radius = params.radius;
  const Vec3 kp_normal =
      surface.normals.is_valid(keypoint.cell) ? surface.normals.normals[keypoint.cell] : Vec3(lrf.axes.row(2));
  const double kp_intensity = surface.cloud.cells[keypoint.cell].intensity;

  std::vector<double> shape(kShotVolumes * params.shape_bins, 0.0);
  std::vector<double> texture(with_intensity ? kShotVolumes * params.intensity_bins : 0, 0.0);

  for (const auto& nb : surface.index.radius_search(lrf.origin, radius)) {
    if (nb.sq_distance == 0.0 || !surface.normals.is_valid(nb.index)) continue;
    const Vec3& p = surface.cloud.cells[nb.index].centroid;
    const double distance = std::sqrt(nb.sq_distance);
    const SpatialSplit sp = split_space(lrf.to_local(p), distance, radius);
    const double cosine = kp_normal.dot(surface.normals.normals[nb.index]);
    accumulate(shape, params.shape_bins, sp, split_value(cosine, params.shape_bins));
    if (with_intensity) {
      const double diff = kp_intensity - surface.cloud.cells[nb.index].intensity;
      accumulate(texture, params.intensity_bins, sp, split_value(diff, params.intensity_bins));
    }
  }

  Descriptor d;
  d.kind = with_intensity ? DescriptorKind::Ishot : DescriptorKind::Shot;
  d.usable = normalize(shape);
  if (with_intensity) normalize(texture);
  d.values = std::move(shape);
  d.values.insert(d.values.end(), texture.begin(), texture.end());
  return d;
}

}  // namespace

Descriptor compute_shot(const Surface& surface, const Keypoint& keypoint, const LocalReferenceFrame& lrf,
                        const ShotParams& params) {
  return describe(surface, keypoint, lrf, params, false);
}

Descriptor compute_ishot(const Surface& surface, const Keypoint& keypoint, const LocalReferenceFrame& lrf,
                         const ShotParams& params) {
  return describe(surface, keypoint, lrf, params, true);
}

Keypoint keypoint_at(const Surface& surface, const Vec3& position) {
  const auto nn = surface.index.nearest(position);
  Keypoint kp;
  kp.position = surface.cloud.cells[nn.index].centroid;
  kp.cell = nn.index;
  return kp;
}

}  // namespace lpr
