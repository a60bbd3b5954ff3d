#include "lpr/synth/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

constexpr double kEps = 1e-9;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool odd(double v) { return (static_cast<std::int64_t>(std::floor(v)) & 1) != 0; }

struct Template {
  Shape shape;
  double half_x;
  double half_y;
  double height;
};

// Few repeated shapes, so geometry alone is ambiguous between landmarks.
constexpr std::array<Template, 5> kTemplates{{
    {Shape::Box, 1.0, 1.0, 3.0},
    {Shape::Box, 2.0, 0.75, 2.5},
    {Shape::Cylinder, 0.8, 0.8, 3.5},
    {Shape::Cylinder, 0.35, 0.35, 5.0},
    {Shape::Box, 3.0, 3.0, 4.0},
}};

std::optional<Hit> hit_box(const Landmark& l, const Vec3& o, const Vec3& d, double max_t) {
  const double c = std::cos(l.yaw), s = std::sin(l.yaw);
  const double px = o.x() - l.x, py = o.y() - l.y;
  const Vec3 lo(c * px + s * py, -s * px + c * py, o.z());
  const Vec3 ld(c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z());
  const Vec3 lower(-l.half_x, -l.half_y, 0.0), upper(l.half_x, l.half_y, l.height);
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ld[a]) < 1e-15) {
      if (lo[a] < lower[a] || lo[a] > upper[a]) return std::nullopt;
      continue;
    }
    double t0 = (lower[a] - lo[a]) / ld[a];
    double t1 = (upper[a] - lo[a]) / ld[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_enter) {
      t_enter = t0;
      axis = a;
    }
    t_exit = std::min(t_exit, t1);
  }
  if (axis < 0 || t_enter > t_exit || t_enter <= kEps || t_enter > max_t) return std::nullopt;
  const Vec3 lp = lo + t_enter * ld;
  Hit h;
  h.distance = t_enter;
  h.point = o + t_enter * d;
  if (axis == 0) h.reflectance = l.texture.value(lp.y() + (lp.x() > 0 ? 0.0 : 2.0 * l.half_y), lp.z());
  else if (axis == 1) h.reflectance = l.texture.value(lp.x() + (lp.y() > 0 ? 0.0 : 2.0 * l.half_x), lp.z());
  else h.reflectance = l.texture.value(lp.x(), lp.y());
  if (l.retro) h.reflectance = 100.0;
  return h;
}

std::optional<Hit> hit_cylinder(const Landmark& l, const Vec3& o, const Vec3& d, double max_t) {
  const double px = o.x() - l.x, py = o.y() - l.y;
  const double r = l.half_x;
  const double a = d.x() * d.x() + d.y() * d.y();
  std::optional<double> t_hit;
  bool side = false;
  if (a > 1e-15) {
    const double b = 2.0 * (px * d.x() + py * d.y());
    const double c = px * px + py * py - r * r;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (t > kEps && z >= 0.0 && z <= l.height) {
        t_hit = t;
        side = true;
      }
    }
  }
  if (!t_hit && o.z() > l.height && d.z() < 0.0) {
    const double t = (l.height - o.z()) / d.z();
    const double x = px + t * d.x(), y = py + t * d.y();
    if (x * x + y * y <= r * r) t_hit = t;
  }
  if (!t_hit || *t_hit > max_t) return std::nullopt;
  Hit h;
  h.distance = *t_hit;
  h.point = o + *t_hit * d;
  const double lx = h.point.x() - l.x, ly = h.point.y() - l.y;
  if (side) {
    const double angle = std::atan2(ly, lx) - l.yaw;
    h.reflectance = l.texture.value(std::remainder(angle, 2.0 * std::numbers::pi) * r + std::numbers::pi * r, h.point.z());
  } else {
    h.reflectance = l.texture.value(lx, ly);
  }
  if (l.retro) h.reflectance = 100.0;
  return h;
}

}  // namespace

double Texture::value(double u, double z) const {
  switch (pattern) {
    case Pattern::Uniform: return low;
    case Pattern::HorizontalStripes: return odd(z / period + phase) ? high : low;
    case Pattern::VerticalStripes: return odd(u / period + phase) ? high : low;
    case Pattern::Checker: return odd(std::floor(u / period + phase) + std::floor(z / period)) ? high : low;
  }
  return low;
}

double Landmark::footprint_radius() const {
  return shape == Shape::Cylinder ? half_x : std::hypot(half_x, half_y);
}

double Ground::value(double x, double y) const {
  const auto ix = static_cast<std::int64_t>(std::floor(x / patch));
  const auto iy = static_cast<std::int64_t>(std::floor(y / patch));
  const std::uint64_t h =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x100000001b3ULL + static_cast<std::uint64_t>(iy)));
  return low + (high - low) * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

double distance_to_polyline(const Vec3& p, std::span<const Vec3> polyline) {
  double best = std::numeric_limits<double>::infinity();
  const Eigen::Vector2d q = p.head<2>();
  for (std::size_t i = 0; i < polyline.size(); ++i) {
    const Eigen::Vector2d a = polyline[i].head<2>();
    const Eigen::Vector2d b = polyline[i + 1 < polyline.size() ? i + 1 : i].head<2>();
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, (q - (a + t * ab)).norm());
  }
  return best;
}

World generate_world(std::uint64_t seed, double extent, std::size_t num_landmarks, const WorldOptions& options) {
  if (!(extent > 0.0)) throw Error(Errc::InvalidArgument, "extent must be > 0");
  World world;
  world.seed = seed;
  world.extent = extent;
  world.ground.seed = splitmix64(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double half = extent / 2.0;

  int attempts = 0;
  while (world.landmarks.size() < num_landmarks) {
    if (++attempts > options.max_attempts)
      throw Error(Errc::TooManyLandmarks, "placed " + std::to_string(world.landmarks.size()) + " of " +
                                              std::to_string(num_landmarks) + " landmarks");
    const Template& t = kTemplates[static_cast<std::size_t>(unit(rng) * kTemplates.size()) % kTemplates.size()];
    Landmark l;
    l.shape = t.shape;
    l.half_x = t.half_x;
    l.half_y = t.half_y;
    l.height = t.height;
    l.x = -half + extent * unit(rng);
    l.y = -half + extent * unit(rng);
    l.yaw = 2.0 * std::numbers::pi * unit(rng);
    l.texture.pattern = static_cast<Pattern>(1 + static_cast<int>(unit(rng) * 3.0) % 3);
    l.texture.low = 8.0 + 32.0 * unit(rng);
    l.texture.high = std::min(80.0, l.texture.low + 25.0 + 15.0 * unit(rng));
    l.texture.period = 0.6 + unit(rng);
    l.texture.phase = unit(rng);

    const Vec3 c(l.x, l.y, 0.0);
    if (!options.keep_clear.empty() &&
        distance_to_polyline(c, options.keep_clear) < options.clearance + l.footprint_radius())
      continue;
    bool ok = true;
    for (const auto& other : world.landmarks) {
      const double need = std::max(options.min_separation, l.footprint_radius() + other.footprint_radius() + 1.0);
      if (std::hypot(l.x - other.x, l.y - other.y) < need) {
        ok = false;
        break;
      }
    }
    if (ok) world.landmarks.push_back(l);
  }
  return world;
}

std::optional<Hit> cast_ray(const World& world, const Vec3& origin, const Vec3& direction, double max_distance,
                            const std::vector<std::size_t>* candidates) {
  std::optional<Hit> best;
  double limit = max_distance;
  if (direction.z() < 0.0 && origin.z() > 0.0) {
    const double t = -origin.z() / direction.z();
    if (t <= limit) {
      Hit h;
      h.distance = t;
      h.point = origin + t * direction;
      h.point.z() = 0.0;
      h.reflectance = world.ground.value(h.point.x(), h.point.y());
      best = h;
      limit = t;
    }
  }
  const auto test = [&](const Landmark& l) {
    auto h = l.shape == Shape::Box ? hit_box(l, origin, direction, limit) : hit_cylinder(l, origin, direction, limit);
    if (h && h->distance < limit) {
      limit = h->distance;
      best = h;
    }
  };
  if (candidates) {
    for (std::size_t i : *candidates) test(world.landmarks[i]);
  } else {
    for (const auto& l : world.landmarks) test(l);
  }
  return best;
}

}  // namespace lpr
