#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lpr/core/error.hpp"
#include "lpr/core/normals.hpp"
#include "lpr/core/spatial_index.hpp"
#include "lpr/core/types.hpp"

namespace fixtures {

using lpr::Vec3;

inline std::vector<Vec3> random_points(std::size_t n, double half, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

inline lpr::RigidTransform random_motion(std::mt19937_64& rng, double max_translation = 10.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_translation, max_translation);
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return lpr::RigidTransform::from_quaternion(q, Vec3(u(rng), u(rng), u(rng)));
}

inline lpr::VoxelCloud cloud_from(const std::vector<Vec3>& positions, const std::vector<double>& intensity = {},
                                  double cell = 0.4, Vec3 viewpoint = Vec3::Zero()) {
  lpr::VoxelCloud c;
  c.cell_size = cell;
  c.viewpoint = viewpoint;
  for (std::size_t i = 0; i < positions.size(); ++i)
    c.cells.push_back({positions[i], intensity.empty() ? 0.5 : intensity[i], 1});
  return c;
}

// Inside corner of a room: floor and two walls meeting at the origin.
inline std::vector<Vec3> room_corner(double size, double step) {
  std::vector<Vec3> pts;
  const int n = static_cast<int>(std::round(size / step));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double a = i * step, b = j * step;
      pts.emplace_back(a, b, 0.0);
      if (j > 0) pts.emplace_back(a, 0.0, b);
      if (i > 0 && j > 0) pts.emplace_back(0.0, a, b);
    }
  return pts;
}

// Scene with clutter so keypoints and descriptors have non-trivial support.
inline std::vector<Vec3> cluttered_scene(std::mt19937_64& rng, double step = 0.4) {
  std::vector<Vec3> pts;
  for (double x = -12; x <= 12; x += step)
    for (double y = -12; y <= 12; y += step) pts.emplace_back(x, y, 0.0);
  std::uniform_real_distribution<double> u(-9.0, 9.0);
  for (int b = 0; b < 10; ++b) {
    const Vec3 c(u(rng), u(rng), 0.0);
    const double hx = 0.6 + 0.1 * b, hy = 1.2 - 0.05 * b, h = 1.5 + 0.3 * b;
    for (double z = step; z <= h; z += step) {
      for (double x = -hx; x <= hx + 1e-9; x += step) {
        pts.push_back(c + Vec3(x, -hy, z));
        pts.push_back(c + Vec3(x, hy, z));
      }
      for (double y = -hy + step; y < hy - 1e-9; y += step) {
        pts.push_back(c + Vec3(-hx, y, z));
        pts.push_back(c + Vec3(hx, y, z));
      }
    }
  }
  return pts;
}

// Error code thrown by f, or nullopt when it returns normally.
inline std::optional<lpr::Errc> error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const lpr::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lpr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
