#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lpr/core/types.hpp"

namespace lpr {

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

/// Exact 3-D kd-tree. Results are ordered by (distance, point index), so a
/// query returns the same sequence a brute-force scan would.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Vec3> points, std::size_t leaf_size = 12);

  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  std::vector<Neighbor> radius_search(const Vec3& query, double radius) const;
  /// Nearest point only; cheaper than knn(query, 1) for ICP-style loops.
  Neighbor nearest(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  struct Node {
    // Leaf when axis < 0: [begin, end) indexes into order_.
    std::int32_t axis = -1;
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void knn_recurse(std::uint32_t node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;
  void radius_recurse(std::uint32_t node, const Vec3& q, double r2, std::vector<Neighbor>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 12;
};

}  // namespace lpr
