#include "lpr/core/spatial_index.hpp"

#include <algorithm>
#include <numeric>

#include "lpr/core/error.hpp"

namespace lpr {

SpatialIndex::SpatialIndex(std::vector<Vec3> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, 0, 0});
  if (end - begin <= leaf_size_) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];

  nodes_[id].axis = axis;
  nodes_[id].split = split;
  // Left holds [begin, mid) with coord <= split, right [mid, end) with coord >= split.
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SpatialIndex::knn_recurse(std::uint32_t node_id, const Vec3& q, std::size_t k,
                               std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], squared_distance(points_[order_[i]], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::uint32_t near = diff <= 0.0 ? node.left : node.right;
  const std::uint32_t far = diff <= 0.0 ? node.right : node.left;
  knn_recurse(near, q, k, heap);
  // Equal distance must still be explored so index tie-breaks stay exact.
  if (heap.size() < k || diff * diff <= heap.front().sq_distance) knn_recurse(far, q, k, heap);
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  if (points_.empty()) throw Error(Errc::EmptyIndex, "knn on empty index");
  if (k == 0) throw Error(Errc::InvalidArgument, "knn requires k >= 1");
  std::vector<Neighbor> heap;
  heap.reserve(k + 1);
  knn_recurse(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

Neighbor SpatialIndex::nearest(const Vec3& query) const { return knn(query, 1).front(); }

void SpatialIndex::radius_recurse(std::uint32_t node_id, const Vec3& q, double r2, std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d2 = squared_distance(points_[order_[i]], q);
      if (d2 <= r2) out.push_back({order_[i], d2});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_recurse(node.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_recurse(node.right, q, r2, out);
}

std::vector<Neighbor> SpatialIndex::radius_search(const Vec3& query, double radius) const {
  if (points_.empty()) throw Error(Errc::EmptyIndex, "radius search on empty index");
  if (!(radius > 0.0)) throw Error(Errc::InvalidArgument, "radius must be positive");
  std::vector<Neighbor> out;
  radius_recurse(0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lpr
