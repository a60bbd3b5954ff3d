#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lpr/descriptors/shot.hpp"

namespace lpr {

/// Flat float32 descriptor matrix; every row is tagged with its owning place
/// and keypoint. Immutable once built, safe for concurrent queries.
class DescriptorIndex {
 public:
  DescriptorIndex() = default;
  explicit DescriptorIndex(std::size_t dims) : dims_(dims) {}

  void add(std::span<const float> row, std::uint32_t place, std::uint32_t keypoint);
  void add(std::span<const double> row, std::uint32_t place, std::uint32_t keypoint);

  std::size_t size() const { return places_.size(); }
  std::size_t dims() const { return dims_; }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dims_, dims_}; }
  std::uint32_t place(std::size_t i) const { return places_[i]; }
  std::uint32_t keypoint(std::size_t i) const { return keypoints_[i]; }

 private:
  std::size_t dims_ = 0;
  std::vector<float> data_;
  std::vector<std::uint32_t> places_;
  std::vector<std::uint32_t> keypoints_;
};

struct VoteMatch {
  std::size_t query_index = 0;
  std::size_t nearest = 0;  // row in the database index
  std::size_t second = 0;
  double nearest_sq = 0.0;
  double second_sq = 0.0;
  double tau = 1.0;
  std::uint32_t place = 0;  // owner of the nearest row

  bool operator==(const VoteMatch&) const = default;
};

/// Queries as float32 rows, same precision as the database.
std::vector<float> to_float_row(std::span<const double> values, std::size_t dims);

/// Squared distance over the first `dims` components, accumulated in double
/// in index order.
double descriptor_sq_distance(std::span<const float> a, std::span<const float> b, std::size_t dims);

/// Exact two nearest neighbors per query and the distance ratio. `dims` = 0
/// compares full rows; a smaller value compares a prefix (e.g. the geometric
/// cue of ISHOT rows).
std::vector<VoteMatch> match_nndr(std::span<const std::vector<float>> queries, const DescriptorIndex& database,
                                  std::size_t dims = 0);

struct DescriptorNeighbor {
  std::size_t row = 0;
  double sq_distance = 0.0;
};
/// k nearest rows of `database` restricted to `rows`, ascending, ties by row.
std::vector<DescriptorNeighbor> knn_rows(std::span<const float> query, const DescriptorIndex& database,
                                         std::span<const std::size_t> rows, std::size_t k, std::size_t dims = 0);

}  // namespace lpr
