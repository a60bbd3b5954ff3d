#include "lpr/descriptors/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"

namespace lpr {
namespace {

constexpr std::size_t kBlock = 32;

// Same accumulation order as descriptor_sq_distance, abandoned once the
// partial sum exceeds `bound` (partial sums never decrease).
double bounded_sq_distance(const float* a, const float* b, std::size_t dims, double bound) {
  double sum = 0.0;
  std::size_t i = 0;
  while (i < dims) {
    const std::size_t end = std::min(dims, i + kBlock);
    for (; i < end; ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      sum += d * d;
    }
    if (sum > bound) return std::numeric_limits<double>::infinity();
  }
  return sum;
}

}  // namespace

void DescriptorIndex::add(std::span<const float> row, std::uint32_t place, std::uint32_t keypoint) {
  if (row.size() != dims_) throw Error(Errc::DimensionMismatch, "descriptor row length");
  data_.insert(data_.end(), row.begin(), row.end());
  places_.push_back(place);
  keypoints_.push_back(keypoint);
}

void DescriptorIndex::add(std::span<const double> row, std::uint32_t place, std::uint32_t keypoint) {
  add(to_float_row(row, dims_), place, keypoint);
}

std::vector<float> to_float_row(std::span<const double> values, std::size_t dims) {
  if (values.size() < dims) throw Error(Errc::DimensionMismatch, "descriptor shorter than requested dims");
  std::vector<float> out(dims);
  for (std::size_t i = 0; i < dims; ++i) out[i] = static_cast<float>(values[i]);
  return out;
}

double descriptor_sq_distance(std::span<const float> a, std::span<const float> b, std::size_t dims) {
  double sum = 0.0;
  for (std::size_t i = 0; i < dims; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum;
}

std::vector<VoteMatch> match_nndr(std::span<const std::vector<float>> queries, const DescriptorIndex& database,
                                  std::size_t dims) {
  if (database.size() < 2) throw Error(Errc::DatabaseTooSmall, "need at least 2 database descriptors");
  if (dims == 0) dims = database.dims();
  if (dims > database.dims()) throw Error(Errc::DimensionMismatch, "prefix longer than database rows");
  for (const auto& q : queries)
    if (q.size() < dims) throw Error(Errc::DimensionMismatch, "query descriptor too short");

  std::vector<VoteMatch> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t qi) {
    const float* q = queries[qi].data();
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_row = 0, second_row = 0;
    for (std::size_t r = 0; r < database.size(); ++r) {
      const double d = bounded_sq_distance(q, database.row(r).data(), dims, second);
      // Strict comparisons keep the lowest row on ties.
      if (d < best) {
        second = best;
        second_row = best_row;
        best = d;
        best_row = r;
      } else if (d < second) {
        second = d;
        second_row = r;
      }
    }
    VoteMatch& m = out[qi];
    m.query_index = qi;
    m.nearest = best_row;
    m.second = second_row;
    m.nearest_sq = best;
    m.second_sq = second;
    m.tau = second > 0.0 ? std::sqrt(best) / std::sqrt(second) : 1.0;
    m.place = database.place(best_row);
  });
  return out;
}

std::vector<DescriptorNeighbor> knn_rows(std::span<const float> query, const DescriptorIndex& database,
                                         std::span<const std::size_t> rows, std::size_t k, std::size_t dims) {
  if (dims == 0) dims = database.dims();
  std::vector<DescriptorNeighbor> all;
  all.reserve(rows.size());
  for (std::size_t r : rows) all.push_back({r, descriptor_sq_distance(query, database.row(r), dims)});
  const auto less = [](const DescriptorNeighbor& a, const DescriptorNeighbor& b) {
    return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.row < b.row);
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
  all.resize(keep);
  return all;
}

}  // namespace lpr
