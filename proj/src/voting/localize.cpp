#include "lpr/voting/localize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "lpr/calib/calibration.hpp"
#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"

namespace lpr {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

ScanShotCache::ScanShotCache(const FeatureCloud& scan, const ShotParams& params)
    : scan_(scan), params_(params), rows_(scan.keypoints.size()), state_(scan.keypoints.size(), 0) {}

void ScanShotCache::put(std::size_t keypoint, const Descriptor& ishot) {
  const std::size_t dims = kShotVolumes * params_.shape_bins;
  rows_[keypoint] = ishot.usable ? to_float_row(ishot.values, dims) : std::vector<float>{};
  state_[keypoint] = 1;
}

const std::vector<float>& ScanShotCache::get(std::size_t keypoint) {
  if (!state_[keypoint]) {
    const Descriptor d = describe_keypoint(scan_, keypoint, DescriptorKind::Shot, params_);
    rows_[keypoint] = d.usable ? to_float_row(d.values, d.values.size()) : std::vector<float>{};
    state_[keypoint] = 1;
  }
  return rows_[keypoint];
}

VerifyResult verify_candidate(const FeatureCloud& scan, ScanShotCache& shots, const PlaceDatabase& db,
                              std::size_t place_id, const VerifyParams& params) {
  const Place& place = db.places.at(place_id);
  const std::size_t dims = kShotVolumes * db.params.shot.shape_bins;
  std::vector<std::size_t> rows(db.row_begin[place_id + 1] - db.row_begin[place_id]);
  std::iota(rows.begin(), rows.end(), db.row_begin[place_id]);

  // Fill the cache serially, then match in parallel.
  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k < scan.keypoints.size(); ++k)
    if (!shots.get(k).empty()) usable.push_back(k);
  std::vector<std::vector<DescriptorNeighbor>> nearest(usable.size());
  parallel_for(usable.size(), [&](std::size_t u) {
    nearest[u] = knn_rows(shots.get(usable[u]), db.index, rows, params.k_nearest, dims);
  });

  CorrespondenceSet correspondences;
  for (std::size_t u = 0; u < usable.size(); ++u) {
    const std::size_t k = usable[u];
    for (const auto& nb : nearest[u]) {
      const std::size_t target = db.index.keypoint(nb.row);
      correspondences.push_back(
          {k, target, scan.keypoints[k].position, place.features.keypoints[target].position, std::sqrt(nb.sq_distance)});
    }
  }
  return verify_correspondences(correspondences, scan.index.points(), place.features.index, place.features.normals,
                                params);
}

LocalizationResult localize(const FeatureCloud& scan, const PlaceDatabase& db, const ProbabilityTable& table,
                            const PrecisionModel& model, const LocalizeParams& params) {
  const std::size_t n = scan.keypoints.size();
  if (n == 0) throw Error(Errc::NoKeypoints, "scan has no keypoints");
  if (params.batch_size == 0) throw Error(Errc::InvalidArgument, "batch size must be > 0");
  if (table.places() != db.size()) throw Error(Errc::DimensionMismatch, "table does not match database");

  LocalizationResult result;
  result.keypoints_total = n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(params.seed);
  std::shuffle(order.begin(), order.end(), rng);

  ScanShotCache shots(scan, db.params.shot);
  PlacePosterior posterior(db.size());
  const std::size_t dims = db.index.dims();
  bool triggered = false;

  for (std::size_t pos = 0; pos < n && !triggered; pos += params.batch_size) {
    const std::size_t end = std::min(n, pos + params.batch_size);
    auto start = Clock::now();
    std::vector<Descriptor> batch(end - pos);
    parallel_for(batch.size(), [&](std::size_t i) {
      batch[i] = describe_keypoint(scan, order[pos + i], DescriptorKind::Ishot, db.params.shot);
    });
    std::vector<std::vector<float>> queries;
    for (const auto& d : batch) {
      shots.put(d.keypoint_index, d);
      if (d.usable) queries.push_back(to_float_row(d.values, dims));
    }
    result.times.describe_ms += ms_since(start);

    start = Clock::now();
    if (!queries.empty()) update_posterior(posterior, match_nndr(queries, db.index), model, table);
    result.times.match_ms += ms_since(start);

    result.keypoints_consumed = end;
    ++result.batches;
    const auto probs = posterior.probabilities();
    const double top = *std::max_element(probs.begin(), probs.end());
    result.posterior_trace.push_back(top);
    triggered = !params.exhaustive && top >= params.xi;
  }
  result.posterior = posterior.probabilities();

  const auto ranking = posterior.ranking();
  const auto start = Clock::now();
  const std::size_t limit = std::min(params.k_candidates, ranking.size());
  for (std::size_t c = 0; c < limit; ++c) {
    const std::size_t place = ranking[c];
    VerifyResult v = verify_candidate(scan, shots, db, place, params.verify);
    ++result.verifications;
    if (c == 0 || v.accepted) {
      result.place = place;
      result.verification = v;
    }
    if (v.accepted) {
      result.accepted = true;
      break;
    }
  }
  result.times.verify_ms = ms_since(start);
  return result;
}

LocalizationResult localize_scan(const Scan& raw_scan, const PlaceDatabase& db, const ProbabilityTable& table,
                                 const PrecisionModel& model, const LocalizeParams& params) {
  const auto start = Clock::now();
  const FeatureCloud scan = prepare_scan(apply_calibration(raw_scan, db.calibration), db.params);
  const double pre = ms_since(start);
  LocalizationResult result = localize(scan, db, table, model, params);
  result.times.preprocess_ms = pre;
  return result;
}

}  // namespace lpr
