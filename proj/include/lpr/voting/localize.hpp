#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "lpr/mapdb/place_db.hpp"
#include "lpr/registration/registration.hpp"
#include "lpr/voting/precision_model.hpp"

namespace lpr {

struct LocalizeParams {
  std::size_t batch_size = 16;
  double xi = 0.15;
  std::size_t k_candidates = 5;
  std::uint64_t seed = 0;
  // Match every keypoint before verifying (control run).
  bool exhaustive = false;
  VerifyParams verify;
};

struct StageTimes {
  double preprocess_ms = 0.0;
  double describe_ms = 0.0;
  double match_ms = 0.0;
  double verify_ms = 0.0;

  double total_ms() const { return preprocess_ms + describe_ms + match_ms + verify_ms; }
};

struct LocalizationResult {
  bool accepted = false;
  std::size_t place = 0;
  VerifyResult verification;
  std::vector<double> posterior_trace;  // max probability after each batch
  std::vector<double> posterior;        // final normalized posterior
  std::size_t keypoints_consumed = 0;
  std::size_t keypoints_total = 0;
  std::size_t batches = 0;
  std::size_t verifications = 0;
  StageTimes times;
};

/// Scan SHOT rows computed on demand, shared across candidate checks.
class ScanShotCache {
 public:
  ScanShotCache(const FeatureCloud& scan, const ShotParams& params);
  /// Stores the geometric prefix of an already computed ISHOT.
  void put(std::size_t keypoint, const Descriptor& ishot);
  /// Empty when the keypoint has no usable descriptor.
  const std::vector<float>& get(std::size_t keypoint);

 private:
  const FeatureCloud& scan_;
  ShotParams params_;
  std::vector<std::vector<float>> rows_;
  std::vector<std::uint8_t> state_;  // 0 pending, 1 ready
};

/// SHOT matching against one place (k nearest per scan keypoint), then
/// clustering, closed-form seed and ICP.
VerifyResult verify_candidate(const FeatureCloud& scan, ScanShotCache& shots, const PlaceDatabase& db,
                              std::size_t place, const VerifyParams& params = {});

/// Batched voting over a prepared scan, then verification of candidates.
/// Throws NoKeypoints when the scan has none.
LocalizationResult localize(const FeatureCloud& scan, const PlaceDatabase& db, const ProbabilityTable& table,
                            const PrecisionModel& model, const LocalizeParams& params = {});

/// Applies the database calibration and front end before localizing.
LocalizationResult localize_scan(const Scan& raw_scan, const PlaceDatabase& db, const ProbabilityTable& table,
                                 const PrecisionModel& model, const LocalizeParams& params = {});

}  // namespace lpr
