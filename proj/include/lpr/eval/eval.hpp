#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lpr/mapdb/place_db.hpp"
#include "lpr/voting/localize.hpp"
#include "lpr/voting/precision_model.hpp"

namespace lpr {

struct QueryScan {
  Scan scan;  // raw, sensor frame
  RigidTransform ground_truth;
  std::string dataset;
};

struct PrPoint {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t total_queries = 0;
  double auc = 0.0;
};

struct ScoredMatch {
  double tau = 1.0;
  bool correct = false;
};

std::vector<double> default_tau_sweep();

/// Precision and recall at each threshold (match kept iff tau <= threshold).
/// Thresholds with no kept match get no point.
PrCurve pr_curve(std::span<const ScoredMatch> matches, std::size_t total_queries, std::span<const double> thresholds);

/// Trapezoids over the points sorted by recall, from (0, first precision)
/// and dropping to 0 at the largest recall.
double pr_auc(std::span<const PrPoint> points);

/// Descriptor matches of every keypoint of every scan against the whole
/// database. SHOT compares the geometric prefix of the stored rows.
std::vector<ScoredMatch> score_descriptor_matches(const PlaceDatabase& db, std::span<const QueryScan> scans,
                                                  DescriptorKind kind, double tp_radius = 5.0);

PrCurve eval_descriptor_auc(const PlaceDatabase& db, std::span<const QueryScan> scans, DescriptorKind kind,
                            std::span<const double> thresholds, double tp_radius = 5.0);

/// (tau, distance from voted place center to ground truth) for every
/// keypoint of every scan.
std::vector<TrainingVote> collect_training_votes(const PlaceDatabase& db, std::span<const QueryScan> scans);

struct PipelineRecord {
  std::string scan_id;
  std::string dataset;
  bool accepted = false;
  bool success = false;
  std::size_t place = 0;
  double error_m = 0.0;
  double residual = 0.0;
  double overlap = 0.0;
  double full_distance = 0.0;
  std::string rejection;
  std::size_t keypoints_consumed = 0;
  std::size_t keypoints_total = 0;
  std::size_t batches = 0;
  std::size_t verifications = 0;
  StageTimes times;
};

/// Localizes every scan; scan i uses seed params.seed + i.
std::vector<PipelineRecord> eval_pipeline(const PlaceDatabase& db, const ProbabilityTable& table,
                                          const PrecisionModel& model, std::span<const QueryScan> scans,
                                          const LocalizeParams& params, double success_radius = 3.0);

struct PipelineSummary {
  std::string dataset;
  std::size_t scans = 0;
  double success_rate = 0.0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double keypoints_consumed_median = 0.0;
  double consumed_fraction_median = 0.0;
};

std::vector<PipelineSummary> summarize(std::span<const PipelineRecord> records);

double median(std::vector<double> values);

void write_pr_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, PrCurve>> curves);
void write_auc_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, PrCurve>> curves,
                   const std::string& dataset);
void write_pipeline_csv(const std::filesystem::path& path, std::span<const PipelineSummary> summaries);
void write_timing_csv(const std::filesystem::path& path, std::span<const PipelineRecord> records);
void write_results_csv(const std::filesystem::path& path, std::span<const PipelineRecord> records);

}  // namespace lpr
