#include "lpr/eval/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "lpr/calib/calibration.hpp"
#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"
#include "lpr/core/scan_io.hpp"

namespace lpr {
namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

// NNDR matches for every usable keypoint of a raw scan.
std::vector<VoteMatch> match_scan(const PlaceDatabase& db, const Scan& raw, std::size_t dims) {
  const FeatureCloud f = prepare_scan(apply_calibration(raw, db.calibration), db.params);
  std::vector<Descriptor> described(f.keypoints.size());
  parallel_for(described.size(), [&](std::size_t k) {
    described[k] = describe_keypoint(f, k, DescriptorKind::Ishot, db.params.shot);
  });
  std::vector<std::vector<float>> queries;
  for (const auto& d : described)
    if (d.usable) queries.push_back(to_float_row(d.values, dims));
  if (queries.empty()) return {};
  return match_nndr(queries, db.index, dims);
}

std::size_t kind_dims(const PlaceDatabase& db, DescriptorKind kind) {
  return kind == DescriptorKind::Shot ? kShotVolumes * db.params.shot.shape_bins : db.index.dims();
}

}  // namespace

std::vector<double> default_tau_sweep() { return {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

PrCurve pr_curve(std::span<const ScoredMatch> matches, std::size_t total_queries, std::span<const double> thresholds) {
  PrCurve curve;
  curve.total_queries = total_queries;
  for (double t : thresholds) {
    PrPoint p;
    p.tau = t;
    for (const auto& m : matches) {
      if (!(m.tau <= t)) continue;
      if (m.correct) ++p.true_positives;
      else ++p.false_positives;
    }
    const std::size_t kept = p.true_positives + p.false_positives;
    if (kept == 0 || total_queries == 0) continue;
    p.precision = static_cast<double>(p.true_positives) / static_cast<double>(kept);
    p.recall = static_cast<double>(p.true_positives) / static_cast<double>(total_queries);
    curve.points.push_back(p);
  }
  curve.auc = pr_auc(curve.points);
  return curve;
}

double pr_auc(std::span<const PrPoint> points) {
  if (points.empty()) return 0.0;
  std::vector<PrPoint> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  double area = 0.0;
  double r = 0.0, p = sorted.front().precision;
  for (const auto& pt : sorted) {
    area += (pt.recall - r) * (pt.precision + p) / 2.0;
    r = pt.recall;
    p = pt.precision;
  }
  return area;
}

std::vector<ScoredMatch> score_descriptor_matches(const PlaceDatabase& db, std::span<const QueryScan> scans,
                                                  DescriptorKind kind, double tp_radius) {
  std::vector<ScoredMatch> out;
  const std::size_t dims = kind_dims(db, kind);
  for (const auto& q : scans) {
    for (const auto& m : match_scan(db, q.scan, dims)) {
      const double d = (db.places[m.place].center - q.ground_truth.translation).norm();
      out.push_back({m.tau, d <= tp_radius});
    }
  }
  return out;
}

PrCurve eval_descriptor_auc(const PlaceDatabase& db, std::span<const QueryScan> scans, DescriptorKind kind,
                            std::span<const double> thresholds, double tp_radius) {
  if (scans.empty()) throw Error(Errc::NoGroundTruth, "no scans with ground truth");
  const auto matches = score_descriptor_matches(db, scans, kind, tp_radius);
  return pr_curve(matches, matches.size(), thresholds);
}

std::vector<TrainingVote> collect_training_votes(const PlaceDatabase& db, std::span<const QueryScan> scans) {
  std::vector<TrainingVote> votes;
  for (const auto& q : scans)
    for (const auto& m : match_scan(db, q.scan, db.index.dims()))
      votes.push_back({m.tau, (db.places[m.place].center - q.ground_truth.translation).norm()});
  return votes;
}

std::vector<PipelineRecord> eval_pipeline(const PlaceDatabase& db, const ProbabilityTable& table,
                                          const PrecisionModel& model, std::span<const QueryScan> scans,
                                          const LocalizeParams& params, double success_radius) {
  std::vector<PipelineRecord> records;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const QueryScan& q = scans[i];
    PipelineRecord r;
    r.scan_id = q.scan.id;
    r.dataset = q.dataset;
    LocalizeParams p = params;
    p.seed = params.seed + i;
    try {
      const LocalizationResult result = localize_scan(q.scan, db, table, model, p);
      r.accepted = result.accepted;
      r.place = result.place;
      r.error_m = (result.verification.pose.translation - q.ground_truth.translation).norm();
      r.residual = result.verification.residual;
      r.overlap = result.verification.overlap;
      r.full_distance = result.verification.full_distance;
      r.rejection = std::string(to_string(result.verification.reason));
      r.keypoints_consumed = result.keypoints_consumed;
      r.keypoints_total = result.keypoints_total;
      r.batches = result.batches;
      r.verifications = result.verifications;
      r.times = result.times;
      r.success = r.accepted && r.error_m <= success_radius;
    } catch (const Error& e) {
      if (e.code() != Errc::NoKeypoints && e.code() != Errc::EmptyScan) throw;
      r.rejection = std::string(to_string(e.code()));
    }
    records.push_back(std::move(r));
  }
  return records;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<PipelineSummary> summarize(std::span<const PipelineRecord> records) {
  std::map<std::string, std::vector<const PipelineRecord*>> groups;
  for (const auto& r : records) groups[r.dataset].push_back(&r);
  std::vector<PipelineSummary> out;
  for (const auto& [name, rs] : groups) {
    PipelineSummary s;
    s.dataset = name;
    s.scans = rs.size();
    std::vector<double> times, consumed, fraction;
    std::size_t ok = 0;
    for (const auto* r : rs) {
      ok += r->success ? 1 : 0;
      times.push_back(r->times.total_ms());
      consumed.push_back(static_cast<double>(r->keypoints_consumed));
      if (r->keypoints_total > 0)
        fraction.push_back(static_cast<double>(r->keypoints_consumed) / static_cast<double>(r->keypoints_total));
      s.mean_ms += r->times.total_ms();
    }
    s.success_rate = static_cast<double>(ok) / static_cast<double>(rs.size());
    s.mean_ms /= static_cast<double>(rs.size());
    s.median_ms = median(times);
    s.keypoints_consumed_median = median(consumed);
    s.consumed_fraction_median = median(fraction);
    out.push_back(s);
  }
  return out;
}

void write_pr_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, PrCurve>> curves) {
  auto out = open_csv(path);
  out << "descriptor,tau,precision,recall\n";
  for (const auto& [name, curve] : curves)
    for (const auto& p : curve.points)
      out << name << ',' << format_double(p.tau) << ',' << format_double(p.precision) << ','
          << format_double(p.recall) << '\n';
}

void write_auc_csv(const std::filesystem::path& path, std::span<const std::pair<std::string, PrCurve>> curves,
                   const std::string& dataset) {
  auto out = open_csv(path);
  out << "descriptor,dataset,auc\n";
  for (const auto& [name, curve] : curves) out << name << ',' << dataset << ',' << format_double(curve.auc) << '\n';
}

void write_pipeline_csv(const std::filesystem::path& path, std::span<const PipelineSummary> summaries) {
  auto out = open_csv(path);
  out << "dataset,success_rate,mean_ms,median_ms,keypoints_consumed_median\n";
  for (const auto& s : summaries)
    out << s.dataset << ',' << format_double(s.success_rate) << ',' << format_double(s.mean_ms) << ','
        << format_double(s.median_ms) << ',' << format_double(s.keypoints_consumed_median) << '\n';
}

void write_timing_csv(const std::filesystem::path& path, std::span<const PipelineRecord> records) {
  auto out = open_csv(path);
  out << "scan_id,dataset,preprocess_ms,describe_ms,match_ms,verify_ms\n";
  for (const auto& r : records)
    out << r.scan_id << ',' << r.dataset << ',' << format_double(r.times.preprocess_ms) << ','
        << format_double(r.times.describe_ms) << ',' << format_double(r.times.match_ms) << ','
        << format_double(r.times.verify_ms) << '\n';
}

void write_results_csv(const std::filesystem::path& path, std::span<const PipelineRecord> records) {
  auto out = open_csv(path);
  out << "scan_id,dataset,accepted,success,place,error_m,residual,overlap,full_distance,rejection,keypoints_consumed,keypoints_total,"
         "batches,verifications\n";
  for (const auto& r : records)
    out << r.scan_id << ',' << r.dataset << ',' << r.accepted << ',' << r.success << ',' << r.place << ','
        << format_double(r.error_m) << ',' << format_double(r.residual) << ',' << format_double(r.overlap) << ','
        << format_double(r.full_distance) << ',' << r.rejection << ','
        << r.keypoints_consumed << ',' << r.keypoints_total << ',' << r.batches << ',' << r.verifications << '\n';
}

}  // namespace lpr
