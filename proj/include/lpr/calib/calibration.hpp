#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "lpr/core/types.hpp"

namespace lpr {

/// Per-beam lookup g_l: measured value (0-255) -> expected true intensity on
/// the same 0-255 scale.
struct CalibrationTable {
  int num_beams = kDefaultNumBeams;
  double max_calib_range = 30.0;
  std::vector<std::array<double, 256>> mapping;

  static CalibrationTable identity(int num_beams = kDefaultNumBeams, double max_calib_range = 30.0);

  double lookup(int beam, std::uint8_t measured) const { return mapping[static_cast<std::size_t>(beam)][measured]; }
  bool operator==(const CalibrationTable&) const = default;
};

struct CalibrationFitParams {
  double voxel_size = 0.4;
  int max_iter = 200;
  double tol = 1e-6;
  double max_calib_range = 30.0;
  int num_beams = kDefaultNumBeams;
};

struct CalibrationFit {
  CalibrationTable table;
  bool converged = false;  // false: max_iter hit, table is the last iterate
  int iterations = 0;
  int reference_beam = 0;
  std::size_t shared_voxels = 0;
  // Sum of within-voxel squared deviations after each voxel-mean step.
  std::vector<double> objective_trace;
};

/// Unsupervised fit over registered scans (all in one frame). Alternates
/// voxel means and per-(beam, value) means, with the best-observed beam held
/// at identity to fix the common gauge, then makes each table monotone.
CalibrationFit fit_calibration(std::span<const Scan> scans, const CalibrationFitParams& params = {});

/// Sets calibrated_intensity in [0,1]. Raw values >= 100 pass through as 1.0;
/// returns beyond max_calib_range are rescaled only and flagged uncalibrated.
Scan apply_calibration(const Scan& scan, const CalibrationTable& table);
double calibrated_value(const Point& p, const CalibrationTable& table);

void save_calibration(const CalibrationTable& table, const std::filesystem::path& path);
CalibrationTable load_calibration(const std::filesystem::path& path);

/// Mean over voxels seen by >= 2 beams of the variance between per-beam mean
/// intensities. Values are mapped through `table` when given, raw otherwise.
double cross_beam_variance(std::span<const Scan> scans, double voxel_size, double max_range,
                           const CalibrationTable* table = nullptr);

/// Pool-adjacent-violators fit, non-decreasing, weighted.
std::vector<double> isotonic_regression(std::span<const double> values, std::span<const double> weights);

}  // namespace lpr
