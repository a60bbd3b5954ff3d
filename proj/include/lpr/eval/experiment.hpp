#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lpr/calib/calibration.hpp"
#include "lpr/eval/eval.hpp"
#include "lpr/synth/scenario.hpp"

namespace lpr {

/// Everything needed to run the synthetic experiments in memory.
struct ExperimentParams {
  ScenarioParams scenario;
  PipelineParams pipeline;
  LocalizeParams localize;
  std::size_t training_queries = 40;
  double occlusion_fraction = 0.5;

  /// Place membership by a trajectory window one map-scan spacing long.
  static ExperimentParams defaults(std::uint64_t seed);
};

struct MapBundle {
  Scenario scenario;
  std::vector<Scan> map_scans;  // global frame, raw intensities
  CalibrationFit calibration;
  PlaceDatabase db;
};

/// Simulates the map scans, fits calibration, partitions and builds the
/// database.
MapBundle build_map_bundle(const ExperimentParams& params);

/// Map scans merged into one calibrated cloud, with each point's arc position.
std::pair<std::vector<Point>, std::vector<double>> assemble_map(std::span<const Scan> global_scans,
                                                                std::span<const RigidTransform> poses,
                                                                const CalibrationTable& table);

/// Simulated queries; `name` prefixes scan ids and tags the dataset.
std::vector<QueryScan> simulate_queries(const Scenario& scenario, QuerySet set, std::size_t count, std::uint64_t seed,
                                        const std::string& name, double occlusion_fraction = 0.5);

/// Training votes from off-center scans, fitted with the default tau bins.
PrecisionModel train_precision_model(const MapBundle& bundle, std::size_t queries, std::uint64_t seed);

}  // namespace lpr
