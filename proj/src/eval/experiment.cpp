#include "lpr/eval/experiment.hpp"

#include <numbers>
#include <random>

#include "lpr/core/parallel.hpp"

namespace lpr {

ExperimentParams ExperimentParams::defaults(std::uint64_t seed) {
  ExperimentParams p;
  p.scenario.seed = seed;
  // One map scan per place keeps place clouds comparable to a single query scan.
  p.pipeline.place_window = p.scenario.map_scan_spacing;
  p.pipeline.iss.nonmax_radius = 0.8;
  p.localize.seed = seed;
  return p;
}

std::pair<std::vector<Point>, std::vector<double>> assemble_map(std::span<const Scan> global_scans,
                                                                std::span<const RigidTransform> poses,
                                                                const CalibrationTable& table) {
  std::vector<Vec3> positions;
  for (const auto& p : poses) positions.push_back(p.translation);
  const auto arc = trajectory_arc(positions);
  std::pair<std::vector<Point>, std::vector<double>> out;
  for (std::size_t s = 0; s < global_scans.size(); ++s) {
    const Scan calibrated = apply_calibration(global_scans[s], table);
    for (const auto& p : calibrated.points) {
      out.first.push_back(p);
      out.second.push_back(arc[s]);
    }
  }
  return out;
}

MapBundle build_map_bundle(const ExperimentParams& params) {
  MapBundle b;
  b.scenario = make_scenario(params.scenario);
  const auto& poses = b.scenario.map_poses;
  b.map_scans.resize(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) {
    Scan s = simulate_scan(b.scenario.world, b.scenario.sensor, poses[i], params.scenario.seed * 1000003ULL + i);
    s.id = "map_" + std::to_string(i);
    b.map_scans[i] = transform_scan(s, poses[i]);
  });
  CalibrationFitParams cp;
  cp.voxel_size = params.pipeline.voxel_size;
  b.calibration = fit_calibration(b.map_scans, cp);

  std::vector<Vec3> trajectory;
  for (const auto& p : poses) trajectory.push_back(p.translation);
  auto [points, arc] = assemble_map(b.map_scans, poses, b.calibration.table);
  auto members = partition_places(points, trajectory, params.pipeline, arc);
  points.clear();
  points.shrink_to_fit();
  b.db = build_database(std::move(members), b.calibration.table, params.pipeline);
  return b;
}

std::vector<QueryScan> simulate_queries(const Scenario& scenario, QuerySet set, std::size_t count, std::uint64_t seed,
                                        const std::string& name, double occlusion_fraction) {
  const auto poses = query_poses(scenario, set, count, seed);
  std::vector<QueryScan> out(poses.size());
  parallel_for(poses.size(), [&](std::size_t i) {
    std::optional<Occlusion> occlusion;
    if (set == QuerySet::Occluded) {
      std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
      occlusion = Occlusion{std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng),
                            occlusion_fraction * 2.0 * std::numbers::pi};
    }
    QueryScan& q = out[i];
    q.scan = simulate_scan(scenario.world, scenario.sensor, poses[i], seed * 7919ULL + i, occlusion);
    q.scan.id = name + "_" + std::to_string(i);
    q.ground_truth = poses[i];
    q.dataset = name;
  });
  return out;
}

PrecisionModel train_precision_model(const MapBundle& bundle, std::size_t queries, std::uint64_t seed) {
  const auto training = simulate_queries(bundle.scenario, QuerySet::Training, queries, seed, "training");
  const auto votes = collect_training_votes(bundle.db, training);
  const auto edges = default_tau_edges();
  return fit_precision_model(votes, edges, bundle.db.max_center_distance());
}

}  // namespace lpr
