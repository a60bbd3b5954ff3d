// lpr: command-line front end for the place recognition toolkit.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lpr/calib/calibration.hpp"
#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"
#include "lpr/core/scan_io.hpp"
#include "lpr/eval/eval.hpp"
#include "lpr/eval/experiment.hpp"
#include "lpr/mapdb/place_db.hpp"
#include "lpr/synth/scenario.hpp"
#include "lpr/voting/localize.hpp"

#ifndef LPR_VERSION
#define LPR_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotLocalized = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct Global {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool verbose = false;
  bool print_config = false;
  std::string out = "out";
};

struct SynthWorldOpts {
  lpr::ScenarioParams scenario;
  bool ideal_sensor = false;
};

struct SynthScanOpts {
  std::string world;
  std::string set = "benign";
  std::size_t count = 20;
  double occlude = -1.0;
  std::string name;
};

struct CalibrateOpts {
  std::string scans;
  lpr::CalibrationFitParams fit;
};

struct BuildMapOpts {
  std::string scans;
  std::string calibration;
  lpr::PipelineParams pipeline;
};

struct FitVotingOpts {
  std::string map;
  std::string scans;
  std::size_t min_samples = 30;
};

struct LocalizeOpts {
  std::string map;
  std::string scan;
  std::string model;
  lpr::LocalizeParams params;
};

struct EvalDescriptorsOpts {
  std::string map;
  std::string scans;
  std::vector<std::string> kinds;
  double tp_radius = 5.0;
};

struct EvalPipelineOpts {
  std::string map;
  std::string model;
  std::vector<std::string> scans;
  double success_radius = 3.0;
};

std::string crc_hex(const std::string& text) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, std::uint64_t seed, const std::string& config) {
  std::ofstream out(dir / "run.manifest");
  if (!out) throw lpr::Error(lpr::Errc::IoError, "cannot write " + (dir / "run.manifest").string());
  out << "version " << LPR_VERSION << "\n"
      << "command " << command << "\n"
      << "seed " << seed << "\n"
      << "config_hash " << crc_hex(config) << "\n";
}

// A scan directory holds ground_truth.txt plus one <scan_id>.txt per line.
std::vector<lpr::QueryScan> load_scan_dir(const fs::path& dir) {
  const auto records = lpr::load_pose_records(dir / "ground_truth.txt");
  std::vector<lpr::QueryScan> out(records.size());
  const std::string dataset = fs::path(dir).lexically_normal().filename().string().empty()
                                  ? fs::path(dir).lexically_normal().parent_path().filename().string()
                                  : fs::path(dir).lexically_normal().filename().string();
  lpr::parallel_for(records.size(), [&](std::size_t i) {
    out[i].scan = lpr::load_scan(dir / (records[i].scan_id + ".txt"));
    out[i].scan.id = records[i].scan_id;
    out[i].ground_truth = records[i].pose;
    out[i].dataset = dataset;
  });
  return out;
}

json scenario_json(const lpr::ScenarioParams& p) {
  return {{"seed", p.seed},
          {"extent", p.extent},
          {"num_landmarks", p.num_landmarks},
          {"min_separation", p.min_separation},
          {"loop_width", p.loop_width},
          {"loop_height", p.loop_height},
          {"map_scan_spacing", p.map_scan_spacing},
          {"clearance", p.clearance},
          {"sensor_height", p.sensor_height},
          {"distorted", p.distorted}};
}

lpr::Scenario load_scenario_dir(const fs::path& dir) {
  const fs::path path = dir / "scenario.json";
  std::ifstream in(path);
  if (!in) throw lpr::Error(lpr::Errc::FileNotFound, path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw lpr::Error(lpr::Errc::ParseError, path.string() + ": " + e.what());
  }
  lpr::Scenario s;
  auto& p = s.params;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.extent = j.at("extent").get<double>();
  p.num_landmarks = j.at("num_landmarks").get<std::size_t>();
  p.min_separation = j.at("min_separation").get<double>();
  p.loop_width = j.at("loop_width").get<double>();
  p.loop_height = j.at("loop_height").get<double>();
  p.map_scan_spacing = j.at("map_scan_spacing").get<double>();
  p.clearance = j.at("clearance").get<double>();
  p.sensor_height = j.at("sensor_height").get<double>();
  p.distorted = j.at("distorted").get<bool>();
  std::tie(s.world, s.sensor) = lpr::load_world(dir / "world.json");
  for (const auto& r : lpr::load_pose_records(dir / "trajectory.txt")) s.map_poses.push_back(r.pose);
  return s;
}

void write_scans(const fs::path& dir, std::span<const lpr::QueryScan> scans) {
  fs::create_directories(dir);
  std::vector<lpr::PoseRecord> records;
  for (const auto& q : scans) {
    lpr::save_scan(q.scan, dir / (q.scan.id + ".txt"));
    records.push_back({q.scan.id, q.ground_truth});
  }
  lpr::save_pose_records(records, dir / "ground_truth.txt");
}

int run_synth_world(const Global& g, SynthWorldOpts o) {
  o.scenario.seed = g.seed;
  const auto scenario = lpr::make_scenario(o.scenario);
  lpr::SensorModel sensor = o.ideal_sensor ? lpr::SensorModel::ideal() : scenario.sensor;
  lpr::save_world(scenario.world, sensor, fs::path(g.out) / "world.json");
  auto params = o.scenario;
  params.distorted = !o.ideal_sensor && params.distorted;
  std::ofstream(fs::path(g.out) / "scenario.json") << scenario_json(params).dump(2) << "\n";
  std::vector<lpr::PoseRecord> trajectory;
  for (std::size_t i = 0; i < scenario.map_poses.size(); ++i)
    trajectory.push_back({"map_" + std::to_string(i), scenario.map_poses[i]});
  lpr::save_pose_records(trajectory, fs::path(g.out) / "trajectory.txt");
  std::cout << "landmarks " << scenario.world.landmarks.size() << " map_poses " << trajectory.size() << "\n";
  return kExitOk;
}

int run_synth_scan(const Global& g, const SynthScanOpts& o) {
  const auto scenario = load_scenario_dir(o.world);
  const std::string name = o.name.empty() ? o.set : o.name;
  std::vector<lpr::QueryScan> scans;
  if (o.set == "map") {
    scans.resize(scenario.map_poses.size());
    lpr::parallel_for(scans.size(), [&](std::size_t i) {
      const auto& pose = scenario.map_poses[i];
      scans[i].scan = lpr::simulate_scan(scenario.world, scenario.sensor, pose, g.seed * 1000003ULL + i);
      scans[i].scan.id = name + "_" + std::to_string(i);
      scans[i].ground_truth = pose;
      scans[i].dataset = name;
    });
  } else {
    static const std::map<std::string, lpr::QuerySet> sets = {{"benign", lpr::QuerySet::Benign},
                                                              {"training", lpr::QuerySet::Training},
                                                              {"occluded", lpr::QuerySet::Occluded},
                                                              {"absent", lpr::QuerySet::Absent}};
    const auto set = sets.at(o.set);
    const double fraction = o.occlude >= 0.0 ? o.occlude : 0.5;
    if (o.occlude >= 0.0 && set != lpr::QuerySet::Occluded)
      spdlog::warn("--occlude only applies to the occluded set; ignored for '{}'", o.set);
    scans = lpr::simulate_queries(scenario, set, o.count, g.seed, name, fraction);
  }
  write_scans(g.out, scans);
  std::cout << "scans " << scans.size() << "\n";
  return kExitOk;
}

std::vector<lpr::Scan> global_frame_scans(std::span<const lpr::QueryScan> scans) {
  std::vector<lpr::Scan> out(scans.size());
  lpr::parallel_for(scans.size(), [&](std::size_t i) { out[i] = lpr::transform_scan(scans[i].scan, scans[i].ground_truth); });
  return out;
}

int run_calibrate(const Global& g, const CalibrateOpts& o) {
  const auto scans = load_scan_dir(o.scans);
  const auto global = global_frame_scans(scans);
  const auto fit = lpr::fit_calibration(global, o.fit);
  if (!fit.converged) spdlog::warn("calibration stopped at max_iter={} without converging", fit.iterations);
  lpr::save_calibration(fit.table, fs::path(g.out) / "calibration.txt");
  const double raw = lpr::cross_beam_variance(global, o.fit.voxel_size, o.fit.max_calib_range);
  const double cal = lpr::cross_beam_variance(global, o.fit.voxel_size, o.fit.max_calib_range, &fit.table);
  std::cout << "iterations " << fit.iterations << " converged " << fit.converged << " reference_beam "
            << fit.reference_beam << " variance_raw " << lpr::format_double(raw) << " variance_calibrated "
            << lpr::format_double(cal) << "\n";
  return kExitOk;
}

int run_build_map(const Global& g, const BuildMapOpts& o) {
  const auto scans = load_scan_dir(o.scans);
  if (scans.empty()) throw lpr::Error(lpr::Errc::EmptyTrajectory, "no map scans in " + o.scans);
  const auto table = lpr::load_calibration(o.calibration);
  const auto global = global_frame_scans(scans);
  std::vector<lpr::RigidTransform> poses;
  std::vector<lpr::Vec3> trajectory;
  for (const auto& q : scans) {
    poses.push_back(q.ground_truth);
    trajectory.push_back(q.ground_truth.translation);
  }
  auto [points, arc] = lpr::assemble_map(global, poses, table);
  auto members = lpr::partition_places(points, trajectory, o.pipeline, arc);
  const auto db = lpr::build_database(std::move(members), table, o.pipeline);
  lpr::save_database(db, fs::path(g.out) / "map.lprdb");
  std::cout << "places " << db.places.size() << " descriptors " << db.index.size() << "\n";
  return kExitOk;
}

int run_fit_voting(const Global& g, const FitVotingOpts& o) {
  const auto db = lpr::load_database(o.map);
  const auto scans = load_scan_dir(o.scans);
  const auto votes = lpr::collect_training_votes(db, scans);
  lpr::FitOptions options;
  options.min_samples = o.min_samples;
  const auto edges = lpr::default_tau_edges();
  const auto model = lpr::fit_precision_model(votes, edges, db.max_center_distance(), options);
  lpr::save_precision_model(model, fs::path(g.out) / "precision_model.txt");
  std::cout << "votes " << votes.size() << " bins " << model.bins.size() << "\n";
  return kExitOk;
}

int run_localize(const Global& g, LocalizeOpts o) {
  const auto db = lpr::load_database(o.map);
  const auto model = lpr::load_precision_model(o.model);
  const auto table = lpr::build_probability_table(model, db);
  const auto scan = lpr::load_scan(o.scan);
  o.params.seed = g.seed;
  const auto result = lpr::localize_scan(scan, db, table, model, o.params);
  const std::string line = lpr::format_pose_line(scan.id, result.place, result.verification);
  std::cout << line << "\n";
  std::ofstream(fs::path(g.out) / "pose.txt") << line << "\n";
  if (!result.accepted)
    spdlog::info("not localized: {}", lpr::to_string(result.verification.reason));
  return result.accepted ? kExitOk : kExitNotLocalized;
}

int run_eval_descriptors(const Global& g, const EvalDescriptorsOpts& o) {
  const auto db = lpr::load_database(o.map);
  const auto scans = load_scan_dir(o.scans);
  const std::string dataset = scans.empty() ? fs::path(o.scans).filename().string() : scans.front().dataset;
  const auto sweep = lpr::default_tau_sweep();
  std::vector<std::pair<std::string, lpr::PrCurve>> curves;
  std::vector<std::string> kinds = o.kinds.empty() ? std::vector<std::string>{"shot", "ishot"} : o.kinds;
  for (const auto& k : kinds) {
    const auto kind = k == "shot" ? lpr::DescriptorKind::Shot : lpr::DescriptorKind::Ishot;
    curves.emplace_back(k, lpr::eval_descriptor_auc(db, scans, kind, sweep, o.tp_radius));
  }
  lpr::write_pr_csv(fs::path(g.out) / "pr_curve.csv", curves);
  lpr::write_auc_csv(fs::path(g.out) / "auc.csv", curves, dataset);
  for (const auto& [name, curve] : curves) std::cout << name << " auc " << lpr::format_double(curve.auc) << "\n";
  return kExitOk;
}

int run_eval_pipeline(const Global& g, const EvalPipelineOpts& o, lpr::LocalizeParams params) {
  const auto db = lpr::load_database(o.map);
  const auto model = lpr::load_precision_model(o.model);
  const auto table = lpr::build_probability_table(model, db);
  params.seed = g.seed;
  std::vector<lpr::PipelineRecord> records;
  for (const auto& dir : o.scans) {
    const auto scans = load_scan_dir(dir);
    auto part = lpr::eval_pipeline(db, table, model, scans, params, o.success_radius);
    records.insert(records.end(), part.begin(), part.end());
  }
  const auto summaries = lpr::summarize(records);
  lpr::write_pipeline_csv(fs::path(g.out) / "pipeline.csv", summaries);
  lpr::write_timing_csv(fs::path(g.out) / "timing.csv", records);
  lpr::write_results_csv(fs::path(g.out) / "results.csv", records);
  for (const auto& s : summaries)
    std::cout << s.dataset << " success " << lpr::format_double(s.success_rate) << " scans " << s.scans << "\n";
  return kExitOk;
}

void add_localize_options(CLI::App* cmd, lpr::LocalizeParams& p) {
  cmd->add_option("--xi", p.xi, "posterior threshold that ends voting")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--batch", p.batch_size, "keypoints per voting batch")->check(CLI::PositiveNumber);
  cmd->add_option("--candidates", p.k_candidates, "places verified at most")->check(CLI::PositiveNumber);
  cmd->add_flag("--exhaustive", p.exhaustive, "match every keypoint before verifying");
  cmd->add_option("--epsilon-icp", p.verify.epsilon_icp, "ICP residual threshold (m^2)");
  cmd->add_option("--max-cloud-distance", p.verify.max_cloud_distance, "post-ICP mean squared NN distance ceiling (m^2)");
  cmd->add_option("--min-cluster", p.verify.min_cluster, "geometric consistency minimum cluster");
  cmd->add_option("--resolution", p.verify.resolution, "geometric consistency resolution (m)");
  cmd->add_option("--k-nearest", p.verify.k_nearest, "SHOT neighbours per scan keypoint");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR place recognition with intensity-augmented descriptors", "lpr"};
  app.set_version_flag("--version", std::string(LPR_VERSION));
  app.set_config("--config", "", "key = value file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Global g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_flag("--verbose", g.verbose, "debug logging");
  app.add_flag("--print-config", g.print_config, "print every parameter and exit");
  app.add_option("--out", g.out, "output directory")->capture_default_str();

  SynthWorldOpts world_opts;
  auto* synth_world = app.add_subcommand("synth-world", "generate a world, its sensor and the map trajectory");
  synth_world->add_option("--extent", world_opts.scenario.extent, "world side (m)")->check(CLI::PositiveNumber);
  synth_world->add_option("--landmarks", world_opts.scenario.num_landmarks, "landmark count");
  synth_world->add_option("--min-separation", world_opts.scenario.min_separation, "landmark spacing (m)");
  synth_world->add_option("--loop-width", world_opts.scenario.loop_width, "trajectory loop width (m)");
  synth_world->add_option("--loop-height", world_opts.scenario.loop_height, "trajectory loop height (m)");
  synth_world->add_option("--spacing", world_opts.scenario.map_scan_spacing, "map scan spacing (m)")
      ->check(CLI::PositiveNumber);
  synth_world->add_option("--sensor-height", world_opts.scenario.sensor_height, "sensor height (m)");
  synth_world->add_flag("--ideal-sensor", world_opts.ideal_sensor, "identity beam responses");

  SynthScanOpts scan_opts;
  auto* synth_scan = app.add_subcommand("synth-scan", "simulate scans with a ground_truth.txt sidecar");
  synth_scan->add_option("--world", scan_opts.world, "synth-world output directory")->required()->check(CLI::ExistingDirectory);
  synth_scan->add_option("--set", scan_opts.set, "map|benign|training|occluded|absent")
      ->check(CLI::IsMember({"map", "benign", "training", "occluded", "absent"}));
  synth_scan->add_option("--count", scan_opts.count, "number of query scans");
  synth_scan->add_option("--occlude", scan_opts.occlude, "blanked fraction of the field of view (occluded set)")
      ->check(CLI::Range(0.0, 1.0));
  synth_scan->add_option("--name", scan_opts.name, "scan id prefix (defaults to the set)");

  CalibrateOpts calib_opts;
  auto* calibrate = app.add_subcommand("calibrate", "fit per-beam intensity tables");
  calibrate->add_option("--scans", calib_opts.scans, "scan directory")->required()->check(CLI::ExistingDirectory);
  calibrate->add_option("--voxel", calib_opts.fit.voxel_size, "voxel size (m)")->check(CLI::PositiveNumber);
  calibrate->add_option("--max-iter", calib_opts.fit.max_iter, "iterations");
  calibrate->add_option("--tol", calib_opts.fit.tol, "convergence tolerance");
  calibrate->add_option("--range", calib_opts.fit.max_calib_range, "calibration range cutoff (m)");

  BuildMapOpts map_opts;
  map_opts.pipeline = lpr::ExperimentParams::defaults(g.seed).pipeline;
  auto& pp = map_opts.pipeline;
  auto* build_map = app.add_subcommand("build-map", "partition the map into places and build the database");
  build_map->add_option("--scans", map_opts.scans, "map scan directory")->required()->check(CLI::ExistingDirectory);
  build_map->add_option("--calibration", map_opts.calibration, "calibration table")->required()->check(CLI::ExistingFile);
  build_map->add_option("--voxel", pp.voxel_size, "voxel size (m)")->check(CLI::PositiveNumber);
  build_map->add_option("--max-range", pp.max_range, "range cutoff (m)");
  build_map->add_option("--normal-radius", pp.normals.radius, "normal estimation radius (m)");
  build_map->add_option("--salient-radius", pp.iss.salient_radius, "ISS salient radius (m)");
  build_map->add_option("--nonmax-radius", pp.iss.nonmax_radius, "ISS non-max radius (m)");
  build_map->add_option("--gamma21", pp.iss.gamma21, "ISS eigenvalue ratio 2/1");
  build_map->add_option("--gamma32", pp.iss.gamma32, "ISS eigenvalue ratio 3/2");
  build_map->add_option("--boundary-radius", pp.iss.boundary_radius, "boundary test radius (m)");
  build_map->add_option("--gap-threshold", pp.iss.gap_threshold, "boundary angular gap (rad)");
  build_map->add_option("--shot-radius", pp.shot.radius, "descriptor support radius (m)");
  build_map->add_option("--lrf-radius", pp.shot.lrf_radius, "reference frame radius (m)");
  build_map->add_option("--min-place-distance", pp.min_place_distance, "place spacing (m)");
  build_map->add_option("--place-radius", pp.place_radius, "place extraction radius (m)");
  build_map->add_option("--place-window", pp.place_window, "trajectory window per place (m, 0 = radius only)");

  FitVotingOpts fit_opts;
  auto* fit_voting = app.add_subcommand("fit-voting", "fit the voting precision model from training scans");
  fit_voting->add_option("--map", fit_opts.map, "database file")->required()->check(CLI::ExistingFile);
  fit_voting->add_option("--scans", fit_opts.scans, "training scan directory")->required()->check(CLI::ExistingDirectory);
  fit_voting->add_option("--min-samples", fit_opts.min_samples, "samples required per tau bin");

  LocalizeOpts loc_opts;
  auto* localize = app.add_subcommand("localize", "localize one scan; prints the pose line");
  localize->add_option("--map", loc_opts.map, "database file")->required()->check(CLI::ExistingFile);
  localize->add_option("--scan", loc_opts.scan, "scan file")->required()->check(CLI::ExistingFile);
  localize->add_option("--model", loc_opts.model, "precision model file")->required()->check(CLI::ExistingFile);
  add_localize_options(localize, loc_opts.params);

  EvalDescriptorsOpts desc_opts;
  auto* eval_desc = app.add_subcommand("eval-descriptors", "precision/recall and AUC per descriptor kind");
  eval_desc->add_option("--map", desc_opts.map, "database file")->required()->check(CLI::ExistingFile);
  eval_desc->add_option("--scans", desc_opts.scans, "query scan directory")->required()->check(CLI::ExistingDirectory);
  eval_desc->add_option("--kind", desc_opts.kinds, "shot|ishot, repeatable")->check(CLI::IsMember({"shot", "ishot"}));
  eval_desc->add_option("--tp-radius", desc_opts.tp_radius, "true positive radius (m)");

  EvalPipelineOpts pipe_opts;
  lpr::LocalizeParams pipe_params;
  auto* eval_pipe = app.add_subcommand("eval-pipeline", "success rate and timing over scan sets");
  eval_pipe->add_option("--map", pipe_opts.map, "database file")->required()->check(CLI::ExistingFile);
  eval_pipe->add_option("--model", pipe_opts.model, "precision model file")->required()->check(CLI::ExistingFile);
  eval_pipe->add_option("--scans", pipe_opts.scans, "scan directory, repeatable; dataset = directory name")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_pipe->add_option("--success-radius", pipe_opts.success_radius, "success radius (m)");
  add_localize_options(eval_pipe, pipe_params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitUsage;
  }

  const std::string config = app.config_to_str(true, false);
  if (g.print_config) {
    std::cout << config;
    return kExitOk;
  }
  // Output location and echo flags do not change results.
  std::string hashed;
  std::istringstream lines(config);
  for (std::string line; std::getline(lines, line);)
    if (!line.starts_with("out=") && !line.starts_with("print-config=")) hashed += line + "\n";
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  lpr::set_num_threads(g.threads);

  CLI::App* cmd = app.get_subcommands().front();
  try {
    fs::create_directories(g.out);
    write_manifest(g.out, cmd->get_name(), g.seed, hashed);
    if (cmd == synth_world) return run_synth_world(g, world_opts);
    if (cmd == synth_scan) return run_synth_scan(g, scan_opts);
    if (cmd == calibrate) return run_calibrate(g, calib_opts);
    if (cmd == build_map) return run_build_map(g, map_opts);
    if (cmd == fit_voting) return run_fit_voting(g, fit_opts);
    if (cmd == localize) return run_localize(g, loc_opts);
    if (cmd == eval_desc) return run_eval_descriptors(g, desc_opts);
    if (cmd == eval_pipe) return run_eval_pipeline(g, pipe_opts, pipe_params);
  } catch (const lpr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
