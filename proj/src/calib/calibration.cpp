#include "lpr/calib/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "lpr/core/error.hpp"
#include "lpr/core/scan_io.hpp"
#include "lpr/core/voxel.hpp"

namespace lpr {
namespace {

constexpr std::size_t kLevels = 256;

// Flattened observations: one entry per participating point.
struct Observations {
  std::vector<std::uint32_t> voxel;  // voxel slot per point
  std::vector<std::uint32_t> node;   // beam * 256 + raw value per point
  std::size_t num_voxels = 0;
};

Observations gather_shared(std::span<const Scan> scans, double voxel_size, double max_range, int num_beams) {
  struct Member {
    std::uint32_t node;
    std::uint32_t slot;
  };
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> slots;
  std::vector<std::uint32_t> first_beam;
  std::vector<std::uint8_t> multi_beam;
  std::vector<Member> members;
  for (const auto& scan : scans) {
    for (const auto& p : scan.points) {
      if (p.range > max_range) continue;
      if (p.beam_id < 0 || p.beam_id >= num_beams)
        throw Error(Errc::BeamIdOutOfRange, "beam " + std::to_string(p.beam_id) + " in scan " + scan.id);
      auto [it, inserted] = slots.try_emplace(voxel_key(p.position, voxel_size), static_cast<std::uint32_t>(first_beam.size()));
      if (inserted) {
        first_beam.push_back(static_cast<std::uint32_t>(p.beam_id));
        multi_beam.push_back(0);
      } else if (first_beam[it->second] != static_cast<std::uint32_t>(p.beam_id)) {
        multi_beam[it->second] = 1;
      }
      members.push_back({static_cast<std::uint32_t>(p.beam_id * kLevels + p.raw_intensity), it->second});
    }
  }
  // Keep only voxels observed by at least two beams, renumbered densely.
  std::vector<std::uint32_t> remap(first_beam.size(), UINT32_MAX);
  Observations obs;
  for (const auto& m : members) {
    if (!multi_beam[m.slot]) continue;
    if (remap[m.slot] == UINT32_MAX) remap[m.slot] = static_cast<std::uint32_t>(obs.num_voxels++);
    obs.voxel.push_back(remap[m.slot]);
    obs.node.push_back(m.node);
  }
  return obs;
}

void fill_unobserved(std::array<double, 256>& table, const std::array<double, 256>& weight) {
  std::vector<int> seen;
  for (int a = 0; a < 256; ++a)
    if (weight[a] > 0.0) seen.push_back(a);
  if (seen.empty()) {
    for (int a = 0; a < 256; ++a) table[a] = a;
    return;
  }
  // Ends continue with unit slope from the outermost observed value.
  for (int a = 0; a < seen.front(); ++a) table[a] = std::max(0.0, table[seen.front()] - (seen.front() - a));
  for (int a = seen.back() + 1; a < 256; ++a) table[a] = std::min(255.0, table[seen.back()] + (a - seen.back()));
  for (std::size_t k = 0; k + 1 < seen.size(); ++k) {
    const int lo = seen[k];
    const int hi = seen[k + 1];
    for (int a = lo + 1; a < hi; ++a) {
      const double t = static_cast<double>(a - lo) / (hi - lo);
      table[a] = (1.0 - t) * table[lo] + t * table[hi];
    }
  }
}

}  // namespace

CalibrationTable CalibrationTable::identity(int num_beams, double max_calib_range) {
  CalibrationTable t;
  t.num_beams = num_beams;
  t.max_calib_range = max_calib_range;
  t.mapping.resize(static_cast<std::size_t>(num_beams));
  for (auto& row : t.mapping)
    for (std::size_t a = 0; a < kLevels; ++a) row[a] = static_cast<double>(a);
  return t;
}

std::vector<double> isotonic_regression(std::span<const double> values, std::span<const double> weights) {
  struct Block {
    double sum;
    double weight;
    std::size_t len;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i] * weights[i], weights[i], 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum * b.weight <= b.sum * a.weight) break;
      Block merged{a.sum + b.sum, a.weight + b.weight, a.len + b.len};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.len, b.sum / b.weight);
  return out;
}

CalibrationFit fit_calibration(std::span<const Scan> scans, const CalibrationFitParams& params) {
  if (!(params.voxel_size > 0.0)) throw Error(Errc::InvalidCellSize, "calibration voxel size must be > 0");
  const auto beams = static_cast<std::size_t>(params.num_beams);
  const Observations obs = gather_shared(scans, params.voxel_size, params.max_calib_range, params.num_beams);
  if (obs.num_voxels == 0) throw Error(Errc::NoCrossBeamOverlap, "no voxel is observed by two or more beams");

  const std::size_t num_nodes = beams * kLevels;
  std::vector<double> node_count(num_nodes, 0.0);
  std::vector<double> beam_count(beams, 0.0);
  for (auto n : obs.node) {
    node_count[n] += 1.0;
    beam_count[n / kLevels] += 1.0;
  }
  CalibrationFit fit;
  fit.reference_beam = static_cast<int>(std::max_element(beam_count.begin(), beam_count.end()) - beam_count.begin());
  fit.shared_voxels = obs.num_voxels;

  std::vector<double> g(num_nodes);
  for (std::size_t n = 0; n < num_nodes; ++n) g[n] = static_cast<double>(n % kLevels);
  std::vector<double> voxel_sum(obs.num_voxels), voxel_cnt(obs.num_voxels), voxel_mean(obs.num_voxels);
  std::vector<double> node_sum(num_nodes);
  const std::size_t ref_lo = static_cast<std::size_t>(fit.reference_beam) * kLevels;

  auto voxel_step = [&] {
    std::fill(voxel_sum.begin(), voxel_sum.end(), 0.0);
    std::fill(voxel_cnt.begin(), voxel_cnt.end(), 0.0);
    for (std::size_t i = 0; i < obs.node.size(); ++i) {
      voxel_sum[obs.voxel[i]] += g[obs.node[i]];
      voxel_cnt[obs.voxel[i]] += 1.0;
    }
    for (std::size_t v = 0; v < obs.num_voxels; ++v) voxel_mean[v] = voxel_sum[v] / voxel_cnt[v];
    double objective = 0.0;
    for (std::size_t i = 0; i < obs.node.size(); ++i) {
      const double d = g[obs.node[i]] - voxel_mean[obs.voxel[i]];
      objective += d * d;
    }
    fit.objective_trace.push_back(objective);
  };

  for (int iter = 0; iter < params.max_iter; ++iter) {
    voxel_step();
    std::fill(node_sum.begin(), node_sum.end(), 0.0);
    for (std::size_t i = 0; i < obs.node.size(); ++i) node_sum[obs.node[i]] += voxel_mean[obs.voxel[i]];
    double max_change = 0.0;
    for (std::size_t n = 0; n < num_nodes; ++n) {
      if (node_count[n] == 0.0 || (n >= ref_lo && n < ref_lo + kLevels)) continue;
      const double updated = node_sum[n] / node_count[n];
      max_change = std::max(max_change, std::abs(updated - g[n]));
      g[n] = updated;
    }
    fit.iterations = iter + 1;
    if (max_change < params.tol) {
      fit.converged = true;
      break;
    }
  }
  voxel_step();

  CalibrationTable& table = fit.table;
  table.num_beams = params.num_beams;
  table.max_calib_range = params.max_calib_range;
  table.mapping.resize(beams);
  for (std::size_t l = 0; l < beams; ++l) {
    std::vector<double> vals, weights;
    std::vector<int> levels;
    for (std::size_t a = 0; a < kLevels; ++a) {
      if (node_count[l * kLevels + a] == 0.0) continue;
      vals.push_back(g[l * kLevels + a]);
      weights.push_back(node_count[l * kLevels + a]);
      levels.push_back(static_cast<int>(a));
    }
    const auto mono = isotonic_regression(vals, weights);
    std::array<double, 256> row{};
    std::array<double, 256> seen{};
    for (std::size_t k = 0; k < levels.size(); ++k) {
      row[levels[k]] = std::clamp(mono[k], 0.0, 255.0);
      seen[levels[k]] = 1.0;
    }
    fill_unobserved(row, seen);
    table.mapping[l] = row;
  }
  return fit;
}

double calibrated_value(const Point& p, const CalibrationTable& table) {
  if (p.raw_intensity >= 100) return 1.0;
  if (p.range > table.max_calib_range) return static_cast<double>(p.raw_intensity) / 100.0;
  return std::clamp(std::min(table.lookup(p.beam_id, p.raw_intensity), 100.0) / 100.0, 0.0, 1.0);
}

Scan apply_calibration(const Scan& scan, const CalibrationTable& table) {
  Scan out = scan;
  for (auto& p : out.points) {
    if (p.beam_id < 0 || p.beam_id >= table.num_beams)
      throw Error(Errc::BeamIdOutOfRange, "beam " + std::to_string(p.beam_id) + " not covered by calibration table");
    p.calibrated_intensity = calibrated_value(p, table);
    p.uncalibrated = p.raw_intensity < 100 && p.range > table.max_calib_range;
  }
  return out;
}

void save_calibration(const CalibrationTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "# beams " << table.num_beams << " range_max " << format_double(table.max_calib_range) << '\n';
  for (int l = 0; l < table.num_beams; ++l)
    for (int a = 0; a < 256; ++a) out << l << ' ' << a << ' ' << format_double(table.mapping[l][a]) << '\n';
  if (!out) throw Error(Errc::IoError, "write failed " + path.string());
}

CalibrationTable load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, path.string() + ": empty calibration file");
  std::istringstream header(line);
  std::string hash, beams_kw, range_kw, range_str;
  int num_beams = 0;
  header >> hash >> beams_kw >> num_beams >> range_kw >> range_str;
  if (hash != "#" || beams_kw != "beams" || range_kw != "range_max" || num_beams <= 0)
    throw Error(Errc::ParseError, path.string() + ":1 expected '# beams N range_max R'");
  CalibrationTable table = CalibrationTable::identity(num_beams);
  auto parse_double = [&](const std::string& s, double& v, std::size_t line_no) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + " bad number '" + s + "'");
  };
  parse_double(range_str, table.max_calib_range, 1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int beam = -1, measured = -1;
    std::string expected;
    if (!(ls >> beam >> measured >> expected) || beam < 0 || beam >= num_beams || measured < 0 || measured > 255)
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + " expected 'beam measured expected'");
    parse_double(expected, table.mapping[beam][measured], line_no);
  }
  return table;
}

double cross_beam_variance(std::span<const Scan> scans, double voxel_size, double max_range,
                           const CalibrationTable* table) {
  struct BeamStats {
    double sum = 0.0;
    double count = 0.0;
  };
  std::unordered_map<VoxelKey, std::unordered_map<int, BeamStats>, VoxelKeyHash> voxels;
  for (const auto& scan : scans) {
    for (const auto& p : scan.points) {
      if (p.range > max_range) continue;
      const double value = table ? table->lookup(p.beam_id, p.raw_intensity) : static_cast<double>(p.raw_intensity);
      auto& s = voxels[voxel_key(p.position, voxel_size)][p.beam_id];
      s.sum += value;
      s.count += 1.0;
    }
  }
  double total = 0.0;
  std::size_t shared = 0;
  for (const auto& [key, beams] : voxels) {
    if (beams.size() < 2) continue;
    double mean = 0.0;
    for (const auto& [b, s] : beams) mean += s.sum / s.count;
    mean /= static_cast<double>(beams.size());
    double var = 0.0;
    for (const auto& [b, s] : beams) {
      const double d = s.sum / s.count - mean;
      var += d * d;
    }
    total += var / static_cast<double>(beams.size());
    ++shared;
  }
  return shared ? total / static_cast<double>(shared) : 0.0;
}

}  // namespace lpr
