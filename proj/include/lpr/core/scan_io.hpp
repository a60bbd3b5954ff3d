#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lpr/core/types.hpp"

namespace lpr {

enum class ScanFormat { Text };

/// Reads the whitespace text format:
///   [# origin x y z]
///   x y z intensity beam time
///   <six fields per record>
Scan load_scan(const std::filesystem::path& path, ScanFormat format = ScanFormat::Text,
               int num_beams = kDefaultNumBeams);

void save_scan(const Scan& scan, const std::filesystem::path& path);

/// Ground-truth sidecar, one line per scan: `scan_id qw qx qy qz tx ty tz`.
struct PoseRecord {
  std::string scan_id;
  RigidTransform pose;
};

std::vector<PoseRecord> load_pose_records(const std::filesystem::path& path);
void save_pose_records(const std::vector<PoseRecord>& records, const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace lpr
