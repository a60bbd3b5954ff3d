#include "lpr/core/scan_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include "lpr/core/error.hpp"

namespace lpr {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view tok, T& value) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  return ec == std::errc() && ptr == end;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Scan load_scan(const std::filesystem::path& path, ScanFormat format, int num_beams) {
  if (format != ScanFormat::Text) throw Error(Errc::InvalidArgument, "unsupported scan format");
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, path.string());

  Scan scan;
  scan.id = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0].starts_with('#')) {
      // "# origin x y z" or "#origin ..." before the header.
      std::vector<std::string_view> t = tokens;
      if (t[0] == "#") t.erase(t.begin());
      else t[0].remove_prefix(1);
      if (!t.empty() && t[0] == "origin") {
        if (header_seen || t.size() != 4) throw Error(Errc::ParseError, where(path, line_no) + " bad origin line");
        for (int k = 0; k < 3; ++k)
          if (!parse_number(t[k + 1], scan.sensor_origin[k]))
            throw Error(Errc::ParseError, where(path, line_no) + " bad origin value");
      }
      continue;
    }
    if (!header_seen && tokens[0] == "x") {
      header_seen = true;
      continue;
    }
    header_seen = true;
    if (tokens.size() != 6) throw Error(Errc::ParseError, where(path, line_no) + " expected 6 fields");
    Point p;
    for (int k = 0; k < 3; ++k)
      if (!parse_number(tokens[k], p.position[k])) throw Error(Errc::ParseError, where(path, line_no) + " bad coordinate");
    long intensity = 0;
    if (!parse_number(tokens[3], intensity) || intensity < 0 || intensity > 255)
      throw Error(Errc::ParseError, where(path, line_no) + " intensity out of 0-255: " + std::string(tokens[3]));
    p.raw_intensity = static_cast<std::uint8_t>(intensity);
    if (!parse_number(tokens[4], p.beam_id) || p.beam_id < 0 || p.beam_id >= num_beams)
      throw Error(Errc::ParseError, where(path, line_no) + " bad beam id: " + std::string(tokens[4]));
    if (!parse_number(tokens[5], p.timestamp)) throw Error(Errc::ParseError, where(path, line_no) + " bad time");
    scan.points.push_back(p);
  }
  if (scan.points.empty()) throw Error(Errc::EmptyScan, path.string());
  scan.recompute_ranges();
  return scan;
}

void save_scan(const Scan& scan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  const Vec3& o = scan.sensor_origin;
  if (!o.isZero(0.0))
    out << "# origin " << format_double(o.x()) << ' ' << format_double(o.y()) << ' ' << format_double(o.z()) << '\n';
  out << "x y z intensity beam time\n";
  for (const auto& p : scan.points) {
    out << format_double(p.position.x()) << ' ' << format_double(p.position.y()) << ' '
        << format_double(p.position.z()) << ' ' << static_cast<int>(p.raw_intensity) << ' ' << p.beam_id << ' '
        << format_double(p.timestamp) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed " + path.string());
}

std::vector<PoseRecord> load_pose_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, path.string());
  std::vector<PoseRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0].starts_with('#')) continue;
    if (tokens.size() != 8) throw Error(Errc::ParseError, where(path, line_no) + " expected 8 fields");
    double v[7];
    for (int k = 0; k < 7; ++k)
      if (!parse_number(tokens[k + 1], v[k])) throw Error(Errc::ParseError, where(path, line_no) + " bad number");
    out.push_back({std::string(tokens[0]),
                   RigidTransform::from_quaternion(Eigen::Quaterniond(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]))});
  }
  return out;
}

void save_pose_records(const std::vector<PoseRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  for (const auto& r : records) {
    const auto q = r.pose.quaternion();
    const auto& t = r.pose.translation;
    out << r.scan_id << ' ' << format_double(q.w()) << ' ' << format_double(q.x()) << ' ' << format_double(q.y())
        << ' ' << format_double(q.z()) << ' ' << format_double(t.x()) << ' ' << format_double(t.y()) << ' '
        << format_double(t.z()) << '\n';
  }
}

}  // namespace lpr
