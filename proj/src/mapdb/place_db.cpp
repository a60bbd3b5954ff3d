#include "lpr/mapdb/place_db.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <spdlog/spdlog.h>
#include <zlib.h>

#include "lpr/core/error.hpp"
#include "lpr/core/parallel.hpp"
#include "lpr/core/voxel.hpp"

namespace lpr {

static_assert(std::endian::native == std::endian::little, "database I/O assumes a little-endian host");

namespace {

constexpr char kMagic[6] = {'L', 'P', 'R', 'D', 'B', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint32_t kManifestTag = 0x4e414d31;  // "1MAN"
constexpr std::uint32_t kPlaceTag = 0x434c5031;     // "1PLC"
constexpr double kArcEps = 1e-9;

class Writer {
 public:
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_vec(const Vec3& v) {
    put(v.x());
    put(v.y());
    put(v.z());
  }
  template <class T>
  void put_array(const T* data, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(data), n * sizeof(T));
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}
  template <class T>
  T get() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  Vec3 get_vec() {
    const double x = get<double>(), y = get<double>(), z = get<double>();
    return {x, y, z};
  }
  template <class T>
  void get_array(T* data, std::size_t n) {
    if (n > (size_ - pos_) / sizeof(T)) fail();
    take(data, n * sizeof(T));
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  [[noreturn]] static void fail() { throw Error(Errc::ChecksumMismatch, "database section truncated"); }
  void take(void* out, std::size_t n) {
    if (n > size_ - pos_) fail();
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

template <class P, class F>
void visit_params(P& p, F&& f) {
  f(p.voxel_size);
  f(p.max_range);
  f(p.normals.radius);
  f(p.normals.min_neighbors);
  f(p.normals.collinear_ratio);
  f(p.iss.salient_radius);
  f(p.iss.nonmax_radius);
  f(p.iss.gamma21);
  f(p.iss.gamma32);
  f(p.iss.min_neighbors);
  f(p.iss.min_saliency);
  f(p.iss.boundary_radius);
  f(p.iss.gap_threshold);
  f(p.shot.radius);
  f(p.shot.lrf_radius);
  f(p.shot.shape_bins);
  f(p.shot.intensity_bins);
  f(p.shot.min_lrf_neighbors);
  f(p.min_place_distance);
  f(p.place_radius);
  f(p.place_window);
}

std::uint32_t crc_of(const std::string& payload) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

void write_section(std::ofstream& out, std::uint32_t tag, const std::string& payload) {
  Writer head;
  head.put(tag);
  head.put(static_cast<std::uint64_t>(payload.size()));
  out.write(head.bytes().data(), static_cast<std::streamsize>(head.bytes().size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint32_t crc = crc_of(payload);
  out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
}

std::string read_section(Reader& file, std::uint32_t expected_tag) {
  const auto tag = file.get<std::uint32_t>();
  if (tag != expected_tag) throw Error(Errc::ChecksumMismatch, "unexpected database section");
  const auto size = file.get<std::uint64_t>();
  if (size > file.remaining()) throw Error(Errc::ChecksumMismatch, "database section truncated");
  std::string payload(size, '\0');
  file.get_array(payload.data(), size);
  const auto crc = file.get<std::uint32_t>();
  if (crc != crc_of(payload)) throw Error(Errc::ChecksumMismatch, "database section checksum");
  return payload;
}

std::string encode_place(const Place& place) {
  Writer w;
  w.put(place.id);
  w.put_vec(place.center);
  const VoxelCloud& cloud = place.features.cloud;
  w.put(cloud.cell_size);
  w.put_vec(cloud.viewpoint);
  w.put(static_cast<std::uint64_t>(cloud.size()));
  for (const auto& c : cloud.cells) {
    w.put_vec(c.centroid);
    w.put(c.intensity);
    w.put(static_cast<std::uint64_t>(c.count));
  }
  const NormalField& normals = place.features.normals;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w.put_vec(normals.normals[i]);
    w.put(normals.valid[i]);
  }
  w.put(static_cast<std::uint64_t>(place.features.keypoints.size()));
  for (const auto& k : place.features.keypoints) {
    w.put_vec(k.position);
    w.put(k.saliency);
    w.put(static_cast<std::uint8_t>(k.is_boundary));
    w.put(static_cast<std::uint64_t>(k.cell));
  }
  w.put(static_cast<std::uint64_t>(place.descriptor_keypoints.size()));
  w.put_array(place.descriptor_keypoints.data(), place.descriptor_keypoints.size());
  w.put(static_cast<std::uint64_t>(place.descriptors.size()));
  w.put_array(place.descriptors.data(), place.descriptors.size());
  return w.bytes();
}

Place decode_place(const std::string& payload, const PipelineParams& params) {
  Reader r(payload.data(), payload.size());
  Place place;
  place.id = r.get<std::uint32_t>();
  place.center = r.get_vec();
  VoxelCloud cloud;
  cloud.cell_size = r.get<double>();
  cloud.viewpoint = r.get_vec();
  const auto n = r.get<std::uint64_t>();
  if (n > r.remaining()) throw Error(Errc::ChecksumMismatch, "database cell count");
  cloud.cells.resize(n);
  for (auto& c : cloud.cells) {
    c.centroid = r.get_vec();
    c.intensity = r.get<double>();
    c.count = r.get<std::uint64_t>();
  }
  NormalField normals;
  normals.normals.resize(n);
  normals.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    normals.normals[i] = r.get_vec();
    normals.valid[i] = r.get<std::uint8_t>();
  }
  const auto nk = r.get<std::uint64_t>();
  if (nk > r.remaining()) throw Error(Errc::ChecksumMismatch, "database keypoint count");
  std::vector<Keypoint> keypoints(nk);
  for (auto& k : keypoints) {
    k.position = r.get_vec();
    k.saliency = r.get<double>();
    k.is_boundary = r.get<std::uint8_t>() != 0;
    k.cell = r.get<std::uint64_t>();
    if (k.cell >= n) throw Error(Errc::ParseError, "keypoint cell out of range");
  }
  const auto nd = r.get<std::uint64_t>();
  place.descriptor_keypoints.resize(nd);
  r.get_array(place.descriptor_keypoints.data(), nd);
  const auto nv = r.get<std::uint64_t>();
  place.descriptors.resize(nv);
  r.get_array(place.descriptors.data(), nv);
  if (r.remaining() != 0) throw Error(Errc::ChecksumMismatch, "trailing bytes in place section");
  (void)params;

  place.features.cloud = std::move(cloud);
  place.features.normals = std::move(normals);
  place.features.index = SpatialIndex(place.features.cloud.positions());
  place.features.keypoints = std::move(keypoints);
  return place;
}

}  // namespace

std::vector<double> trajectory_arc(std::span<const Vec3> trajectory) {
  std::vector<double> arc(trajectory.size(), 0.0);
  for (std::size_t i = 1; i < trajectory.size(); ++i) arc[i] = arc[i - 1] + (trajectory[i] - trajectory[i - 1]).norm();
  return arc;
}

std::vector<PlaceMembers> partition_places(std::span<const Point> map_points, std::span<const Vec3> trajectory,
                                           const PipelineParams& params, std::span<const double> point_arc) {
  if (trajectory.empty()) throw Error(Errc::EmptyTrajectory, "trajectory has no poses");
  if (!(params.min_place_distance > 0.0) || !(params.min_place_distance < params.place_radius))
    throw Error(Errc::InvalidArgument, "need 0 < min_place_distance < place_radius");
  if (!point_arc.empty() && point_arc.size() != map_points.size())
    throw Error(Errc::DimensionMismatch, "one arc value per map point");
  if (params.place_window > 0.0 && point_arc.empty())
    throw Error(Errc::InvalidArgument, "place_window needs per-point arc positions");

  const auto arc = trajectory_arc(trajectory);
  std::vector<PlaceMembers> places;
  double last = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (i == 0 || arc[i] - last >= params.min_place_distance - kArcEps) {
      places.push_back({trajectory[i], arc[i], {}});
      last = arc[i];
    }
  }
  const double r2 = params.place_radius * params.place_radius;
  const double half = params.place_window / 2.0;
  parallel_for(places.size(), [&](std::size_t k) {
    PlaceMembers& place = places[k];
    for (std::size_t i = 0; i < map_points.size(); ++i) {
      if (squared_distance(map_points[i].position, place.center) > r2) continue;
      if (half > 0.0) {
        const double offset = point_arc[i] - place.arc;
        if (offset < -half || offset >= half) continue;
      }
      place.points.push_back(map_points[i]);
    }
  });
  return places;
}

double PlaceDatabase::max_center_distance() const {
  return center_distances.size() == 0 ? 0.0 : center_distances.maxCoeff();
}

void PlaceDatabase::finalize() {
  const std::size_t n = places.size();
  center_distances = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (places[i].center - places[j].center).norm();
      center_distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      center_distances(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    }
  const std::size_t dims = kShotVolumes * (params.shot.shape_bins + params.shot.intensity_bins);
  index = DescriptorIndex(dims);
  row_begin.clear();
  for (const auto& place : places) {
    row_begin.push_back(index.size());
    if (place.descriptors.size() != place.descriptor_count() * dims)
      throw Error(Errc::DimensionMismatch, "place descriptor matrix has the wrong shape");
    for (std::size_t d = 0; d < place.descriptor_count(); ++d)
      index.add(std::span<const float>(place.descriptors.data() + d * dims, dims), place.id,
                place.descriptor_keypoints[d]);
  }
  row_begin.push_back(index.size());
}

PlaceDatabase build_database(std::vector<PlaceMembers> members, const CalibrationTable& calibration,
                             const PipelineParams& params) {
  if (members.empty()) throw Error(Errc::InvalidArgument, "no places to build");
  PlaceDatabase db;
  db.calibration = calibration;
  db.params = params;
  db.places.resize(members.size());
  const std::size_t dims = kShotVolumes * (params.shot.shape_bins + params.shot.intensity_bins);
  for (std::size_t i = 0; i < members.size(); ++i) {
    Place& place = db.places[i];
    place.id = static_cast<std::uint32_t>(i);
    place.center = members[i].center;
    VoxelCloud cloud = voxel_downsample(members[i].points, params.voxel_size, members[i].center);
    members[i].points = {};
    place.features = prepare_features(std::move(cloud), params);
    std::vector<Descriptor> described(place.keypoint_count());
    parallel_for(described.size(), [&](std::size_t k) {
      described[k] = describe_keypoint(place.features, k, DescriptorKind::Ishot, params.shot);
    });
    for (const auto& d : described) {
      if (!d.usable) continue;
      const auto row = to_float_row(d.values, dims);
      place.descriptors.insert(place.descriptors.end(), row.begin(), row.end());
      place.descriptor_keypoints.push_back(static_cast<std::uint32_t>(d.keypoint_index));
    }
    if (place.keypoint_count() == 0) spdlog::warn("place {} yielded no keypoints", i);
  }
  db.finalize();
  return db;
}

void save_database(const PlaceDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  out.put(static_cast<char>(kVersion));

  Writer m;
  m.put(static_cast<std::uint32_t>(db.places.size()));
  m.put(static_cast<std::uint8_t>(db.kind));
  m.put(static_cast<std::uint32_t>(db.index.dims()));
  PipelineParams params = db.params;
  visit_params(params, [&](auto& v) { m.put(v); });
  m.put(static_cast<std::int32_t>(db.calibration.num_beams));
  m.put(db.calibration.max_calib_range);
  m.put(static_cast<std::uint32_t>(db.calibration.mapping.size()));
  for (const auto& row : db.calibration.mapping) m.put_array(row.data(), row.size());
  write_section(out, kManifestTag, m.bytes());

  for (const auto& place : db.places) write_section(out, kPlaceTag, encode_place(place));
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

PlaceDatabase load_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic + 1 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error(Errc::ParseError, path.string() + ": not a place database");
  if (static_cast<std::uint8_t>(bytes[sizeof kMagic]) != kVersion)
    throw Error(Errc::VersionMismatch, path.string() + ": unsupported database version " +
                                           std::to_string(static_cast<std::uint8_t>(bytes[sizeof kMagic])));
  Reader file(bytes.data() + sizeof kMagic + 1, bytes.size() - sizeof kMagic - 1);

  PlaceDatabase db;
  const std::string manifest = read_section(file, kManifestTag);
  Reader m(manifest.data(), manifest.size());
  const auto count = m.get<std::uint32_t>();
  db.kind = static_cast<DescriptorKind>(m.get<std::uint8_t>());
  const auto dims = m.get<std::uint32_t>();
  visit_params(db.params, [&](auto& v) { v = m.get<std::remove_reference_t<decltype(v)>>(); });
  db.calibration.num_beams = m.get<std::int32_t>();
  db.calibration.max_calib_range = m.get<double>();
  db.calibration.mapping.resize(m.get<std::uint32_t>());
  for (auto& row : db.calibration.mapping) m.get_array(row.data(), row.size());
  if (m.remaining() != 0) throw Error(Errc::ChecksumMismatch, "trailing bytes in manifest");

  db.places.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) db.places.push_back(decode_place(read_section(file, kPlaceTag), db.params));
  if (file.remaining() != 0) throw Error(Errc::ChecksumMismatch, path.string() + ": trailing bytes");
  db.finalize();
  if (db.index.dims() != dims) throw Error(Errc::DimensionMismatch, "descriptor width disagrees with manifest");
  return db;
}

}  // namespace lpr
