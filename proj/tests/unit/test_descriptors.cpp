#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "lpr/descriptors/matching.hpp"
#include "lpr/descriptors/shot.hpp"

using namespace lpr;

namespace {

struct Scene {
  VoxelCloud cloud;
  SpatialIndex index;
  NormalField normals;

  Scene(std::vector<Vec3> pts, std::vector<double> intensity)
      : cloud(fixtures::cloud_from(pts, intensity, 0.4, Vec3(0, 0, 3))),
        index(cloud.positions()),
        normals(estimate_normals(cloud, index)) {}
  Surface surface() const { return {cloud, normals, index}; }
};

Scene textured_scene(std::uint64_t seed, double offset = 0.0) {
  std::mt19937_64 rng(seed);
  auto pts = fixtures::cluttered_scene(rng);
  std::uniform_real_distribution<double> u(0.0, 0.6);
  std::vector<double> intensity(pts.size());
  for (auto& v : intensity) v = u(rng) + offset;
  return Scene(std::move(pts), std::move(intensity));
}

double block_norm(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

double plain_sq(const std::vector<float>& a, std::span<const float> b, std::size_t dims) {
  double s = 0.0;
  for (std::size_t i = 0; i < dims; ++i) s += (double(a[i]) - double(b[i])) * (double(a[i]) - double(b[i]));
  return s;
}

}  // namespace

TEST_CASE("local frame of a plane has the normal as z") {
  std::vector<Vec3> pts;
  for (double x = -5; x <= 5; x += 0.4)
    for (double y = -5; y <= 5; y += 0.4) pts.emplace_back(x, y, 0.0);
  const SpatialIndex index(pts);
  const auto lrf = compute_lrf(index, Vec3(0.03, -0.02, 0.0), 3.0);
  CHECK(std::abs(std::abs(lrf.axes(2, 2)) - 1.0) < 1e-9);
}

TEST_CASE("local frame is orthonormal, right-handed and rotates with the cloud") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pts = fixtures::random_points(400, 3.0, rng);
    const Vec3 kp = pts[0];
    const auto lrf = compute_lrf(SpatialIndex(pts), kp, 2.5);
    CHECK((lrf.axes * lrf.axes.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(lrf.axes.determinant() == doctest::Approx(1.0).epsilon(1e-12));

    const auto T = fixtures::random_motion(rng);
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(T.apply(p));
    const auto lrf2 = compute_lrf(SpatialIndex(moved), T.apply(kp), 2.5);
    CHECK((lrf2.axes - lrf.axes * T.rotation.transpose()).norm() < 1e-8);
  }
}

TEST_CASE("local frame needs enough neighbors") {
  std::vector<Vec3> pts{Vec3::Zero(), Vec3(0.1, 0, 0), Vec3(0, 0.2, 0), Vec3(0, 0, 0.3), Vec3(0.1, 0.1, 0.1)};
  const SpatialIndex index(pts);
  CHECK(fixtures::error_of([&] { compute_lrf(index, Vec3::Zero(), 1.0); }) == Errc::InsufficientSupport);
  pts.emplace_back(-0.1, 0.05, 0.2);
  CHECK_FALSE(fixtures::error_of([&] { compute_lrf(SpatialIndex(pts), Vec3::Zero(), 1.0); }));
}

TEST_CASE("descriptor layout and per-cue normalization") {
  const Scene s = textured_scene(7);
  const auto surf = s.surface();
  for (std::size_t c : {std::size_t{100}, std::size_t{2000}, s.cloud.size() - 3}) {
    const Keypoint kp = keypoint_at(surf, s.cloud.cells[c].centroid);
    const auto lrf = compute_lrf(s.index, kp.position, 7.0);
    const auto shot = compute_shot(surf, kp, lrf);
    const auto ishot = compute_ishot(surf, kp, lrf);
    REQUIRE(shot.values.size() == 352);
    REQUIRE(ishot.values.size() == 1344);
    CHECK(shot.kind == DescriptorKind::Shot);
    CHECK(ishot.kind == DescriptorKind::Ishot);
    CHECK(block_norm(shot.values, 0, 352) == doctest::Approx(1.0));
    CHECK(block_norm(ishot.values, 0, 352) == doctest::Approx(1.0));
    CHECK(block_norm(ishot.values, 352, 1344) == doctest::Approx(1.0));
    CHECK(std::equal(shot.values.begin(), shot.values.end(), ishot.values.begin()));
    for (double v : ishot.values) CHECK(v >= 0.0);
  }
}

TEST_CASE("uniform intensity puts all texture mass in the zero-difference bin") {
  std::mt19937_64 rng(9);
  auto pts = fixtures::cluttered_scene(rng);
  const Scene s(pts, std::vector<double>(pts.size(), 0.42));
  const auto surf = s.surface();
  const Keypoint kp = keypoint_at(surf, Vec3(0.2, 0.2, 0.0));
  const auto d = compute_ishot(surf, kp, compute_lrf(s.index, kp.position, 7.0));
  double mass = 0.0;
  for (std::size_t vol = 0; vol < 32; ++vol)
    for (std::size_t b = 0; b < 31; ++b) {
      const double v = d.values[352 + vol * 31 + b];
      if (b == 15)
        mass += v;
      else
        CHECK(v == 0.0);
    }
  CHECK(mass > 0.0);
}

TEST_CASE("intensity offset leaves the descriptor unchanged") {
  const Scene a = textured_scene(13, 0.0);
  const Scene b = textured_scene(13, 0.3);
  for (std::size_t c : {std::size_t{50}, std::size_t{1500}, std::size_t{3000}}) {
    const Keypoint ka = keypoint_at(a.surface(), a.cloud.cells[c].centroid);
    const Keypoint kb = keypoint_at(b.surface(), b.cloud.cells[c].centroid);
    const auto da = compute_ishot(a.surface(), ka, compute_lrf(a.index, ka.position, 7.0));
    const auto db = compute_ishot(b.surface(), kb, compute_lrf(b.index, kb.position, 7.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < da.values.size(); ++i) worst = std::max(worst, std::abs(da.values[i] - db.values[i]));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("ratio test on hand-made rows") {
  DescriptorIndex db(2);
  db.add(std::vector<float>{0.0f, 0.0f}, 0, 0);
  db.add(std::vector<float>{2.0f, 0.0f}, 1, 0);
  db.add(std::vector<float>{0.0f, 4.0f}, 2, 0);
  const std::vector<std::vector<float>> q{{0.5f, 0.0f}, {1.0f, 0.0f}, {0.0f, 0.0f}};
  const auto m = match_nndr(q, db);
  CHECK(m[0].nearest == 0);
  CHECK(m[0].second == 1);
  CHECK(m[0].tau == doctest::Approx(0.5 / 1.5));
  CHECK(m[0].place == 0);
  // Equidistant: tau = 1, lowest row wins.
  CHECK(m[1].nearest == 0);
  CHECK(m[1].second == 1);
  CHECK(m[1].tau == 1.0);
  CHECK(m[2].tau == 0.0);

  DescriptorIndex tiny(2);
  tiny.add(std::vector<float>{0.0f, 0.0f}, 0, 0);
  CHECK(fixtures::error_of([&] { match_nndr(q, tiny); }) == Errc::DatabaseTooSmall);
  CHECK(fixtures::error_of([&] { tiny.add(std::vector<float>{1.0f}, 0, 1); }) == Errc::DimensionMismatch);
}

TEST_CASE("match_nndr agrees with brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(0.0f, 0.1f);
  const std::size_t dims = 352, rows = 5000;
  DescriptorIndex db(dims);
  std::vector<std::vector<float>> stored;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<float> row(dims);
    if (r % 97 == 5 && !stored.empty()) {
      row = stored[r / 2];  // duplicate rows force ties
    } else {
      for (auto& v : row) v = u(rng);
    }
    stored.push_back(row);
    db.add(std::span<const float>(row), static_cast<std::uint32_t>(r % 37), static_cast<std::uint32_t>(r));
  }
  std::vector<std::vector<float>> queries;
  for (int i = 0; i < 200; ++i) {
    std::vector<float> q(dims);
    if (i % 10 == 0) {
      q = stored[(i * 131) % rows];
    } else {
      for (auto& v : q) v = u(rng);
    }
    queries.push_back(q);
  }
  for (std::size_t prefix : {std::size_t{0}, std::size_t{100}}) {
    const std::size_t d = prefix == 0 ? dims : prefix;
    const auto got = match_nndr(queries, db, prefix);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t r = 0; r < rows; ++r) all.emplace_back(plain_sq(queries[qi], db.row(r), d), r);
      std::partial_sort(all.begin(), all.begin() + 2, all.end());
      CHECK(got[qi].nearest == all[0].second);
      CHECK(got[qi].second == all[1].second);
      CHECK(got[qi].nearest_sq == all[0].first);
      CHECK(got[qi].second_sq == all[1].first);
      CHECK(got[qi].place == db.place(all[0].second));
      CHECK(got[qi].query_index == qi);
    }
  }
}

TEST_CASE("knn_rows agrees with brute force on a row subset") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  DescriptorIndex db(16);
  for (int r = 0; r < 400; ++r) {
    std::vector<float> row(16);
    for (auto& v : row) v = r % 50 == 7 ? 0.5f : u(rng);
    db.add(std::span<const float>(row), 0, static_cast<std::uint32_t>(r));
  }
  std::vector<std::size_t> subset;
  for (std::size_t r = 0; r < 400; r += 3) subset.push_back(r);
  subset.push_back(7);
  subset.push_back(57);
  for (int t = 0; t < 20; ++t) {
    std::vector<float> q(16);
    for (auto& v : q) v = t % 5 == 0 ? 0.5f : u(rng);
    const auto got = knn_rows(q, db, subset, 6);
    std::vector<std::pair<double, std::size_t>> all;
    for (auto r : subset) all.emplace_back(plain_sq(q, db.row(r), 16), r);
    std::sort(all.begin(), all.end());
    REQUIRE(got.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(got[i].row == all[i].second);
      CHECK(got[i].sq_distance == all[i].first);
    }
  }
  CHECK(knn_rows(std::vector<float>(16, 0.f), db, std::vector<std::size_t>{1, 2}, 5).size() == 2);
}
