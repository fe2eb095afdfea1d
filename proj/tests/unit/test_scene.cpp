#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "roomsim/error.hpp"
#include "roomsim/manifest.hpp"
#include "roomsim/scene.hpp"
#include "roomsim/voxel.hpp"
#include "test_support.hpp"

using namespace roomsim;

namespace {

RoomScene seven_by_four() {
  RoomScene s = testing::shoebox({7.0, 4.5, 2.5}, 0.3);
  s.sources = {{"s", {1.0, 1.0, 1.2}, {}}};
  s.receivers = {{"r", {5.0, 3.0, 1.2}}};
  return s;
}

bool has_message(const std::vector<SceneIssue>& issues, const std::string& text) {
  for (const auto& i : issues)
    if (i.message.find(text) != std::string::npos) return true;
  return false;
}

ManifestEntry sqrt525_entry() {
  ManifestEntry e;
  e.rir_path = "a.wav";
  e.engine = Engine::ism;
  e.room_id = "lab";
  e.condition_id = "c";
  e.source_id = "s1";
  e.receiver_id = "r1";
  e.source_pos = {1, 1, 1};
  e.receiver_pos = {2, 3, 1.5};
  e.true_distance = 2.291288;
  return e;
}

}  // namespace

TEST_CASE("validate_scene accepts a clean room and is idempotent") {
  const auto s = seven_by_four();
  const auto first = validate_scene(s);
  CHECK(first.empty());
  CHECK(validate_scene(s).size() == first.size());
}

TEST_CASE("validate_scene reports wall clearance") {
  auto s = seven_by_four();
  s.sources[0].position = {0.05, 1.0, 1.0};
  const auto issues = validate_scene(s);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].message == "clearance < 0.1 m to wall -x");
  CHECK(issues[0].location.find("source 0") != std::string::npos);
  CHECK_THROWS_AS(require_valid(s), Error);
}

TEST_CASE("validate_scene reports points inside boxes and overlapping boxes") {
  auto s = seven_by_four();
  s.boxes.push_back({{4.5, 2.5, 0.0}, {5.5, 3.5, 2.0}, "wall"});
  CHECK(has_message(validate_scene(s), "receiver inside solid"));

  s.receivers[0].position = {3.0, 3.0, 1.2};
  s.boxes.push_back({{5.0, 3.0, 1.0}, {6.0, 4.0, 2.0}, "wall"});
  CHECK(has_message(validate_scene(s), "overlaps box 1"));
}

TEST_CASE("validate_scene checks material ranges and orientation") {
  auto s = seven_by_four();
  s.materials[0].absorption[2] = 1.5;
  s.sources[0].directivity = {DirectivityKind::cardioid, {1.0, 1.0, 0.0}};
  const auto issues = validate_scene(s);
  CHECK(has_message(issues, "absorption band 2 outside [0,1]"));
  CHECK(has_message(issues, "orientation is not a unit vector"));
}

TEST_CASE("cardioid gain") {
  Directivity d{DirectivityKind::cardioid, {1.0, 0.0, 0.0}};
  CHECK(d.gain({1, 0, 0}) == doctest::Approx(1.0));
  CHECK(d.gain({0, 1, 0}) == doctest::Approx(0.5));
  CHECK(d.gain({-1, 0, 0}) == doctest::Approx(0.0));
  CHECK(Directivity{}.gain({0, 0, -1}) == 1.0);
}

TEST_CASE("scene JSON round trip") {
  auto s = lab_room_scene(0.2, 0.3);
  s.boxes.push_back({{3.0, 2.0, 0.0}, {3.4, 2.4, 0.4}, "lab_surface"});
  s.sources[1].directivity = {DirectivityKind::cardioid, {0.0, -1.0, 0.0}};
  const auto dir = testing::scratch_dir("scene_rt");
  save_scene(s, dir / "scene.json");
  const auto back = load_scene(dir / "scene.json");
  CHECK(back.name == s.name);
  CHECK(back.dims == s.dims);
  CHECK(back.boxes.size() == 1);
  CHECK(back.sources[1].directivity.kind == DirectivityKind::cardioid);
  CHECK(back.sources[1].directivity.orientation == s.sources[1].directivity.orientation);
  CHECK(back.receivers.size() == 10);
  CHECK(back.material("lab_surface").absorption == s.materials[0].absorption);
  CHECK(scene_to_json(back) == scene_to_json(s));
}

TEST_CASE("lab room geometry and Eyring value") {
  const auto s = lab_room_scene();
  CHECK(s.volume() == doctest::Approx(78.75));
  CHECK(s.surface_area() == doctest::Approx(120.5));
  CHECK(validate_scene(s).empty());
  // 0.161 * 78.75 / (120.5 * -ln 0.7)
  const double oracle = 0.161 * 78.75 / (120.5 * 0.35667494393873245);
  CHECK(eyring_t60(78.75, 120.5, 0.3) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(0.295).epsilon(0.002));
}

TEST_CASE("manifest accepts the sqrt(5.25) entry") {
  CHECK(std::sqrt(1.0 + 4.0 + 0.25) == doctest::Approx(2.291288).epsilon(1e-6));
  DatasetManifest m;
  m.entries = {sqrt525_entry()};
  CHECK_NOTHROW(validate_manifest(m));
}

TEST_CASE("manifest rejects a distance mismatch with entry and delta") {
  DatasetManifest m;
  m.entries = {sqrt525_entry()};
  m.entries[0].true_distance = 2.0;
  try {
    validate_manifest(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    const std::string msg = e.what();
    CHECK(msg.find("entry 0") != std::string::npos);
    CHECK(msg.find("delta 0.291") != std::string::npos);
  }
}

TEST_CASE("manifest rejects duplicate keys") {
  DatasetManifest m;
  m.entries = {sqrt525_entry(), sqrt525_entry()};
  m.entries[1].rir_path = "b.wav";
  CHECK_THROWS_WITH_AS(validate_manifest(m), doctest::Contains("duplicate key"), Error);
  m.entries[1].engine = Engine::rt;
  CHECK_NOTHROW(validate_manifest(m));
}

TEST_CASE("manifest file round trip keeps order") {
  DatasetManifest m;
  for (int i = 0; i < 5; ++i) {
    auto e = sqrt525_entry();
    e.receiver_id = "r" + std::to_string(5 - i);
    e.receiver_pos = {2.0 + 0.1 * i, 3.0, 1.5};
    e.true_distance = distance(e.source_pos, e.receiver_pos);
    m.entries.push_back(e);
  }
  const auto dir = testing::scratch_dir("manifest_rt");
  save_manifest(m, dir / "manifest.json");
  const auto back = load_manifest(dir / "manifest.json");
  CHECK(back == m);
  CHECK(back.entries.front().receiver_id == "r5");
  CHECK(back.resolve(back.entries[0]) == dir / "a.wav");
}

TEST_CASE("manifest loading surfaces parse errors") {
  const auto dir = testing::scratch_dir("manifest_bad");
  std::ofstream(dir / "bad.json") << "{\"entries\": [ {\"engine\": 3 } ]";
  CHECK_THROWS_AS(load_manifest(dir / "bad.json"), Error);
  try {
    load_manifest(dir / "missing.json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}

TEST_CASE("receiver grid count matches brute-force enumeration") {
  const auto s = testing::shoebox({7.0, 4.5, 2.5}, 0.3);
  const double spacing = 0.5, margin = 0.25;
  // Cells of width `spacing` laid from the margin that fit inside the span.
  auto count = [&](double L) {
    int n = 0;
    for (int k = 0; margin + (k + 1) * spacing <= L - margin + 1e-12; ++k) ++n;
    return n;
  };
  CHECK(count(7.0) == 13);
  CHECK(count(4.5) == 8);
  const auto grid = make_receiver_grid(s, spacing, 1.2);
  CHECK(grid.size() == 104);
  // x-major ordering
  CHECK(grid[0].x == grid[7].x);
  CHECK(grid[8].x > grid[7].x);
  for (const auto& p : grid) {
    CHECK(p.z == 1.2);
    CHECK(p.x >= 0.1);
    CHECK(p.x <= 6.9);
  }
}

TEST_CASE("receiver grid errors and box clipping") {
  auto s = testing::shoebox({7.0, 4.5, 2.5}, 0.3);
  CHECK_THROWS_AS(make_receiver_grid(s, 100.0, 1.2), Error);
  s.boxes.push_back({{3.0, 2.0, 0.0}, {4.0, 3.0, 2.0}, "wall"});
  const auto grid = make_receiver_grid(s, 0.5, 1.2);
  CHECK(grid.size() < 104);
  for (const auto& p : grid) CHECK_FALSE(s.boxes[0].contains(p));
}

TEST_CASE("voxelize exact cases") {
  auto s = testing::shoebox({2.0, 2.0, 2.0}, 0.3);
  const auto g = voxelize(s, 0.5);
  CHECK(g.dims == std::array<int, 3>{4, 4, 4});
  CHECK(g.air_cells() == 64);

  s.boxes.push_back({{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, "wall"});
  // brute-force centre inclusion
  std::size_t air = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        if (!s.boxes[0].contains({(i + 0.5) * 0.5, (j + 0.5) * 0.5, (k + 0.5) * 0.5})) ++air;
  CHECK(air == 56);
  CHECK(voxelize(s, 0.5).air_cells() == air);

  CHECK_THROWS_AS(voxelize(s, 1.0), Error);
}

TEST_CASE("voxel air volume converges for the lab room with a brick pile") {
  auto s = lab_room_scene();
  s.boxes.push_back({{3.03, 2.02, 0.0}, {3.43, 2.42, 0.4}, "lab_surface"});
  const double analytic = s.volume() - s.boxes[0].volume();
  const auto g = voxelize(s, 0.05);
  CHECK(std::abs(g.air_volume() - analytic) / analytic < 0.02);
}

TEST_CASE("admittance and absorption conversions invert each other") {
  for (double a : {0.01, 0.1, 0.3, 0.7, 0.9}) {
    const double beta = admittance_from_absorption(a);
    CHECK(beta > 0.0);
    CHECK(absorption_from_admittance(beta) == doctest::Approx(a).epsilon(1e-10));
  }
  CHECK(admittance_from_absorption(0.0) == 0.0);
  const double top = absorption_from_admittance(admittance_from_absorption(1.0));
  CHECK(top == doctest::Approx(0.951).epsilon(1e-3));
  CHECK(admittance_from_absorption(0.99) == admittance_from_absorption(1.0));
}

TEST_CASE("absorption is the diffuse-field average of the angular loss") {
  for (double beta : {0.005, 0.05, 0.3, 1.0, 3.0}) {
    // midpoint rule over theta with the sin(2 theta) weight
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double th = (i + 0.5) * (std::numbers::pi / 2) / n;
      const double c = std::cos(th);
      const double r = (c - beta) / (c + beta);
      sum += (1.0 - r * r) * std::sin(2.0 * th);
    }
    sum *= (std::numbers::pi / 2) / n;
    CHECK(absorption_from_admittance(beta) == doctest::Approx(sum).epsilon(1e-8));
  }
}
