#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "roomsim/acoustics.hpp"
#include "roomsim/error.hpp"
#include "roomsim/ism.hpp"
#include "test_support.hpp"

using namespace roomsim;

namespace {

RoomScene pair_scene(Vec3 src, Vec3 rcv, double alpha, Vec3 dims = {7.0, 4.5, 2.5}) {
  RoomScene s = testing::shoebox(dims, alpha);
  s.sources = {{"s", src, {}}};
  s.receivers = {{"r", rcv}};
  return s;
}

std::size_t argmax_abs(const std::vector<double>& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[best])) best = i;
  return best;
}

// Number of lattice images (n, q per axis) with total reflection count <= order.
// Along one axis image (n, q) is reached after |2n - q| reflections.
int brute_force_images(int order) {
  int count = 0;
  const int r = order + 1;
  for (int nx = -r; nx <= r; ++nx)
    for (int qx = 0; qx <= 1; ++qx)
      for (int ny = -r; ny <= r; ++ny)
        for (int qy = 0; qy <= 1; ++qy)
          for (int nz = -r; nz <= r; ++nz)
            for (int qz = 0; qz <= 1; ++qz)
              if (std::abs(2 * nx - qx) + std::abs(2 * ny - qy) + std::abs(2 * nz - qz) <= order)
                ++count;
  return count;
}

// Energy histogram of the exact specular lattice, summed without truncation
// by reflection order: every image arriving before `t_max`.
std::vector<double> lattice_energy(Vec3 dims, Vec3 src, Vec3 rcv, double alpha, double t_max,
                                   double bin) {
  const double c = 343.0;
  std::vector<double> h(static_cast<std::size_t>(t_max / bin) + 1, 0.0);
  const double lim = c * t_max;
  auto axis = [&](double L, double s, double r) {
    std::vector<std::pair<double, int>> out;
    const int N = static_cast<int>(lim / (2 * L)) + 2;
    for (int n = -N; n <= N; ++n)
      for (int q = 0; q <= 1; ++q) out.push_back({2 * n * L + (1 - 2 * q) * s - r, std::abs(2 * n - q)});
    return out;
  };
  const auto X = axis(dims.x, src.x, rcv.x), Y = axis(dims.y, src.y, rcv.y), Z = axis(dims.z, src.z, rcv.z);
  for (const auto& [x, ox] : X)
    for (const auto& [y, oy] : Y)
      for (const auto& [z, oz] : Z) {
        const double d2 = x * x + y * y + z * z;
        const double t = std::sqrt(d2) / c;
        if (t >= t_max) continue;
        h[static_cast<std::size_t>(t / bin)] += std::pow(1.0 - alpha, ox + oy + oz) / d2;
      }
  return h;
}

}  // namespace


TEST_CASE("image counts") {
  const auto s = testing::shoebox({3.0, 3.0, 3.0}, 0.2);
  const Vec3 src{1.0, 1.2, 0.7};
  CHECK(ism::compute_images(s, src, 0).size() == 1);
  CHECK(ism::compute_images(s, src, 1).size() == 7);
  CHECK(brute_force_images(2) == 25);
  CHECK(ism::compute_images(s, src, 2).size() == 25);
  for (int order : {3, 5, 8}) CHECK(ism::compute_images(s, src, order).size() == brute_force_images(order));
}

TEST_CASE("images carry order, wall hits and gains") {
  const auto s = testing::shoebox({3.0, 4.0, 5.0}, 0.36);
  const Vec3 src{1.0, 1.0, 1.0};
  const auto images = ism::compute_images(s, src, 3);
  bool found_original = false;
  for (const auto& img : images) {
    int hits = 0;
    for (int w : img.wall_hits) hits += w;
    CHECK(hits == img.order);
    CHECK(img.gain[0] == doctest::Approx(std::pow(0.8, img.order)));
    if (img.order == 0) {
      found_original = true;
      CHECK(img.position == src);
    }
    if (img.order == 1 && img.wall_hits[wall_neg_x] == 1) CHECK(img.position.x == doctest::Approx(-1.0));
  }
  CHECK(found_original);
  CHECK(std::is_sorted(images.begin(), images.end(), [](const auto& a, const auto& b) {
    if (a.lattice != b.lattice) return a.lattice < b.lattice;
    return a.parity < b.parity;
  }));
}

TEST_CASE("ism refuses interior boxes") {
  auto s = pair_scene({1, 1, 1}, {4, 3, 1.2}, 0.3);
  s.boxes.push_back({{5.0, 3.5, 0.0}, {6.0, 4.2, 1.0}, "wall"});
  try {
    ism::render_rir_ism(s, 0, 0, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::incompatible);
    CHECK(std::string(e.what()).find("ISM supports empty shoeboxes only") != std::string::npos);
  }
}

TEST_CASE("direct path lands on sample 107") {
  const double d = std::sqrt(5.25);
  CHECK(std::lround(d / 343.0 * 16000.0) == 107);
  const auto s = pair_scene({1, 1, 1}, {2, 3, 1.5}, 0.3);
  ism::IsmConfig cfg;
  cfg.max_order = 0;
  cfg.duration = 0.05;
  const auto rir = ism::render_rir_ism(s, 0, 0, cfg);
  CHECK(rir.samples.size() == 800);
  CHECK(argmax_abs(rir.samples) == 107);
  cfg.fractional_delay = false;
  CHECK(argmax_abs(ism::render_rir_ism(s, 0, 0, cfg).samples) == 107);
  cfg.max_order = 10;
  cfg.fractional_delay = true;
  CHECK(argmax_abs(ism::render_rir_ism(s, 0, 0, cfg).samples) == 107);
}

TEST_CASE("1/r spreading law") {
  RoomScene s = testing::shoebox({7.0, 4.5, 2.5}, 0.0);
  s.sources = {{"s", {2.0, 2.0, 1.2}, {}}};
  s.receivers = {{"near", {3.0, 2.0, 1.2}}, {"far", {4.0, 2.0, 1.2}}};
  ism::IsmConfig cfg;
  cfg.max_order = 0;
  cfg.duration = 0.05;
  cfg.fractional_delay = false;
  const auto a = ism::render_rir_ism(s, 0, 0, cfg).samples;
  const auto b = ism::render_rir_ism(s, 0, 1, cfg).samples;
  const double ratio = std::abs(a[argmax_abs(a)]) / std::abs(b[argmax_abs(b)]);
  CHECK(std::abs(ratio - 2.0) < 1e-6);
}

TEST_CASE("full absorption leaves only the direct path") {
  auto s = pair_scene({1.3, 1.1, 1.0}, {4.2, 3.0, 1.6}, 1.0);
  ism::IsmConfig cfg;
  cfg.duration = 0.2;
  cfg.max_order = 0;
  const auto direct = ism::render_rir_ism(s, 0, 0, cfg).samples;
  cfg.max_order = 12;
  const auto full = ism::render_rir_ism(s, 0, 0, cfg).samples;
  CHECK(full == direct);
}

TEST_CASE("reciprocity and determinism") {
  const Vec3 a{1.3, 1.1, 1.0}, b{4.2, 3.0, 1.6};
  ism::IsmConfig cfg;
  cfg.duration = 0.3;
  cfg.max_order = 8;
  const auto ab = ism::render_rir_ism(pair_scene(a, b, 0.25), 0, 0, cfg).samples;
  const auto ba = ism::render_rir_ism(pair_scene(b, a, 0.25), 0, 0, cfg).samples;
  REQUIRE(ab.size() == ba.size());
  double worst = 0;
  for (std::size_t i = 0; i < ab.size(); ++i) worst = std::max(worst, std::abs(ab[i] - ba[i]));
  CHECK(worst < 1e-9);
  CHECK(ism::render_rir_ism(pair_scene(a, b, 0.25), 0, 0, cfg).samples == ab);
}

TEST_CASE("cardioid source attenuates the rear direct path") {
  auto s = pair_scene({3.0, 2.0, 1.2}, {5.0, 2.0, 1.2}, 1.0);
  s.receivers.push_back({"back", {1.0, 2.0, 1.2}});
  s.sources[0].directivity = {DirectivityKind::cardioid, {1.0, 0.0, 0.0}};
  ism::IsmConfig cfg;
  cfg.max_order = 0;
  cfg.duration = 0.05;
  const auto front = ism::render_rir_ism(s, 0, 0, cfg).samples;
  const auto back = ism::render_rir_ism(s, 0, 1, cfg).samples;
  CHECK(std::abs(front[argmax_abs(front)]) > 0.1);
  CHECK(std::abs(back[argmax_abs(back)]) < 1e-12);
}

TEST_CASE("errors on short duration and bad indices") {
  const auto s = pair_scene({1, 1, 1}, {6, 4, 2}, 0.3);
  ism::IsmConfig cfg;
  cfg.duration = 0.005;
  CHECK_THROWS_AS(ism::render_rir_ism(s, 0, 0, cfg), Error);
  CHECK_THROWS_AS(ism::render_rir_ism(s, 1, 0, {}), Error);
}

TEST_CASE("air absorption only removes energy") {
  const auto s = pair_scene({1.3, 1.1, 1.0}, {4.2, 3.0, 1.6}, 0.1);
  ism::IsmConfig cfg;
  cfg.duration = 0.5;
  cfg.max_order = 10;
  const auto dry = ism::render_rir_ism(s, 0, 0, cfg).samples;
  cfg.air_absorption = true;
  const auto wet = ism::render_rir_ism(s, 0, 0, cfg).samples;
  double ed = 0, ew = 0;
  for (double v : dry) ed += v * v;
  for (double v : wet) ew += v * v;
  CHECK(ew < ed);
  CHECK(ew > 0.5 * ed);
}

TEST_CASE("dc blocking removes the pile-up of positive images") {
  const auto s = pair_scene({1.3, 1.1, 1.0}, {4.2, 3.0, 1.6}, 0.1);
  ism::IsmConfig cfg;
  cfg.max_order = 20;
  cfg.duration = 0.5;
  auto sum = [](const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
  };
  const auto blocked = ism::render_rir_ism(s, 0, 0, cfg).samples;
  cfg.highpass_hz = 0.0;
  const auto raw = ism::render_rir_ism(s, 0, 0, cfg).samples;
  CHECK(std::abs(sum(blocked)) < 0.05 * std::abs(sum(raw)));
  CHECK(argmax_abs(blocked) == argmax_abs(raw));
  CHECK(ism::IsmConfig::from_json(cfg.to_json()).highpass_hz == 0.0);
}

TEST_CASE("image energies match the exact lattice decay") {
  auto s = lab_room_scene(0.3);
  const Vec3 src = s.sources[0].position, rcv = s.receivers[2].position;
  const auto images = ism::compute_images(s, src, 60);
  std::vector<double> h(601, 0.0);
  for (const auto& img : images) {
    const double d = distance(img.position, rcv);
    if (d / 343.0 < 0.6) h[static_cast<std::size_t>(d / 343.0 / 1e-3)] += img.gain[0] * img.gain[0] / (d * d);
  }
  const double t60 = fit_t60_from_energy(h, 1e-3);
  const double oracle = fit_t60_from_energy(lattice_energy(s.dims, src, rcv, 0.3, 0.6, 1e-3), 1e-3);
  CHECK(std::abs(t60 - oracle) / oracle < 0.02);
}

TEST_CASE("rendered decay sits above Eyring in the lab geometry") {
  // a specular shoebox with real reflection factors decays slower than the
  // diffuse-field formula
  auto s = lab_room_scene(0.3);
  ism::IsmConfig cfg;
  cfg.max_order = 30;
  cfg.duration = 0.6;
  const auto rir = ism::render_rir_ism(s, 0, 2, cfg);
  const double t60 = fit_t60(rir.samples, rir.sample_rate);
  const double eyring = eyring_t60(s.volume(), s.surface_area(), 0.3);
  CHECK(t60 > 1.2 * eyring);
  CHECK(t60 < 2.0 * eyring);
}
