#include "roomsim/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "roomsim/error.hpp"

namespace roomsim {

using nlohmann::json;

Material Material::uniform(std::string name, double alpha, double scatter) {
  Material m;
  m.name = std::move(name);
  m.absorption.fill(alpha);
  m.scattering.fill(scatter);
  return m;
}

double Directivity::gain(Vec3 dir) const {
  if (kind == DirectivityKind::omni) return 1.0;
  const double n = dir.norm();
  if (n == 0.0) return 1.0;
  const double c = std::clamp(orientation.dot(dir) / n, -1.0, 1.0);
  return 0.5 * (1.0 + c);
}

const char* wall_name(int wall) {
  static constexpr const char* names[] = {"-x", "+x", "-y", "+y", "-z", "+z"};
  return (wall >= 0 && wall < 6) ? names[wall] : "?";
}

const Material& RoomScene::material(const std::string& name) const {
  for (const auto& m : materials)
    if (m.name == name) return m;
  throw Error(ErrorKind::validation, "unknown material '" + name + "'");
}

double RoomScene::volume() const {
  double v = dims.x * dims.y * dims.z;
  for (const auto& b : boxes) v -= b.volume();
  return v;
}

double RoomScene::surface_area() const {
  double s = 2.0 * (dims.x * dims.y + dims.x * dims.z + dims.y * dims.z);
  for (const auto& b : boxes) {
    const Vec3 e = b.max - b.min;
    s += 2.0 * (e.x * e.y + e.x * e.z + e.y * e.z);
  }
  return s;
}

bool RoomScene::inside_room(Vec3 p) const {
  return p.x > 0 && p.x < dims.x && p.y > 0 && p.y < dims.y && p.z > 0 && p.z < dims.z;
}

bool RoomScene::inside_solid(Vec3 p) const {
  if (!inside_room(p)) return true;
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(p); });
}

namespace {

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double box_distance(const Box& b, Vec3 p) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = b.min[a] - p[a];
    const double hi = p[a] - b.max[a];
    const double d = std::max({lo, hi, 0.0});
    d2 += d * d;
  }
  return std::sqrt(d2);
}

bool boxes_overlap(const Box& a, const Box& b) {
  for (int ax = 0; ax < 3; ++ax)
    if (a.max[ax] <= b.min[ax] || b.max[ax] <= a.min[ax]) return false;
  return true;
}

void check_point(const RoomScene& scene, Vec3 p, const std::string& what,
                 const std::string& where, double clearance,
                 std::vector<SceneIssue>& issues) {
  if (!p.finite()) {
    issues.push_back({where, what + " position not finite"});
    return;
  }
  if (!scene.inside_room(p)) {
    issues.push_back({where, what + " outside room"});
    return;
  }
  const std::string cl = fmt_num(clearance);
  for (int w = 0; w < 6; ++w) {
    const int axis = w / 2;
    const double d = (w % 2 == 0) ? p[axis] : scene.dims[axis] - p[axis];
    if (d < clearance)
      issues.push_back({where, "clearance < " + cl + " m to wall " + wall_name(w)});
  }
  for (std::size_t k = 0; k < scene.boxes.size(); ++k) {
    const Box& b = scene.boxes[k];
    if (b.contains(p)) {
      issues.push_back({where, what + " inside solid"});
    } else if (box_distance(b, p) < clearance) {
      issues.push_back({where, "clearance < " + cl + " m to box " + std::to_string(k)});
    }
  }
}

bool has_material(const RoomScene& s, const std::string& name) {
  return std::any_of(s.materials.begin(), s.materials.end(),
                     [&](const Material& m) { return m.name == name; });
}

}  // namespace

std::vector<SceneIssue> validate_scene(const RoomScene& scene, double clearance) {
  std::vector<SceneIssue> issues;
  if (!scene.dims.finite() || scene.dims.x <= 0 || scene.dims.y <= 0 || scene.dims.z <= 0) {
    issues.push_back({"dims", "room dimensions must be positive and finite"});
    return issues;
  }
  if (!(scene.speed_of_sound > 0) || !std::isfinite(scene.speed_of_sound))
    issues.push_back({"speed_of_sound", "must be positive"});

  for (const auto& m : scene.materials) {
    const std::string where = "material " + m.name;
    for (int b = 0; b < kNumBands; ++b) {
      if (!(m.absorption[b] >= 0.0 && m.absorption[b] <= 1.0))
        issues.push_back({where, "absorption band " + std::to_string(b) + " outside [0,1]"});
      if (!(m.scattering[b] >= 0.0 && m.scattering[b] <= 1.0))
        issues.push_back({where, "scattering band " + std::to_string(b) + " outside [0,1]"});
      if (m.impedance && !((*m.impedance)[b].real() >= 0.0))
        issues.push_back({where, "impedance real part < 0 in band " + std::to_string(b)});
    }
  }
  for (int w = 0; w < 6; ++w)
    if (!has_material(scene, scene.walls[w]))
      issues.push_back({std::string("wall ") + wall_name(w),
                        "unknown material '" + scene.walls[w] + "'"});

  for (std::size_t k = 0; k < scene.boxes.size(); ++k) {
    const Box& b = scene.boxes[k];
    const std::string where = "box " + std::to_string(k);
    if (!b.min.finite() || !b.max.finite() || b.min.x >= b.max.x || b.min.y >= b.max.y ||
        b.min.z >= b.max.z)
      issues.push_back({where, "degenerate box (min must be < max)"});
    for (int a = 0; a < 3; ++a)
      if (b.min[a] < 0.0 || b.max[a] > scene.dims[a]) {
        issues.push_back({where, "box extends outside room"});
        break;
      }
    if (!has_material(scene, b.material))
      issues.push_back({where, "unknown material '" + b.material + "'"});
    for (std::size_t m = k + 1; m < scene.boxes.size(); ++m)
      if (boxes_overlap(b, scene.boxes[m]))
        issues.push_back({where, "overlaps box " + std::to_string(m)});
  }

  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& s = scene.sources[i];
    const std::string where = "source " + std::to_string(i) + " (" + s.id + ")";
    check_point(scene, s.position, "source", where, clearance, issues);
    if (std::abs(s.directivity.orientation.norm() - 1.0) > 1e-9)
      issues.push_back({where, "directivity orientation is not a unit vector"});
  }
  for (std::size_t i = 0; i < scene.receivers.size(); ++i) {
    const auto& r = scene.receivers[i];
    check_point(scene, r.position, "receiver",
                "receiver " + std::to_string(i) + " (" + r.id + ")", clearance, issues);
  }
  return issues;
}

void require_valid(const RoomScene& scene) {
  const auto issues = validate_scene(scene);
  if (issues.empty()) return;
  std::ostringstream os;
  os << "invalid scene '" << scene.name << "':";
  for (const auto& i : issues) os << "\n  " << i.location << ": " << i.message;
  throw Error(ErrorKind::validation, os.str());
}

std::vector<Vec3> make_receiver_grid(const RoomScene& scene, double spacing, double height,
                                     double clearance) {
  if (!(spacing > 0.0)) throw Error(ErrorKind::invalid_argument, "grid spacing must be > 0");
  if (!(height > 0.0 && height < scene.dims.z))
    throw Error(ErrorKind::invalid_argument, "grid height outside room");

  const double margin = std::max(clearance, 0.5 * spacing);
  auto axis_points = [&](double length) {
    std::vector<double> pts;
    const double span = length - 2.0 * margin;
    if (span < 0.0) return pts;
    const auto n = static_cast<long>(std::floor(span / spacing + 1e-9));
    const double first = margin + 0.5 * (span - (n - 1) * spacing);
    for (long i = 0; i < n; ++i) pts.push_back(first + i * spacing);
    return pts;
  };
  const auto xs = axis_points(scene.dims.x);
  const auto ys = axis_points(scene.dims.y);

  std::vector<Vec3> grid;
  const bool z_clear = height >= clearance && scene.dims.z - height >= clearance;
  if (z_clear) {
    for (double x : xs)
      for (double y : ys) {
        const Vec3 p{x, y, height};
        const bool blocked = std::any_of(scene.boxes.begin(), scene.boxes.end(), [&](const Box& b) {
          return b.contains(p) || box_distance(b, p) < clearance;
        });
        if (!blocked) grid.push_back(p);
      }
  }
  if (grid.empty())
    throw Error(ErrorKind::degenerate, "empty receiver grid: room too small for spacing " +
                                           fmt_num(spacing) + " m and clearance");
  return grid;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::parse, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to(Vec3 v) { return json::array({v.x, v.y, v.z}); }

BandArray bands_from(const json& j) {
  BandArray out{};
  if (j.is_number()) {
    out.fill(j.get<double>());
    return out;
  }
  if (!j.is_array() || j.size() != kNumBands)
    throw Error(ErrorKind::parse, "band values need exactly 6 entries (125-4000 Hz)");
  for (int b = 0; b < kNumBands; ++b) out[b] = j[b].get<double>();
  return out;
}

}  // namespace

RoomScene scene_from_json(const json& j) {
  try {
    RoomScene s;
    s.name = j.value("name", "room");
    s.dims = vec_from(j.at("dims"));
    s.speed_of_sound = j.value("speed_of_sound", 343.0);
    for (const auto& jm : j.at("materials")) {
      Material m;
      m.name = jm.at("name").get<std::string>();
      m.absorption = bands_from(jm.at("absorption"));
      m.scattering = jm.contains("scattering") ? bands_from(jm["scattering"]) : BandArray{};
      if (jm.contains("impedance")) {
        const auto& ji = jm["impedance"];
        if (!ji.is_array() || ji.size() != kNumBands)
          throw Error(ErrorKind::parse, "impedance needs 6 [re, im] pairs");
        std::array<std::complex<double>, kNumBands> z{};
        for (int b = 0; b < kNumBands; ++b) z[b] = {ji[b].at(0).get<double>(), ji[b].at(1).get<double>()};
        m.impedance = z;
      }
      s.materials.push_back(std::move(m));
    }
    const auto& jw = j.at("walls");
    if (jw.is_string()) {
      s.walls.fill(jw.get<std::string>());
    } else {
      if (jw.size() != 6) throw Error(ErrorKind::parse, "walls needs 6 material names (-x,+x,-y,+y,-z,+z)");
      for (int w = 0; w < 6; ++w) s.walls[w] = jw[w].get<std::string>();
    }
    for (const auto& jb : j.value("boxes", json::array()))
      s.boxes.push_back({vec_from(jb.at("min")), vec_from(jb.at("max")),
                         jb.at("material").get<std::string>()});
    int n = 0;
    for (const auto& js : j.at("sources")) {
      Source src;
      src.id = js.value("id", "s" + std::to_string(++n));
      src.position = vec_from(js.at("position"));
      if (js.contains("directivity")) {
        const auto& jd = js["directivity"];
        const auto kind = jd.value("kind", "omni");
        if (kind == "omni") src.directivity.kind = DirectivityKind::omni;
        else if (kind == "cardioid") src.directivity.kind = DirectivityKind::cardioid;
        else throw Error(ErrorKind::parse, "unknown directivity kind '" + kind + "'");
        if (jd.contains("orientation")) src.directivity.orientation = vec_from(jd["orientation"]);
      }
      s.sources.push_back(std::move(src));
    }
    n = 0;
    for (const auto& jr : j.at("receivers"))
      s.receivers.push_back({jr.value("id", "r" + std::to_string(++n)), vec_from(jr.at("position"))});
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("scene: ") + e.what());
  }
}

json scene_to_json(const RoomScene& s) {
  json j;
  j["name"] = s.name;
  j["dims"] = vec_to(s.dims);
  j["speed_of_sound"] = s.speed_of_sound;
  j["materials"] = json::array();
  for (const auto& m : s.materials) {
    json jm{{"name", m.name}, {"absorption", m.absorption}, {"scattering", m.scattering}};
    if (m.impedance) {
      json ji = json::array();
      for (const auto& z : *m.impedance) ji.push_back({z.real(), z.imag()});
      jm["impedance"] = ji;
    }
    j["materials"].push_back(jm);
  }
  j["walls"] = s.walls;
  j["boxes"] = json::array();
  for (const auto& b : s.boxes)
    j["boxes"].push_back({{"min", vec_to(b.min)}, {"max", vec_to(b.max)}, {"material", b.material}});
  j["sources"] = json::array();
  for (const auto& src : s.sources)
    j["sources"].push_back(
        {{"id", src.id},
         {"position", vec_to(src.position)},
         {"directivity",
          {{"kind", src.directivity.kind == DirectivityKind::omni ? "omni" : "cardioid"},
           {"orientation", vec_to(src.directivity.orientation)}}}});
  j["receivers"] = json::array();
  for (const auto& r : s.receivers)
    j["receivers"].push_back({{"id", r.id}, {"position", vec_to(r.position)}});
  return j;
}

RoomScene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "scene file not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

void save_scene(const RoomScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out << scene_to_json(scene).dump(2) << '\n';
}

RoomScene lab_room_scene(double alpha, double scattering) {
  RoomScene s;
  s.name = "lab";
  s.dims = {7.0, 4.5, 2.5};
  s.materials = {Material::uniform("lab_surface", alpha, scattering)};
  s.walls.fill("lab_surface");
  s.sources = {{"s1", {1.5, 1.5, 1.4}, {}}, {"s2", {1.5, 3.2, 1.4}, {}}};
  const Vec3 rcv[] = {{3.0, 1.0, 1.2}, {3.5, 2.2, 1.2}, {4.0, 3.5, 1.2}, {4.5, 1.5, 1.5},
                      {5.0, 2.8, 1.5}, {5.5, 0.8, 1.2}, {5.8, 3.9, 1.2}, {6.3, 2.0, 1.4},
                      {4.2, 0.6, 1.6}, {2.6, 3.8, 1.3}};
  int n = 0;
  for (const auto& p : rcv) {
    char id[8];
    std::snprintf(id, sizeof id, "r%02d", ++n);
    s.receivers.push_back({id, p});
  }
  return s;
}

double eyring_t60(double volume, double surface, double alpha) {
  return 0.161 * volume / (-surface * std::log(1.0 - alpha));
}

}  // namespace roomsim
