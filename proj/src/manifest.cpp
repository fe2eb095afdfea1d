#include "roomsim/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "roomsim/error.hpp"

namespace roomsim {

using nlohmann::json;

std::string engine_name(Engine e) {
  switch (e) {
    case Engine::measured: return "measured";
    case Engine::ism: return "ism";
    case Engine::rt: return "rt";
    case Engine::fdtd: return "fdtd";
  }
  return "?";
}

Engine parse_engine(const std::string& name) {
  if (name == "measured") return Engine::measured;
  if (name == "ism") return Engine::ism;
  if (name == "rt") return Engine::rt;
  if (name == "fdtd") return Engine::fdtd;
  throw Error(ErrorKind::parse, "unknown engine '" + name + "' (measured|ism|rt|fdtd)");
}

std::string ManifestEntry::key() const {
  return engine_name(engine) + "/" + room_id + "/" + condition_id + "/" + source_id + "/" +
         receiver_id;
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.rir_path);
  return p.is_absolute() ? p : base_dir / p;
}

void validate_manifest(const DatasetManifest& manifest) {
  std::set<std::string> keys;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    const double d = distance(e.source_pos, e.receiver_pos);
    const double delta = std::abs(d - e.true_distance);
    if (!(delta <= kDistanceTolerance))
      throw Error(ErrorKind::validation,
                  "manifest entry " + std::to_string(i) + " (" + e.key() +
                      "): distance mismatch, true_distance " + std::to_string(e.true_distance) +
                      " vs geometric " + std::to_string(d) + " (delta " + std::to_string(delta) +
                      " m)");
    if (!keys.insert(e.key()).second)
      throw Error(ErrorKind::validation,
                  "manifest entry " + std::to_string(i) + ": duplicate key " + e.key());
  }
}

namespace {
Vec3 vec_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::parse, "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
}  // namespace

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.rir_path = je.at("rir_path").get<std::string>();
      e.engine = parse_engine(je.at("engine").get<std::string>());
      e.room_id = je.at("room_id").get<std::string>();
      e.condition_id = je.at("condition_id").get<std::string>();
      e.source_id = je.at("source_id").get<std::string>();
      e.receiver_id = je.at("receiver_id").get<std::string>();
      e.source_pos = vec_from(je.at("source_pos"));
      e.receiver_pos = vec_from(je.at("receiver_pos"));
      e.true_distance = je.at("true_distance").get<double>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::parse, std::string("manifest: ") + ex.what());
  }
  validate_manifest(m);
  return m;
}

json manifest_to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries)
    entries.push_back({{"rir_path", e.rir_path},
                       {"engine", engine_name(e.engine)},
                       {"room_id", e.room_id},
                       {"condition_id", e.condition_id},
                       {"source_id", e.source_id},
                       {"receiver_id", e.receiver_id},
                       {"source_pos", {e.source_pos.x, e.source_pos.y, e.source_pos.z}},
                       {"receiver_pos", {e.receiver_pos.x, e.receiver_pos.y, e.receiver_pos.z}},
                       {"true_distance", e.true_distance}});
  return {{"entries", entries}};
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "manifest not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  auto m = manifest_from_json(j);
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

}  // namespace roomsim
