#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "roomsim/scene.hpp"

namespace roomsim {

enum class Engine { measured, ism, rt, fdtd };

std::string engine_name(Engine e);
Engine parse_engine(const std::string& name);

struct ManifestEntry {
  std::string rir_path;  // relative paths resolve against the manifest's directory
  Engine engine = Engine::measured;
  std::string room_id;
  std::string condition_id;
  std::string source_id;
  std::string receiver_id;
  Vec3 source_pos;
  Vec3 receiver_pos;
  double true_distance = 0.0;

  std::string key() const;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  friend bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    return a.entries == b.entries;
  }
};

inline constexpr double kDistanceTolerance = 1e-6;

// Distance and key-uniqueness checks; throws Error(validation).
void validate_manifest(const DatasetManifest& manifest);

DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace roomsim
