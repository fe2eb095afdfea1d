#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace roomsim {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend Vec3 operator*(Vec3 a, double s) { return s * a; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }

// Octave bands shared by every engine. Values outside 125-4000 Hz are held
// at the edge bands.
inline constexpr int kNumBands = 6;
inline constexpr std::array<double, kNumBands> kBandCenters = {125.0, 250.0, 500.0,
                                                               1000.0, 2000.0, 4000.0};
using BandArray = std::array<double, kNumBands>;

// Minimum distance between any source/receiver and any surface.
inline constexpr double kDefaultClearance = 0.1;

struct Material {
  std::string name;
  BandArray absorption{};
  BandArray scattering{};
  // Normalized specific impedance per band; only its real admittance is used
  // by the wave solver.
  std::optional<std::array<std::complex<double>, kNumBands>> impedance;

  static Material uniform(std::string name, double alpha, double scatter = 0.0);
};

enum class DirectivityKind { omni, cardioid };

struct Directivity {
  DirectivityKind kind = DirectivityKind::omni;
  Vec3 orientation{1.0, 0.0, 0.0};

  // Pressure gain toward unit direction `dir`: 1 for omni, (1+cos)/2 for cardioid.
  double gain(Vec3 dir) const;
};

// Index order of the six shoebox walls.
enum Wall : int { wall_neg_x = 0, wall_pos_x, wall_neg_y, wall_pos_y, wall_neg_z, wall_pos_z };
const char* wall_name(int wall);

struct Box {
  Vec3 min;
  Vec3 max;
  std::string material;

  bool contains(Vec3 p) const {
    return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y && p.z > min.z &&
           p.z < max.z;
  }
  double volume() const { return (max.x - min.x) * (max.y - min.y) * (max.z - min.z); }
};

struct Source {
  std::string id;
  Vec3 position;
  Directivity directivity;
};

struct Receiver {
  std::string id;
  Vec3 position;
};

struct RoomScene {
  std::string name = "room";
  Vec3 dims;
  std::vector<Material> materials;
  std::array<std::string, 6> walls;  // material names, see Wall
  std::vector<Box> boxes;
  std::vector<Source> sources;
  std::vector<Receiver> receivers;
  double speed_of_sound = 343.0;

  const Material& material(const std::string& name) const;
  const Material& wall_material(int wall) const { return material(walls[wall]); }

  double volume() const;
  double surface_area() const;
  bool inside_room(Vec3 p) const;
  bool inside_solid(Vec3 p) const;
};

struct SceneIssue {
  std::string location;
  std::string message;
};

std::vector<SceneIssue> validate_scene(const RoomScene& scene,
                                       double clearance = kDefaultClearance);

// Throws Error(validation) listing every issue.
void require_valid(const RoomScene& scene);

// Rectangular grid at `height`. Each axis span [margin, L - margin], with
// margin = max(clearance, spacing/2), is split into floor(span/spacing)
// cells of width `spacing`; points sit at the cell centres. Points closer
// than the clearance to a box are dropped. Ordering is x-major.
std::vector<Vec3> make_receiver_grid(const RoomScene& scene, double spacing, double height,
                                     double clearance = kDefaultClearance);

RoomScene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const RoomScene& scene);
RoomScene load_scene(const std::filesystem::path& path);
void save_scene(const RoomScene& scene, const std::filesystem::path& path);

// Stand-in for the 7 x 4.5 x 2.5 m lab room with two sources and ten receivers.
RoomScene lab_room_scene(double alpha = 0.3, double scattering = 0.1);

// Eyring reverberation time for uniform absorption.
double eyring_t60(double volume, double surface, double alpha);

}  // namespace roomsim
