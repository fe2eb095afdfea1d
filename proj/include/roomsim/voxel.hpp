#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "roomsim/scene.hpp"

namespace roomsim {

// Cell-centred rasterization of a scene. Boundary faces carry the real
// specific admittance of the surface they touch.
struct VoxelGrid {
  double dx = 0.0;
  std::array<int, 3> dims{};
  std::vector<std::uint8_t> solid;             // 1 = solid
  std::vector<std::array<float, 6>> face_beta;  // per cell, faces -x,+x,-y,+y,-z,+z; <0 = air neighbour

  std::size_t size() const { return solid.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }
  Vec3 center(int i, int j, int k) const {
    return {(i + 0.5) * dx, (j + 0.5) * dx, (k + 0.5) * dx};
  }
  bool is_solid(int i, int j, int k) const;  // out-of-range counts as solid
  std::size_t air_cells() const;
  double air_volume() const { return static_cast<double>(air_cells()) * dx * dx * dx; }

  // Nearest air cell to `p`; throws if the containing cell is solid.
  std::array<int, 3> snap(Vec3 p) const;
};

// Per-surface admittance used by voxelize. By default it is derived from the
// material: Re(1/zeta) averaged over bands when an impedance is given,
// otherwise the admittance whose diffuse-field absorption equals the mean
// absorption. Targets above the attainable peak (about 0.951) saturate.
// With `band` set, only that band's absorption/impedance is used.
double material_admittance(const Material& m, std::optional<int> band = std::nullopt);
double admittance_from_absorption(double alpha);
double absorption_from_admittance(double beta);

struct AdmittanceSpec {
  std::optional<double> uniform;  // same admittance on every surface
  std::optional<int> band;        // derive from one octave band
};

VoxelGrid voxelize(const RoomScene& scene, double dx, const AdmittanceSpec& admittance = {});

}  // namespace roomsim
