#include "roomsim/voxel.hpp"

#include <algorithm>
#include <cmath>

#include "roomsim/error.hpp"

namespace roomsim {

bool VoxelGrid::is_solid(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return true;
  return solid[index(i, j, k)] != 0;
}

std::size_t VoxelGrid::air_cells() const {
  return static_cast<std::size_t>(std::count(solid.begin(), solid.end(), std::uint8_t{0}));
}

std::array<int, 3> VoxelGrid::snap(Vec3 p) const {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a)
    c[a] = std::clamp(static_cast<int>(std::floor(p[a] / dx)), 0, dims[a] - 1);
  if (is_solid(c[0], c[1], c[2]))
    throw Error(ErrorKind::validation, "position (" + std::to_string(p.x) + ", " +
                                           std::to_string(p.y) + ", " + std::to_string(p.z) +
                                           ") falls in a solid cell");
  return c;
}

namespace {

// Admittance at which the diffuse-field absorption of a real locally
// reacting wall peaks (about 0.951).
double peak_admittance() {
  double lo = 0.1, hi = 2.0;
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (absorption_from_admittance(m1) < absorption_from_admittance(m2)) lo = m1;
    else hi = m2;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double admittance_from_absorption(double alpha) {
  static const double beta_peak = peak_admittance();
  if (!(alpha > 0.0)) return 0.0;
  if (alpha >= absorption_from_admittance(beta_peak)) return beta_peak;
  double lo = 0.0, hi = beta_peak;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (absorption_from_admittance(mid) < alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Paris integral of 1 - |R(theta)|^2 for a real admittance, in closed form.
double absorption_from_admittance(double beta) {
  if (!(beta > 0.0)) return 0.0;
  return 8.0 * beta * (1.0 + beta / (1.0 + beta) - 2.0 * beta * std::log1p(1.0 / beta));
}

double material_admittance(const Material& m, std::optional<int> band) {
  const int lo = band ? *band : 0;
  const int hi = band ? *band + 1 : kNumBands;
  double sum = 0.0;
  for (int b = lo; b < hi; ++b) {
    if (m.impedance) {
      const auto z = (*m.impedance)[b];
      sum += std::abs(z) > 0.0 ? std::max(0.0, (1.0 / z).real()) : 0.0;
    } else {
      sum += admittance_from_absorption(m.absorption[b]);
    }
  }
  return sum / (hi - lo);
}

VoxelGrid voxelize(const RoomScene& scene, double dx, const AdmittanceSpec& admittance) {
  const double min_dim = std::min({scene.dims.x, scene.dims.y, scene.dims.z});
  if (!(dx > 0.0)) throw Error(ErrorKind::invalid_argument, "voxel size must be > 0");
  if (dx > min_dim / 4.0 + 1e-12)
    throw Error(ErrorKind::invalid_argument,
                "voxel size " + std::to_string(dx) + " m too coarse (max " +
                    std::to_string(min_dim / 4.0) + " m)");

  auto beta_of = [&](const std::string& material) {
    if (admittance.uniform) return *admittance.uniform;
    return material_admittance(scene.material(material), admittance.band);
  };
  std::array<float, 6> wall_beta{};
  for (int w = 0; w < 6; ++w) wall_beta[w] = static_cast<float>(beta_of(scene.walls[w]));
  std::vector<float> box_beta;
  for (const auto& b : scene.boxes) box_beta.push_back(static_cast<float>(beta_of(b.material)));

  VoxelGrid g;
  g.dx = dx;
  for (int a = 0; a < 3; ++a)
    g.dims[a] = static_cast<int>(std::ceil(scene.dims[a] / dx - 1e-9));
  const std::size_t n = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
  g.solid.assign(n, 0);
  std::vector<int> owner(n, -1);  // box index for solid cells inside a box

  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const Vec3 c = g.center(i, j, k);
        const std::size_t idx = g.index(i, j, k);
        if (!scene.inside_room(c)) {
          g.solid[idx] = 1;
          continue;
        }
        for (std::size_t b = 0; b < scene.boxes.size(); ++b)
          if (scene.boxes[b].contains(c)) {
            g.solid[idx] = 1;
            owner[idx] = static_cast<int>(b);
            break;
          }
      }

  g.face_beta.assign(n, {-1.f, -1.f, -1.f, -1.f, -1.f, -1.f});
  static constexpr int off[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  for (int i = 0; i < g.dims[0]; ++i)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int k = 0; k < g.dims[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        if (g.solid[idx]) continue;
        for (int f = 0; f < 6; ++f) {
          const int ni = i + off[f][0], nj = j + off[f][1], nk = k + off[f][2];
          if (!g.is_solid(ni, nj, nk)) continue;
          const bool in_range = ni >= 0 && nj >= 0 && nk >= 0 && ni < g.dims[0] &&
                                nj < g.dims[1] && nk < g.dims[2];
          const int box = in_range ? owner[g.index(ni, nj, nk)] : -1;
          g.face_beta[idx][f] = box >= 0 ? box_beta[box] : wall_beta[f];
        }
      }
  return g;
}

}  // namespace roomsim
