#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "roomsim/audio.hpp"
#include "roomsim/random.hpp"
#include "roomsim/scene.hpp"

namespace roomsim::rt {

struct RtConfig {
  std::uint64_t n_rays = 100000;
  double max_time = 1.0;        // s
  double bin_width = 1e-3;      // s
  std::uint64_t seed = 0;
  double receiver_radius = 0.25;  // m
  double energy_floor_db = -60.0;  // relative to the emitted ray energy

  void validate() const;
  nlohmann::json to_json() const;
  static RtConfig from_json(const nlohmann::json& j);
};

// Energies are squared-pressure units, per band and broadband-equivalent:
// a direct path of length r from an on-axis source deposits 1/r^2 in every
// band, matching the 1/r amplitude of the ISM.
struct ReceiverEchogram {
  std::array<std::vector<double>, kNumBands> energy;  // [band][bin]
  double direct_time = -1.0;                          // s; < 0 when occluded
  BandArray direct_energy{};                          // already included in energy
};

struct Echogram {
  double bin_width = 1e-3;
  std::size_t num_bins = 0;
  std::vector<ReceiverEchogram> receivers;

  double broadband(std::size_t receiver, std::size_t bin) const;  // mean over bands
};

// Bookkeeping over all rays: emitted + splitting_adjustment = absorbed + truncated.
// The adjustment is the net energy change from reweighting rays after the
// specular/diffuse choice when scattering differs across bands.
struct EnergyLedger {
  double emitted = 0.0;
  double absorbed = 0.0;
  double truncated = 0.0;  // left in flight at max_time or the energy floor
  double splitting_adjustment = 0.0;

  double imbalance() const;  // relative
};

struct TraceResult {
  Echogram echogram;
  EnergyLedger ledger;
};

TraceResult trace(const RoomScene& scene, std::size_t source_idx, const RtConfig& config);

// Surface interaction handed to diffuse_rain.
struct SurfaceHit {
  Vec3 point;
  Vec3 normal;      // unit, pointing into the air
  double time = 0;  // s, path time at the hit
  BandArray diffuse_energy{};
  int box = -1;     // index of the box hit, -1 for a room wall
};

struct Deposit {
  std::size_t receiver;
  double time;  // arrival time at the receiver, s
  BandArray energy{};
};

// Lambertian deposit from one hit into every visible receiver: energy x
// (fraction of a cosine lobe captured by the receiver sphere) / (pi R^2).
std::vector<Deposit> diffuse_rain(const SurfaceHit& hit, const RoomScene& scene,
                                  double receiver_radius);

// True when the open segment a-b does not pass through any interior box.
bool visible(const RoomScene& scene, Vec3 a, Vec3 b);

// Noise-shaped RIR for one receiver. One Gaussian noise sequence is split by
// the octave filterbank and every band is scaled per bin by
// sqrt(entry / noise energy in the bin), so equal entries across bands give
// back the noise carrying exactly that energy. The direct arrival is a
// band-limited pulse.
Rir echogram_to_rir(const Echogram& echogram, std::size_t receiver, std::uint64_t seed,
                    double sample_rate);

}  // namespace roomsim::rt
