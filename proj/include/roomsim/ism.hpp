#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "roomsim/audio.hpp"
#include "roomsim/scene.hpp"

namespace roomsim::ism {

struct IsmConfig {
  int max_order = 10;
  double sample_rate = 16000.0;
  double duration = 1.0;
  bool fractional_delay = true;
  bool air_absorption = false;
  // DC-blocking high-pass on the output; 0 disables. Real reflection factors
  // otherwise pile up a slowly decaying offset.
  double highpass_hz = 20.0;

  nlohmann::json to_json() const;
  static IsmConfig from_json(const nlohmann::json& j);
};

struct ImageSource {
  Vec3 position;
  std::array<int, 3> lattice{};  // n per axis
  std::array<int, 3> parity{};   // q per axis (1 = mirrored)
  int order = 0;
  std::array<int, 6> wall_hits{};  // reflections per wall, see Wall
  BandArray gain{};                // product of sqrt(1 - alpha) over all reflections
};

// Mirror lattice of `source_pos` in the empty shoebox, all images with total
// reflection count <= max_order (order-0 original included). Sorted by
// lattice index (n_x, n_y, n_z, q_x, q_y, q_z).
std::vector<ImageSource> compute_images(const RoomScene& scene, Vec3 source_pos, int max_order);

// Direction in which the original source emits toward `receiver` along the
// path of image `img` (the image-to-receiver direction mirrored back).
Vec3 emission_direction(const ImageSource& img, Vec3 receiver);

// Air attenuation in dB/km per octave band (20 degC, 50 % RH).
inline constexpr BandArray kAirAttenuationDbPerKm = {0.4, 1.0, 1.9, 3.7, 9.7, 32.8};

Rir render_rir_ism(const RoomScene& scene, std::size_t source_idx, std::size_t receiver_idx,
                   const IsmConfig& config);

}  // namespace roomsim::ism
