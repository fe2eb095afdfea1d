#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "roomsim/audio.hpp"
#include "roomsim/scene.hpp"
#include "roomsim/voxel.hpp"

namespace roomsim::fdtd {

struct FdtdConfig {
  double dx = 0.05;                      // m
  double courant = 0.5773502691896258;   // 1/sqrt(3)
  double duration = 1.0;                 // s
  double pulse_center_hz = 0.0;          // differentiated-Gaussian peak; 0 = usable_fmax / 2
  std::optional<double> admittance;      // uniform beta override
  bool per_band = false;                 // one run per octave band, recombined
  bool compensate_pulse = true;          // divide out the source pulse spectrum
  double target_rate = 16000.0;
  double band_cap = 7000.0;              // Hz; band_limit = min(cap, usable_fmax)
  bool track_energy = false;

  void validate() const;
  nlohmann::json to_json() const;
  static FdtdConfig from_json(const nlohmann::json& j);
};

struct WaveRunStats {
  std::size_t cells = 0;
  std::size_t air_cells = 0;
  std::size_t steps = 0;
  double fs_grid = 0.0;
  double usable_fmax = 0.0;
  std::size_t source_offset_step = 0;  // first step after the pulse has ended
  double source_peak = 0.0;            // max |p| while the source was active
  std::vector<float> peak;             // max |p| per step
  std::vector<double> energy;          // discrete field energy per step (track_energy)

  nlohmann::json to_json() const;  // per-step series summarized
};

// Sample rate of the time stepping: c / (courant * dx).
double grid_rate(const FdtdConfig& config, double speed_of_sound = 343.0);

// 0.1 x grid rate.
double estimate_usable_bandwidth(const FdtdConfig& config, double speed_of_sound = 343.0);

// Source pulse sampled at the grid rate, peak-normalized.
std::vector<double> source_pulse(const FdtdConfig& config, double speed_of_sound = 343.0);

struct FdtdRun {
  std::vector<Rir> rirs;                 // compensated, low-passed, at target_rate
  std::vector<std::vector<double>> raw;  // grid-rate pressure scaled to 1/r, uncompensated
  WaveRunStats stats;
};

// Leapfrog run on `grid` with a soft source at the cell containing
// `source`. Raw signals are scaled so that a free-field pulse s(t) arrives
// as s(t - r/c) / r.
FdtdRun run_fdtd(const VoxelGrid& grid, Vec3 source, const std::vector<Vec3>& receivers,
                 const FdtdConfig& config, double speed_of_sound = 343.0);

// Voxelizes `scene` and renders one RIR per receiver for source `source_idx`.
// Per-band mode runs every band whose lower edge lies below the usable
// bandwidth and sums the band-filtered results.
std::vector<Rir> render_rirs_fdtd(const RoomScene& scene, std::size_t source_idx,
                                  const FdtdConfig& config, WaveRunStats* stats = nullptr);

}  // namespace roomsim::fdtd
