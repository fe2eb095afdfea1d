#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "roomsim/audio.hpp"
#include "roomsim/manifest.hpp"
#include "roomsim/results.hpp"

namespace roomsim::metrics {

enum class Sentinel { finite, plus_infinity };

struct MetricValue {
  std::string name;
  double value = 0.0;
  Sentinel sentinel = Sentinel::finite;

  // value as stored in result sets: +inf for the sentinel
  double stored() const;
};

// Residuals below this fraction of the projected target energy count as
// zero (reported as the +inf sentinel): about 200 dB.
inline constexpr double kSiSdrZeroResidual = 1e-20;

MetricValue si_sdr(std::span<const double> estimate, std::span<const double> reference);
MetricValue si_sdr(const AudioBuffer& estimate, const AudioBuffer& reference);

struct EstoiParams {
  double sample_rate = 10000.0;
  std::size_t frame = 256;
  std::size_t fft_size = 512;
  std::size_t hop = 128;
  int bands = 15;
  double min_freq = 150.0;
  std::size_t segment = 30;
  double dynamic_range_db = 40.0;
};

// Extended STOI. Both inputs are resampled to 10 kHz, silent clean frames are
// removed, and the score is the mean normalized band-envelope correlation
// over sliding 30-frame segments, clipped to [-1, 1].
MetricValue estoi(std::span<const double> clean, std::span<const double> processed,
                  double sample_rate);
MetricValue estoi(const AudioBuffer& clean, const AudioBuffer& processed);

MetricValue distance_error(double predicted_m, double true_m);

// Reads an external score file (`engine,room_id,condition_id,source_id,
// receiver_id,metric,value`) and keeps the rows whose metric equals
// `metric_name`. Keys must resolve against `manifest`. `pesq` rows must lie
// in [1, 5]; `estoi` in [-1, 1]; `dist_err` >= 0. Rows with metric
// `distance` are source-distance predictions and are converted to `dist_err`
// against the manifest's true distance.
std::vector<EvalResult> ingest_external_scores(const std::filesystem::path& path,
                                               const std::string& metric_name,
                                               const DatasetManifest& manifest,
                                               const std::string& algorithm);

}  // namespace roomsim::metrics
