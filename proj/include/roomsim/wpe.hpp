#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomsim/audio.hpp"
#include "roomsim/dsp.hpp"
#include "roomsim/manifest.hpp"
#include "roomsim/results.hpp"

namespace roomsim::wpe {

struct WpeConfig {
  int taps = 10;        // K
  int delay = 3;        // prediction delay in frames
  int iterations = 3;
  double psd_floor = 1e-10;  // relative to the mean input power per TF cell
  double loading = 1e-6;  // diagonal loading relative to trace / dim
  dsp::StftSpec stft;

  void validate() const;
  nlohmann::json to_json() const;
  static WpeConfig from_json(const nlohmann::json& j);
};

// Offline multichannel WPE. Returns the first channel dereverberated, same
// length as the input. `objective`, when given, receives
// sum(|d|^2 / lambda + log lambda) after each iteration.
AudioBuffer wpe_dereverb(const AudioBuffer& channels, const WpeConfig& config,
                         std::vector<double>* objective = nullptr);

inline constexpr std::size_t kMinSupports = 4;
inline constexpr std::size_t kMaxSupports = 12;

struct EvalGroup {
  ManifestEntry main;
  std::vector<ManifestEntry> supports;
};

// One group per entry, each entry taking the main role once; supports are
// drawn without replacement from the other entries of the same engine, room
// and condition. An empty `condition` groups every condition separately.
std::vector<EvalGroup> build_eval_groups(const DatasetManifest& manifest,
                                         const std::string& condition, std::size_t n_support,
                                         std::uint64_t seed);

// Speech convolved with the RIR truncated 2.5 ms after the direct peak, the
// first local maximum of |h| within 6 dB of the largest one.
inline constexpr double kDirectWindow = 2.5e-3;
std::vector<double> direct_path_reference(std::span<const double> speech, const Rir& rir);

struct DereverbEvalConfig {
  WpeConfig wpe;
  std::size_t n_support = 4;
  std::string condition;  // empty: all conditions
  // estoi / si_sdr score the WPE output; estoi_in / si_sdr_in score the
  // unprocessed first channel.
  std::vector<std::string> metrics = {"estoi", "si_sdr"};
  bool self_check = false;  // score the reference against itself
  std::string algorithm = "wpe";

  nlohmann::json to_json() const;
  static DereverbEvalConfig from_json(const nlohmann::json& j);
};

// Utterances are assigned round-robin starting at an offset derived from
// the seed. One result row per group and metric.
std::vector<EvalResult> run_dereverb_eval(const DatasetManifest& manifest,
                                          const std::vector<AudioBuffer>& corpus,
                                          const DereverbEvalConfig& config, std::uint64_t seed);

}  // namespace roomsim::wpe
