#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "roomsim/audio.hpp"
#include "roomsim/fdtd.hpp"
#include "roomsim/ism.hpp"
#include "roomsim/manifest.hpp"
#include "roomsim/raytrace.hpp"
#include "roomsim/results.hpp"
#include "roomsim/scene.hpp"
#include "roomsim/wpe.hpp"

namespace roomsim::pipeline {

struct PipelineConfig {
  std::vector<std::string> scenes;  // relative paths resolve against the config file
  std::vector<std::string> engines = {"ism"};
  ism::IsmConfig ism;
  rt::RtConfig rt;
  fdtd::FdtdConfig fdtd;
  std::string corpus = "corpus";
  std::string condition_id = "default";
  std::uint64_t seed = 0;
  double band_cap = 7000.0;      // Hz
  double target_rate = 16000.0;  // Hz
  wpe::DereverbEvalConfig dereverb;

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
};

struct SimulateSummary {
  std::size_t rirs = 0;
  std::vector<std::string> warnings;
};

// Renders every (source, receiver) pair of `scene` with `engine`, limits the
// band to the cap, resamples to the target rate, writes WAV + JSON sidecar
// under <out_dir>/rirs/<engine>/<room>/ and adds (or replaces) the entries in
// `manifest`, whose base_dir must be `out_dir`.
SimulateSummary simulate(const RoomScene& scene, Engine engine, const PipelineConfig& config,
                         const std::filesystem::path& out_dir, DatasetManifest& manifest,
                         bool dump_echograms = false);

// Band-limit and resample an engine output to the pipeline's common format.
Rir conform(Rir rir, double band_cap, double target_rate);

// Every *.wav in `dir`, sorted by file name, mono, resampled to `target_rate`.
// Throws Error(not_found) for a missing directory, Error(degenerate) when empty.
std::vector<AudioBuffer> load_corpus(const std::filesystem::path& dir, double target_rate);

// Rows of `update` replace rows of `base` with the same full key; new rows are
// appended in order.
std::vector<EvalResult> merge_results(std::vector<EvalResult> base,
                                      const std::vector<EvalResult>& update);

// Keeps only the entries of the given engine (all when empty).
DatasetManifest filter_engine(const DatasetManifest& manifest, const std::string& engine);

}  // namespace roomsim::pipeline
