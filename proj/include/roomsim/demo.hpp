#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace roomsim::demo {

// Speech-like test signal: a sequence of syllables separated by pauses. Each
// syllable is a glottal pulse train (or noise for unvoiced ones) shaped by
// three formant resonators and a raised-cosine envelope. Peak-normalized to 0.5.
std::vector<double> synth_utterance(std::uint64_t seed, std::size_t index, double sample_rate,
                                    double duration);

struct DemoOptions {
  std::uint64_t seed = 0;
  std::size_t utterances = 24;
  double duration = 3.0;  // s per utterance
  double sample_rate = 16000.0;
};

// Writes scene.json (lab room, T60 about 0.6 s), corpus/*.wav, config.json
// and run_demo.sh into `dir`.
void write_demo_workspace(const std::filesystem::path& dir, const DemoOptions& options);

}  // namespace roomsim::demo
