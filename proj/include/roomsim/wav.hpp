#pragma once

#include <filesystem>

#include "roomsim/audio.hpp"

namespace roomsim {

enum class WavFormat { pcm16, pcm24, float32 };

AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio,
               WavFormat format = WavFormat::float32);

// Mono float32 WAV plus a JSON sidecar (same stem, .json) with provenance.
void write_rir(const std::filesystem::path& wav_path, const Rir& rir);
Rir read_rir(const std::filesystem::path& wav_path);

}  // namespace roomsim
