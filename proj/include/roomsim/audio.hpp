#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace roomsim {

// Channel-major audio. A mono buffer has exactly one channel.
struct AudioBuffer {
  std::vector<std::vector<double>> channels;
  double sample_rate = 0.0;

  static AudioBuffer mono(std::vector<double> samples, double sample_rate) {
    AudioBuffer b;
    b.channels.push_back(std::move(samples));
    b.sample_rate = sample_rate;
    return b;
  }

  std::size_t num_channels() const { return channels.size(); }
  std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
  const std::vector<double>& samples() const { return channels.at(0); }
  std::vector<double>& samples() { return channels.at(0); }
  double duration() const { return sample_rate > 0 ? length() / sample_rate : 0.0; }

  // Throws Error(invalid_argument) on non-finite samples, ragged channels or
  // a non-positive rate.
  void validate() const;
};

struct Provenance {
  std::string scene;
  std::string source_id;
  std::string receiver_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
  nlohmann::json extra = nlohmann::json::object();
};

struct Rir {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::string engine;
  double band_limit = 0.0;  // Hz
  Provenance provenance;

  AudioBuffer as_buffer() const { return AudioBuffer::mono(samples, sample_rate); }
};

nlohmann::json provenance_to_json(const Rir& rir);

inline constexpr const char* kToolVersion = "roomsim 0.3.0";

// 64-bit FNV-1a of a canonical JSON dump, rendered as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace roomsim
