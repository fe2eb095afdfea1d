#include "roomsim/audio.hpp"

#include <cmath>
#include <cstdio>

#include "roomsim/error.hpp"

namespace roomsim {

void AudioBuffer::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
    throw Error(ErrorKind::invalid_argument, "sample rate must be positive");
  for (const auto& ch : channels) {
    if (ch.size() != length()) throw Error(ErrorKind::invalid_argument, "channels differ in length");
    for (double v : ch)
      if (!std::isfinite(v)) throw Error(ErrorKind::numerical, "non-finite sample");
  }
}

nlohmann::json provenance_to_json(const Rir& rir) {
  const auto& p = rir.provenance;
  return {{"engine", rir.engine},
          {"sample_rate", rir.sample_rate},
          {"band_limit", rir.band_limit},
          {"length", rir.samples.size()},
          {"scene", p.scene},
          {"source_id", p.source_id},
          {"receiver_id", p.receiver_id},
          {"config_hash", p.config_hash},
          {"seed", p.seed},
          {"tool_version", p.tool_version},
          {"extra", p.extra}};
}

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace roomsim
