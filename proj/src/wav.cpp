#include "roomsim/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "roomsim/error.hpp"

namespace roomsim {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}
void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "audio file not found: " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), {});
  const auto bad = [&](const std::string& why) {
    return Error(ErrorKind::parse, path.string() + ": " + why);
  };
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0)
    throw bad("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* samples = nullptr;
  std::size_t sample_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const unsigned char* chunk = data.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > data.size() && std::memcmp(chunk, "data", 4) != 0) throw bad("truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw bad("short fmt chunk");
      format = le16(data.data() + body);
      channels = le16(data.data() + body + 2);
      rate = le32(data.data() + body + 4);
      bits = le16(data.data() + body + 14);
      if (format == kFormatExtensible && size >= 26) format = le16(data.data() + body + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      samples = data.data() + body;
      sample_bytes = std::min<std::size_t>(size, data.size() - body);
    }
    pos = body + size + (size & 1);
  }
  if (!samples || channels == 0 || rate == 0) throw bad("missing fmt or data chunk");

  const std::size_t width = bits / 8;
  const bool ok = (format == kFormatPcm && (bits == 16 || bits == 24)) ||
                  (format == kFormatFloat && bits == 32);
  if (!ok) throw bad("unsupported sample format (PCM16, PCM24 or float32 only)");
  const std::size_t frames = sample_bytes / (width * channels);

  AudioBuffer out;
  out.sample_rate = rate;
  out.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = samples + (i * channels + c) * width;
      double v = 0.0;
      if (format == kFormatFloat) {
        float f;
        std::uint32_t u = le32(p);
        std::memcpy(&f, &u, 4);
        v = f;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
        if (s & 0x800000) s -= 0x1000000;
        v = s / 8388608.0;
      }
      out.channels[c][i] = v;
    }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavFormat format) {
  audio.validate();
  const std::uint16_t channels = static_cast<std::uint16_t>(audio.num_channels());
  if (channels == 0) throw Error(ErrorKind::invalid_argument, "no channels to write");
  const std::uint16_t bits = format == WavFormat::pcm16 ? 16 : (format == WavFormat::pcm24 ? 24 : 32);
  const std::uint16_t width = bits / 8;
  const std::size_t frames = audio.length();
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames * channels * width);
  const std::uint32_t rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));

  std::vector<unsigned char> b;
  b.reserve(44 + data_size);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  put32(b, 36 + data_size);
  b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(b, 16);
  put16(b, format == WavFormat::float32 ? kFormatFloat : kFormatPcm);
  put16(b, channels);
  put32(b, rate);
  put32(b, rate * channels * width);
  put16(b, static_cast<std::uint16_t>(channels * width));
  put16(b, bits);
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  put32(b, data_size);
  for (std::size_t i = 0; i < frames; ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = audio.channels[c][i];
      if (format == WavFormat::float32) {
        const float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put32(b, u);
      } else if (format == WavFormat::pcm16) {
        const auto s = static_cast<std::int32_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
        put16(b, static_cast<std::uint16_t>(s));
      } else {
        const auto s = static_cast<std::int32_t>(std::lround(std::clamp(v, -1.0, 1.0) * 8388607.0));
        b.push_back(static_cast<unsigned char>(s & 0xFF));
        b.push_back(static_cast<unsigned char>((s >> 8) & 0xFF));
        b.push_back(static_cast<unsigned char>((s >> 16) & 0xFF));
      }
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

void write_rir(const std::filesystem::path& wav_path, const Rir& rir) {
  write_wav(wav_path, rir.as_buffer(), WavFormat::float32);
  auto sidecar = wav_path;
  sidecar.replace_extension(".json");
  std::ofstream out(sidecar);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + sidecar.string());
  out << provenance_to_json(rir).dump(2) << '\n';
}

Rir read_rir(const std::filesystem::path& wav_path) {
  const AudioBuffer audio = read_wav(wav_path);
  if (audio.num_channels() != 1)
    throw Error(ErrorKind::parse, wav_path.string() + ": RIR files must be mono");
  Rir rir;
  rir.samples = audio.samples();
  rir.sample_rate = audio.sample_rate;
  rir.band_limit = audio.sample_rate / 2;
  auto sidecar = wav_path;
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (in) {
    try {
      nlohmann::json j;
      in >> j;
      rir.engine = j.value("engine", "");
      rir.band_limit = j.value("band_limit", rir.band_limit);
      rir.provenance.scene = j.value("scene", "");
      rir.provenance.source_id = j.value("source_id", "");
      rir.provenance.receiver_id = j.value("receiver_id", "");
      rir.provenance.config_hash = j.value("config_hash", "");
      rir.provenance.seed = j.value("seed", std::uint64_t{0});
      rir.provenance.tool_version = j.value("tool_version", "");
      if (j.contains("extra")) rir.provenance.extra = j["extra"];
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, sidecar.string() + ": " + e.what());
    }
  }
  return rir;
}

}  // namespace roomsim
