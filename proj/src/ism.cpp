#include "roomsim/ism.hpp"

#include <algorithm>
#include <cmath>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/parallel.hpp"

namespace roomsim::ism {

nlohmann::json IsmConfig::to_json() const {
  return {{"max_order", max_order},
          {"sample_rate", sample_rate},
          {"duration", duration},
          {"fractional_delay", fractional_delay},
          {"air_absorption", air_absorption},
          {"highpass_hz", highpass_hz}};
}

IsmConfig IsmConfig::from_json(const nlohmann::json& j) {
  IsmConfig c;
  c.max_order = j.value("max_order", c.max_order);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.duration = j.value("duration", c.duration);
  c.fractional_delay = j.value("fractional_delay", c.fractional_delay);
  c.air_absorption = j.value("air_absorption", c.air_absorption);
  c.highpass_hz = j.value("highpass_hz", c.highpass_hz);
  return c;
}

namespace {

struct AxisImage {
  int n;
  int q;
  int order;  // |2n - q|
};

std::vector<AxisImage> axis_images(int max_order) {
  std::vector<AxisImage> out;
  const int reach = (max_order + 1) / 2 + 1;
  for (int n = -reach; n <= reach; ++n)
    for (int q = 0; q <= 1; ++q) {
      const int k = std::abs(2 * n - q);
      if (k <= max_order) out.push_back({n, q, k});
    }
  return out;
}

}  // namespace

std::vector<ImageSource> compute_images(const RoomScene& scene, Vec3 source_pos, int max_order) {
  if (!scene.boxes.empty())
    throw Error(ErrorKind::incompatible, "ISM supports empty shoeboxes only (scene '" + scene.name +
                                             "' has " + std::to_string(scene.boxes.size()) +
                                             " interior boxes)");
  if (max_order < 0) throw Error(ErrorKind::invalid_argument, "max_order must be >= 0");

  std::array<BandArray, 6> beta{};
  for (int w = 0; w < 6; ++w) {
    const auto& m = scene.wall_material(w);
    for (int b = 0; b < kNumBands; ++b) beta[w][b] = std::sqrt(std::max(0.0, 1.0 - m.absorption[b]));
  }

  const auto axis = axis_images(max_order);
  std::vector<ImageSource> images;
  for (const auto& ax : axis)
    for (const auto& ay : axis) {
      if (ax.order + ay.order > max_order) continue;
      for (const auto& az : axis) {
        if (ax.order + ay.order + az.order > max_order) continue;
        ImageSource img;
        const AxisImage* per[3] = {&ax, &ay, &az};
        for (int a = 0; a < 3; ++a) {
          const auto& ai = *per[a];
          img.lattice[a] = ai.n;
          img.parity[a] = ai.q;
          img.position[a] = (1 - 2 * ai.q) * source_pos[a] + 2.0 * ai.n * scene.dims[a];
          img.wall_hits[2 * a] = std::abs(ai.n - ai.q);
          img.wall_hits[2 * a + 1] = std::abs(ai.n);
        }
        img.order = ax.order + ay.order + az.order;
        for (int b = 0; b < kNumBands; ++b) {
          double g = 1.0;
          for (int w = 0; w < 6; ++w)
            for (int h = 0; h < img.wall_hits[w]; ++h) g *= beta[w][b];
          img.gain[b] = g;
        }
        images.push_back(img);
      }
    }
  // the loop nest above emits n-major order; sort by (n, q) lexicographically
  std::sort(images.begin(), images.end(), [](const ImageSource& a, const ImageSource& b) {
    if (a.lattice != b.lattice) return a.lattice < b.lattice;
    return a.parity < b.parity;
  });
  return images;
}

Vec3 emission_direction(const ImageSource& img, Vec3 receiver) {
  Vec3 d = receiver - img.position;
  for (int a = 0; a < 3; ++a)
    if (img.parity[a]) d[a] = -d[a];
  return d;
}

Rir render_rir_ism(const RoomScene& scene, std::size_t source_idx, std::size_t receiver_idx,
                   const IsmConfig& config) {
  if (source_idx >= scene.sources.size() || receiver_idx >= scene.receivers.size())
    throw Error(ErrorKind::invalid_argument, "source/receiver index out of range");
  if (!(config.sample_rate > 0.0) || !(config.duration > 0.0))
    throw Error(ErrorKind::invalid_argument, "sample_rate and duration must be positive");
  if (!scene.boxes.empty())
    throw Error(ErrorKind::incompatible, "ISM supports empty shoeboxes only (scene '" + scene.name +
                                             "' has interior boxes)");
  require_valid(scene);

  const auto& src = scene.sources[source_idx];
  const Vec3 rcv = scene.receivers[receiver_idx].position;
  const double c = scene.speed_of_sound;
  const double fs = config.sample_rate;
  const auto len = static_cast<std::size_t>(std::lround(config.duration * fs));
  const double direct_delay = distance(src.position, rcv) / c;
  if (direct_delay * fs >= static_cast<double>(len))
    throw Error(ErrorKind::invalid_argument,
                "duration " + std::to_string(config.duration) +
                    " s is shorter than the direct-path delay " + std::to_string(direct_delay) + " s");

  const auto images = compute_images(scene, src.position, config.max_order);
  const double reach = static_cast<double>(len) + dsp::kFractionalDelayTaps / 2 + 1.0;

  struct Arrival {
    double position;  // in samples
    BandArray amp;
  };
  std::vector<Arrival> arrivals;
  arrivals.reserve(images.size());
  bool band_uniform = true;
  for (const auto& img : images) {
    const double d = distance(img.position, rcv);
    const double pos = d / c * fs;
    if (pos >= reach) continue;
    const double g = src.directivity.gain(emission_direction(img, rcv));
    Arrival a{pos, {}};
    bool any = false;
    for (int b = 0; b < kNumBands; ++b) {
      double amp = img.gain[b] * g / d;
      if (config.air_absorption)
        amp *= std::pow(10.0, -kAirAttenuationDbPerKm[b] * d / 1000.0 / 20.0);
      a.amp[b] = amp;
      any = any || amp != 0.0;
    }
    if (!any) continue;
    for (int b = 1; b < kNumBands; ++b) band_uniform = band_uniform && a.amp[b] == a.amp[0];
    arrivals.push_back(a);
  }

  const int taps = config.fractional_delay ? dsp::kFractionalDelayTaps : 1;
  auto render_band = [&](int b) {
    std::vector<double> train(len, 0.0);
    for (const auto& a : arrivals) {
      const double pos = config.fractional_delay ? a.position : std::round(a.position);
      dsp::add_fractional_impulse(train, pos, a.amp[b], taps);
    }
    return train;
  };

  Rir rir;
  rir.sample_rate = fs;
  rir.engine = "ism";
  rir.band_limit = fs / 2.0;
  if (band_uniform) {
    rir.samples = render_band(0);
  } else {
    std::array<std::vector<double>, kNumBands> bands;
    parallel_for(kNumBands, [&](std::int64_t b) { bands[b] = render_band(static_cast<int>(b)); });
    rir.samples = dsp::octave_filterbank(fs).synthesize(bands);
  }
  if (config.highpass_hz > 0.0) rir.samples = dsp::highpass_biquad(rir.samples, fs, config.highpass_hz);
  rir.provenance.scene = scene.name;
  rir.provenance.source_id = src.id;
  rir.provenance.receiver_id = scene.receivers[receiver_idx].id;
  rir.provenance.config_hash = config_hash(config.to_json());
  rir.provenance.tool_version = kToolVersion;
  rir.provenance.extra = {{"config", config.to_json()}, {"images", arrivals.size()}};
  return rir;
}

}  // namespace roomsim::ism
