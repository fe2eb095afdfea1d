#include "roomsim/demo.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "roomsim/error.hpp"
#include "roomsim/random.hpp"
#include "roomsim/scene.hpp"
#include "roomsim/wav.hpp"

namespace roomsim::demo {

namespace {

constexpr double kPi = std::numbers::pi;

class Noise {
 public:
  explicit Noise(std::uint64_t seed) : rng_(seed) {}
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gauss() {
    const double u1 = 1.0 - uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * uniform());
  }

 private:
  std::mt19937_64 rng_;
};

struct Resonator {
  double a1, a2, y1 = 0.0, y2 = 0.0;
  Resonator(double freq, double bandwidth, double fs) {
    const double r = std::exp(-kPi * bandwidth / fs);
    a1 = -2.0 * r * std::cos(2.0 * kPi * freq / fs);
    a2 = r * r;
  }
  double operator()(double x) {
    const double y = x - a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

}  // namespace

std::vector<double> synth_utterance(std::uint64_t seed, std::size_t index, double fs,
                                    double duration) {
  Noise rng(splitmix64(seed) ^ splitmix64(index + 1));
  const auto len = static_cast<std::size_t>(std::lround(duration * fs));
  std::vector<double> out(len, 0.0);
  auto t = static_cast<std::size_t>(rng.uniform(0.05, 0.15) * fs);
  const auto tail = static_cast<std::size_t>(0.1 * fs);

  while (t + tail < len) {
    const auto n = std::min(len - tail - t, static_cast<std::size_t>(rng.uniform(0.12, 0.30) * fs));
    const bool voiced = rng.uniform() < 0.8;
    const double f0 = rng.uniform(100.0, 220.0);
    const double amp = rng.uniform(0.3, 1.0);
    Resonator f1(rng.uniform(300.0, 800.0), 80.0, fs);
    Resonator f2(rng.uniform(900.0, 2300.0), 120.0, fs);
    Resonator f3(rng.uniform(2400.0, 3200.0), 160.0, fs);
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = 0.02 * rng.gauss();
      if (voiced) {
        phase += f0 * (1.0 + 0.02 * std::sin(2.0 * kPi * 5.0 * i / fs)) / fs;
        if (phase >= 1.0) {
          phase -= 1.0;
          x += 1.0;
        }
      } else {
        x = 0.3 * rng.gauss();
      }
      const double env = std::pow(std::sin(kPi * (i + 0.5) / n), 2.0);
      out[t + i] += amp * env * (f1(x) + 0.5 * f2(x) + 0.25 * f3(x));
    }
    t += n;
    t += static_cast<std::size_t>((rng.uniform() < 0.15 ? rng.uniform(0.3, 0.5) : rng.uniform(0.03, 0.2)) * fs);
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : out) v *= 0.5 / peak;
  return out;
}

void write_demo_workspace(const std::filesystem::path& dir, const DemoOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpus");

  // Absorption 0.23 puts the image-source T60 at about 0.6 s. Specular
  // shoebox decays run some 45 % longer than Eyring's 0.40 s here.
  save_scene(lab_room_scene(0.23, 0.1), dir / "scene.json");

  for (std::size_t i = 0; i < options.utterances; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "utt_%03zu.wav", i + 1);
    auto x = synth_utterance(options.seed, i, options.sample_rate, options.duration);
    write_wav(dir / "corpus" / name, AudioBuffer::mono(std::move(x), options.sample_rate),
              WavFormat::pcm16);
  }

  const nlohmann::json config = {
      {"scenes", {"scene.json"}},
      {"engines", {"ism", "rt"}},
      {"corpus", "corpus"},
      {"condition_id", "default"},
      {"seed", options.seed},
      {"band_cap", 7000.0},
      {"target_rate", options.sample_rate},
      {"ism", {{"max_order", 60}, {"duration", 1.0}}},
      {"rt", {{"n_rays", 20000}, {"max_time", 1.0}}},
      {"dereverb",
       {{"n_support", 5}, {"metrics", {"estoi", "si_sdr", "estoi_in", "si_sdr_in"}}}}};
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';

  const fs::path script = dir / "run_demo.sh";
  std::ofstream(script) << R"sh(#!/bin/sh
# End-to-end demo: simulate the lab room with two engines, dereverberate the
# synthetic corpus with WPE, and compare the engines' scores.
set -e
ROOMSIM=${ROOMSIM:-roomsim}
cd "$(dirname "$0")"
$ROOMSIM simulate --config config.json --out out
$ROOMSIM evaluate --config config.json --manifest out/manifest.json --engine ism --results out/results_ism.csv
$ROOMSIM evaluate --config config.json --manifest out/manifest.json --engine rt --results out/results_rt.csv
$ROOMSIM compare out/results_ism.csv out/results_rt.csv --out out/report --svg
)sh";
  fs::permissions(script, fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                  fs::perm_options::add);
}

}  // namespace roomsim::demo
