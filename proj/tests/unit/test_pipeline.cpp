#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/pipeline.hpp"
#include "roomsim/wav.hpp"
#include "test_support.hpp"

using namespace roomsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

pipeline::PipelineConfig quick_config() {
  pipeline::PipelineConfig c;
  c.ism.max_order = 6;
  c.ism.duration = 0.2;
  c.rt.n_rays = 2000;
  c.rt.max_time = 0.2;
  return c;
}

}  // namespace

TEST_CASE("config loads, validates and round trips") {
  const auto dir = testing::scratch_dir("pipe_config");
  std::ofstream(dir / "config.json") << R"({"scenes": ["scene.json"], "engines": ["ism", "rt"],
    "seed": 9, "band_cap": 6000, "ism": {"max_order": 12}, "dereverb": {"n_support": 6}})";
  const auto c = pipeline::PipelineConfig::load(dir / "config.json");
  CHECK(c.engines.size() == 2);
  CHECK(c.seed == 9);
  CHECK(c.band_cap == 6000.0);
  CHECK(c.target_rate == 16000.0);
  CHECK(c.ism.max_order == 12);
  CHECK(c.dereverb.n_support == 6);
  CHECK(fs::path(c.scenes[0]) == dir / "scene.json");
  CHECK(pipeline::PipelineConfig::from_json(c.to_json()).to_json() == c.to_json());

  std::ofstream(dir / "bad.json") << R"({"band_cap": 9000})";
  CHECK_THROWS_AS(pipeline::PipelineConfig::load(dir / "bad.json"), Error);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(pipeline::PipelineConfig::load(dir / "broken.json"), Error);
  try {
    pipeline::PipelineConfig::load(dir / "missing.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}

TEST_CASE("simulate writes one RIR per pair and a manifest") {
  const auto dir = testing::scratch_dir("pipe_sim");
  const auto scene = lab_room_scene(0.3);
  DatasetManifest m;
  m.base_dir = dir;
  const auto summary = pipeline::simulate(scene, Engine::ism, quick_config(), dir, m);
  CHECK(summary.rirs == 20);
  REQUIRE(m.entries.size() == 20);
  std::size_t wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".wav") ++wavs;
  CHECK(wavs == 20);
  for (const auto& e : m.entries) {
    CHECK(e.engine == Engine::ism);
    CHECK(fs::exists(m.resolve(e)));
    CHECK(e.true_distance == doctest::Approx(distance(e.source_pos, e.receiver_pos)));
  }
  const auto rir = read_rir(m.resolve(m.entries[0]));
  CHECK(rir.sample_rate == 16000.0);
  CHECK_NOTHROW(validate_manifest(m));

  // rerun replaces entries and reproduces the bytes
  const auto first = slurp(m.resolve(m.entries[3]));
  pipeline::simulate(scene, Engine::ism, quick_config(), dir, m);
  CHECK(m.entries.size() == 20);
  CHECK(slurp(m.resolve(m.entries[3])) == first);

  pipeline::simulate(scene, Engine::rt, quick_config(), dir, m);
  CHECK(m.entries.size() == 40);
  CHECK(pipeline::filter_engine(m, "rt").entries.size() == 20);
  CHECK(pipeline::filter_engine(m, "").entries.size() == 40);
}

TEST_CASE("simulate surfaces engine incompatibility") {
  const auto dir = testing::scratch_dir("pipe_incompat");
  auto scene = lab_room_scene(0.3);
  scene.boxes.push_back({{3.03, 2.02, 0.0}, {3.43, 2.42, 0.4}, "lab_surface"});
  DatasetManifest m;
  m.base_dir = dir;
  try {
    pipeline::simulate(scene, Engine::ism, quick_config(), dir, m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::incompatible);
    CHECK(std::string(e.what()).find("ISM supports empty shoeboxes only") != std::string::npos);
  }
}

TEST_CASE("conform band-limits and resamples") {
  Rir rir;
  rir.sample_rate = 48000;
  rir.engine = "ism";
  rir.samples = testing::gaussian(4800, 3);
  rir.band_limit = 24000;
  const auto out = pipeline::conform(rir, 7000, 16000);
  CHECK(out.sample_rate == 16000.0);
  CHECK(out.samples.size() == 1600);
  CHECK(out.band_limit == 7000.0);

  Rir low = rir;
  low.band_limit = 1188.0;
  CHECK(pipeline::conform(low, 7000, 16000).band_limit == 1188.0);
}

TEST_CASE("corpus loading") {
  const auto dir = testing::scratch_dir("pipe_corpus");
  try {
    pipeline::load_corpus(dir / "nope", 16000);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
  try {
    pipeline::load_corpus(dir, 16000);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
  write_wav(dir / "b.wav", AudioBuffer::mono(testing::tone(4410, 440, 44100, 0.5), 44100), WavFormat::pcm16);
  write_wav(dir / "a.wav", AudioBuffer::mono(testing::tone(1600, 440, 16000, 0.5), 16000), WavFormat::pcm16);
  const auto c = pipeline::load_corpus(dir, 16000);
  REQUIRE(c.size() == 2);
  CHECK(c[0].length() == 1600);
  CHECK(c[1].length() == 1600);
  CHECK(c[1].sample_rate == 16000.0);
}

TEST_CASE("merge replaces rows with equal keys") {
  std::vector<EvalResult> base = {{"ism", "lab", "c", "s1", "r1", "wpe", "estoi", 0.5},
                                  {"ism", "lab", "c", "s1", "r2", "wpe", "estoi", 0.6}};
  const std::vector<EvalResult> update = {{"ism", "lab", "c", "s1", "r2", "wpe", "estoi", 0.7},
                                          {"ism", "lab", "c", "s1", "r3", "wpe", "estoi", 0.8}};
  const auto merged = pipeline::merge_results(base, update);
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].value == 0.5);
  CHECK(merged[1].value == 0.7);
  CHECK(merged[2].receiver_id == "r3");
}
