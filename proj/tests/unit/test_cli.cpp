#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "roomsim/manifest.hpp"
#include "roomsim/results.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run roomsim_cli(const fs::path& dir, const std::string& args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" ROOMSIM_CLI "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string error_kind(const Run& r) {
  const auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  return j["error"]["kind"].get<std::string>();
}

void write_quick_config(const fs::path& dir, const std::string& extra = "") {
  std::ofstream(dir / "config.json") << R"({"scenes": ["scene.json"], "corpus": "corpus",
    "ism": {"max_order": 8, "duration": 0.3}, "rt": {"n_rays": 3000, "max_time": 0.3},
    "dereverb": {"n_support": 4, "metrics": ["estoi", "si_sdr"]})" + extra + "}";
}

}  // namespace

TEST_CASE("usage errors exit nonzero") {
  const auto dir = testing::scratch_dir("cli_usage");
  CHECK(roomsim_cli(dir, "").code != 0);
  CHECK(roomsim_cli(dir, "frobnicate").code != 0);
  CHECK(roomsim_cli(dir, "--help").code == 0);
}

TEST_CASE("gen-demo is deterministic per seed") {
  const auto dir = testing::scratch_dir("cli_demo");
  REQUIRE(roomsim_cli(dir, "gen-demo --seed 4 --utterances 3 --duration 1 --out a").code == 0);
  REQUIRE(roomsim_cli(dir, "gen-demo --seed 4 --utterances 3 --duration 1 --out b").code == 0);
  REQUIRE(roomsim_cli(dir, "gen-demo --seed 5 --utterances 3 --duration 1 --out c").code == 0);
  for (const char* f : {"scene.json", "config.json", "run_demo.sh", "corpus/utt_001.wav", "corpus/utt_003.wav"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  CHECK(slurp(dir / "a/corpus/utt_001.wav") != slurp(dir / "c/corpus/utt_001.wav"));
  CHECK(slurp(dir / "a/corpus/utt_001.wav") != slurp(dir / "a/corpus/utt_002.wav"));
}

TEST_CASE("simulate, evaluate and compare") {
  const auto dir = testing::scratch_dir("cli_flow");
  REQUIRE(roomsim_cli(dir, "gen-demo --utterances 3 --duration 1.5 --out .").code == 0);
  write_quick_config(dir);

  auto r = roomsim_cli(dir, "simulate --config config.json --engine ism --out out --threads 1");
  REQUIRE(r.code == 0);
  const auto manifest = roomsim::load_manifest(dir / "out/manifest.json");
  CHECK(manifest.entries.size() == 20);
  std::size_t wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "out"))
    if (e.path().extension() == ".wav") ++wavs;
  CHECK(wavs == 20);
  const auto first = slurp(manifest.resolve(manifest.entries[7]));
  REQUIRE(roomsim_cli(dir, "simulate --config config.json --engine ism --out out --threads 2").code == 0);
  CHECK(slurp(manifest.resolve(manifest.entries[7])) == first);

  // the 20 ISM RIRs form one condition; 2 metrics per main RIR
  r = roomsim_cli(dir, "evaluate --config config.json --manifest out/manifest.json --results out/ism.csv");
  REQUIRE(r.code == 0);
  const auto rows = roomsim::read_results(dir / "out/ism.csv");
  CHECK(rows.size() == 40);

  r = roomsim_cli(dir, "evaluate --config config.json --manifest out/manifest.json --self-check "
                       "--algorithm self --results out/self.csv");
  REQUIRE(r.code == 0);
  for (const auto& row : roomsim::read_results(dir / "out/self.csv")) {
    if (row.metric == "estoi") CHECK(row.value == doctest::Approx(1.0).epsilon(1e-9));
    if (row.metric == "si_sdr") CHECK(row.is_sentinel());
  }

  r = roomsim_cli(dir, "compare out/ism.csv out/ism.csv --out report");
  REQUIRE(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(dir / "report/report.json"));
  REQUIRE(report["rows"].size() == 2);
  for (const auto& row : report["rows"]) {
    CHECK(row["rho"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row["rmse"].get<double>() == 0.0);
  }
  CHECK(fs::exists(dir / "report/scatter.csv"));
  CHECK(fs::exists(dir / "report/report.txt"));

  r = roomsim_cli(dir, "report report/report.json");
  CHECK(r.code == 0);
  CHECK(r.out.find("ism") != std::string::npos);
}

TEST_CASE("evaluate reports a missing corpus") {
  const auto dir = testing::scratch_dir("cli_nocorpus");
  REQUIRE(roomsim_cli(dir, "gen-demo --utterances 1 --duration 1 --out .").code == 0);
  write_quick_config(dir);
  REQUIRE(roomsim_cli(dir, "simulate --config config.json --engine ism --out out").code == 0);
  const auto r = roomsim_cli(dir, "evaluate --config config.json --manifest out/manifest.json --corpus nowhere");
  CHECK(r.code == 2);
  CHECK(error_kind(r) == "corpus_not_found");

  const auto m = roomsim_cli(dir, "evaluate --manifest missing.json --corpus corpus");
  CHECK(m.code == 2);
}

TEST_CASE("compare with an empty candidate exits 3") {
  const auto dir = testing::scratch_dir("cli_empty");
  std::ofstream(dir / "ref.csv") << roomsim::kResultsHeader << "\n"
                                 << "measured,lab,c,s1,r1,wpe,estoi,0.5\n"
                                 << "measured,lab,c,s1,r2,wpe,estoi,0.6\n";
  std::ofstream(dir / "empty.csv") << roomsim::kResultsHeader << "\n";
  const auto r = roomsim_cli(dir, "compare ref.csv empty.csv --out rep");
  CHECK(r.code == 3);
  CHECK_NOTHROW(error_kind(r));

  std::ofstream(dir / "other.csv") << roomsim::kResultsHeader << "\n"
                                   << "ism,hall,c,s1,r1,wpe,estoi,0.5\n"
                                   << "ism,hall,c,s1,r2,wpe,estoi,0.6\n";
  CHECK(roomsim_cli(dir, "compare ref.csv other.csv --out rep").code == 3);
  CHECK(roomsim_cli(dir, "compare ref.csv missing.csv --out rep").code == 2);
}

TEST_CASE("grid adds receivers") {
  const auto dir = testing::scratch_dir("cli_grid");
  REQUIRE(roomsim_cli(dir, "gen-demo --utterances 1 --duration 1 --out .").code == 0);
  const auto r = roomsim_cli(dir, "grid --scene scene.json --spacing 0.5 --height 1.2 --output grid.json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "grid.json"));
  CHECK(j["receivers"].size() > 10);
  CHECK(roomsim_cli(dir, "grid --scene scene.json --spacing 100 --height 1.2").code != 0);
}
