#include "roomsim/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/parallel.hpp"
#include "roomsim/random.hpp"
#include "roomsim/wav.hpp"

namespace roomsim::pipeline {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (!(band_cap > 0.0)) throw Error(ErrorKind::invalid_argument, "band_cap must be > 0");
  if (!(target_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "target_rate must be > 0");
  if (band_cap >= target_rate / 2.0)
    throw Error(ErrorKind::invalid_argument, "band_cap must lie below the target Nyquist frequency");
  for (const auto& e : engines) {
    const Engine eng = parse_engine(e);
    if (eng == Engine::measured)
      throw Error(ErrorKind::invalid_argument, "'measured' is not a simulation engine");
  }
  rt.validate();
  fdtd.validate();
  dereverb.wpe.validate();
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"scenes", scenes},
          {"engines", engines},
          {"ism", ism.to_json()},
          {"rt", rt.to_json()},
          {"fdtd", fdtd.to_json()},
          {"corpus", corpus},
          {"condition_id", condition_id},
          {"seed", seed},
          {"band_cap", band_cap},
          {"target_rate", target_rate},
          {"dereverb", dereverb.to_json()}};
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.scenes = j.value("scenes", c.scenes);
    c.engines = j.value("engines", c.engines);
    if (j.contains("ism")) c.ism = ism::IsmConfig::from_json(j["ism"]);
    if (j.contains("rt")) c.rt = rt::RtConfig::from_json(j["rt"]);
    if (j.contains("fdtd")) c.fdtd = fdtd::FdtdConfig::from_json(j["fdtd"]);
    c.corpus = j.value("corpus", c.corpus);
    c.condition_id = j.value("condition_id", c.condition_id);
    c.seed = j.value("seed", c.seed);
    c.band_cap = j.value("band_cap", c.band_cap);
    c.target_rate = j.value("target_rate", c.target_rate);
    if (j.contains("dereverb")) c.dereverb = wpe::DereverbEvalConfig::from_json(j["dereverb"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("pipeline config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "config file not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, path.string() + ": " + e.what());
  }
  auto c = from_json(j);
  for (auto& s : c.scenes)
    if (fs::path(s).is_relative()) s = (path.parent_path() / s).lexically_normal().string();
  if (fs::path(c.corpus).is_relative())
    c.corpus = (path.parent_path() / c.corpus).lexically_normal().string();
  c.validate();
  return c;
}

Rir conform(Rir rir, double band_cap, double target_rate) {
  if (rir.sample_rate != target_rate) {
    rir.samples = dsp::resample(rir.samples, rir.sample_rate, target_rate);
    rir.sample_rate = target_rate;
    rir.band_limit = std::min(rir.band_limit, target_rate / 2.0);
  }
  if (band_cap < rir.band_limit) {
    rir.samples = dsp::lowpass(rir.samples, rir.sample_rate, band_cap);
    rir.band_limit = band_cap;
  }
  return rir;
}

namespace {

void write_echogram_csv(const fs::path& path, const rt::Echogram& eg, std::size_t receiver) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out << "band,bin,energy\n";
  for (int b = 0; b < kNumBands; ++b)
    for (std::size_t i = 0; i < eg.num_bins; ++i)
      out << b << ',' << i << ',' << format_value(eg.receivers[receiver].energy[b][i]) << '\n';
}

}  // namespace

SimulateSummary simulate(const RoomScene& scene, Engine engine, const PipelineConfig& config,
                         const fs::path& out_dir, DatasetManifest& manifest, bool dump_echograms) {
  config.validate();
  require_valid(scene);
  const std::string eng = engine_name(engine);
  const fs::path rel_dir = fs::path("rirs") / eng / scene.name;
  fs::create_directories(out_dir / rel_dir);

  SimulateSummary summary;
  std::vector<ManifestEntry> added;
  const std::size_t nr = scene.receivers.size();

  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    std::vector<Rir> rirs(nr);
    if (engine == Engine::ism) {
      ism::IsmConfig cfg = config.ism;
      cfg.sample_rate = config.target_rate;
      parallel_for(static_cast<std::int64_t>(nr), [&](std::int64_t r) {
        rirs[r] = ism::render_rir_ism(scene, s, static_cast<std::size_t>(r), cfg);
      });
    } else if (engine == Engine::rt) {
      rt::RtConfig cfg = config.rt;
      cfg.seed = splitmix64(config.seed) ^ s;
      const auto traced = rt::trace(scene, s, cfg);
      for (std::size_t r = 0; r < nr; ++r) {
        rirs[r] = rt::echogram_to_rir(traced.echogram, r, cfg.seed ^ splitmix64(r + 1), config.target_rate);
        rirs[r].provenance.scene = scene.name;
        rirs[r].provenance.source_id = scene.sources[s].id;
        rirs[r].provenance.receiver_id = scene.receivers[r].id;
        rirs[r].provenance.config_hash = config_hash(cfg.to_json());
        rirs[r].provenance.extra = {{"config", cfg.to_json()},
                                    {"ledger",
                                     {{"emitted", traced.ledger.emitted},
                                      {"absorbed", traced.ledger.absorbed},
                                      {"truncated", traced.ledger.truncated},
                                      {"splitting_adjustment", traced.ledger.splitting_adjustment}}}};
        if (dump_echograms)
          write_echogram_csv(out_dir / rel_dir /
                                 (scene.sources[s].id + "_" + scene.receivers[r].id + "_echogram.csv"),
                             traced.echogram, r);
      }
    } else if (engine == Engine::fdtd) {
      fdtd::FdtdConfig cfg = config.fdtd;
      cfg.target_rate = config.target_rate;
      cfg.band_cap = config.band_cap;
      fdtd::WaveRunStats stats;
      rirs = fdtd::render_rirs_fdtd(scene, s, cfg, &stats);
      std::ofstream st(out_dir / rel_dir / (scene.sources[s].id + "_wave_stats.json"));
      st << stats.to_json().dump(2) << '\n';
      if (config.band_cap > stats.usable_fmax)
        summary.warnings.push_back("fdtd: band_limit " + std::to_string(stats.usable_fmax) +
                                   " Hz is below the requested cap " +
                                   std::to_string(config.band_cap) + " Hz");
    } else {
      throw Error(ErrorKind::invalid_argument, "cannot simulate engine '" + eng + "'");
    }

    for (std::size_t r = 0; r < nr; ++r) {
      Rir rir = conform(std::move(rirs[r]), config.band_cap, config.target_rate);
      rir.engine = eng;
      rir.provenance.seed = config.seed;
      rir.provenance.extra["band_cap"] = config.band_cap;
      const fs::path rel = rel_dir / (scene.sources[s].id + "_" + scene.receivers[r].id + ".wav");
      write_rir(out_dir / rel, rir);

      ManifestEntry e;
      e.rir_path = rel.generic_string();
      e.engine = engine;
      e.room_id = scene.name;
      e.condition_id = config.condition_id;
      e.source_id = scene.sources[s].id;
      e.receiver_id = scene.receivers[r].id;
      e.source_pos = scene.sources[s].position;
      e.receiver_pos = scene.receivers[r].position;
      e.true_distance = distance(e.source_pos, e.receiver_pos);
      added.push_back(e);
      ++summary.rirs;
    }
  }

  std::map<std::string, std::size_t> existing;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) existing[manifest.entries[i].key()] = i;
  for (auto& e : added) {
    const auto it = existing.find(e.key());
    if (it != existing.end()) manifest.entries[it->second] = e;
    else manifest.entries.push_back(e);
  }
  return summary;
}

std::vector<AudioBuffer> load_corpus(const fs::path& dir, double target_rate) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::not_found, "corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::degenerate, "corpus directory has no .wav files: " + dir.string());
  std::vector<AudioBuffer> out;
  for (const auto& f : files) {
    AudioBuffer a = read_wav(f);
    if (a.num_channels() != 1) a.channels.resize(1);
    if (a.sample_rate != target_rate) a = dsp::resample(a, target_rate);
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<EvalResult> merge_results(std::vector<EvalResult> base,
                                      const std::vector<EvalResult>& update) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < base.size(); ++i) index[base[i].full_key()] = i;
  for (const auto& r : update) {
    const auto it = index.find(r.full_key());
    if (it != index.end()) {
      base[it->second] = r;
    } else {
      index[r.full_key()] = base.size();
      base.push_back(r);
    }
  }
  return base;
}

DatasetManifest filter_engine(const DatasetManifest& manifest, const std::string& engine) {
  if (engine.empty()) return manifest;
  const Engine e = parse_engine(engine);
  DatasetManifest out;
  out.base_dir = manifest.base_dir;
  for (const auto& entry : manifest.entries)
    if (entry.engine == e) out.entries.push_back(entry);
  return out;
}

}  // namespace roomsim::pipeline
