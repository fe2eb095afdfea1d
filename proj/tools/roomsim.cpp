// roomsim command-line front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "roomsim/agreement.hpp"
#include "roomsim/demo.hpp"
#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/manifest.hpp"
#include "roomsim/metrics.hpp"
#include "roomsim/parallel.hpp"
#include "roomsim/pipeline.hpp"
#include "roomsim/wav.hpp"
#include "roomsim/wpe.hpp"

namespace fs = std::filesystem;
using namespace roomsim;

namespace {

struct Failure {
  std::string kind;
  std::string message;
  int code;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return 2;
    case ErrorKind::degenerate: return 3;
    case ErrorKind::numerical: return 4;
    default: return 1;
  }
}

int report_failure(const Failure& f) {
  const nlohmann::json j = {{"error", {{"kind", f.kind}, {"message", f.message}}}};
  std::cerr << j.dump() << '\n';
  return f.code;
}

void warn(const std::string& msg) {
  std::cerr << nlohmann::json{{"warning", msg}}.dump() << '\n';
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 0;
};

pipeline::PipelineConfig load_config(const Globals& g) {
  pipeline::PipelineConfig c;
  if (!g.config.empty()) c = pipeline::PipelineConfig::load(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::not_found, "cannot write " + path.string());
  out << text;
}

DatasetManifest load_or_empty(const fs::path& path) {
  if (fs::exists(path)) return load_manifest(path);
  DatasetManifest m;
  m.base_dir = path.parent_path();
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roomsim: room impulse response simulation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Pipeline config JSON");
  app.add_option("--seed", g.seed, "Seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores); never changes results");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Render RIRs for every source/receiver pair");
  std::vector<std::string> sim_scenes, sim_engines;
  std::string sim_manifest;
  bool dump_echogram = false;
  sim->add_option("--scene", sim_scenes, "Scene JSON (repeatable; default from config)");
  sim->add_option("--engine", sim_engines, "ism, rt or fdtd (repeatable; default from config)");
  sim->add_option("--manifest", sim_manifest, "Manifest to update (default <out>/manifest.json)");
  sim->add_flag("--dump-echogram", dump_echogram, "Write ray-tracer echograms as CSV");

  // convolve
  auto* conv = app.add_subcommand("convolve", "Convolve a signal with an RIR");
  std::string conv_rir, conv_input, conv_output;
  conv->add_option("--rir", conv_rir)->required();
  conv->add_option("--input", conv_input)->required();
  conv->add_option("--output", conv_output)->required();

  // dereverb
  auto* der = app.add_subcommand("dereverb", "WPE dereverberation of a multichannel recording");
  std::vector<std::string> der_inputs;
  std::string der_output;
  der->add_option("--input", der_inputs, "Multichannel WAV, or several mono WAVs as channels")->required();
  der->add_option("--output", der_output)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Dereverberation evaluation or external-score ingestion");
  std::string ev_manifest, ev_corpus, ev_engine, ev_results, ev_external, ev_metric,
      ev_algorithm, ev_condition;
  std::optional<std::size_t> ev_support;
  bool ev_self_check = false;
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--corpus", ev_corpus, "Speech corpus directory (default from config)");
  ev->add_option("--engine", ev_engine, "Only evaluate entries of this engine");
  ev->add_option("--results", ev_results, "Results CSV (default <out>/results.csv)");
  ev->add_option("--condition", ev_condition, "Only this condition");
  ev->add_option("--n-support", ev_support, "Support RIRs per group (4..12)");
  ev->add_flag("--self-check", ev_self_check, "Score the reference against itself");
  ev->add_option("--external", ev_external, "External score CSV to ingest instead of running WPE");
  ev->add_option("--metric", ev_metric, "Metric to ingest from --external");
  ev->add_option("--algorithm", ev_algorithm, "Algorithm label for ingested scores");

  // compare
  auto* cmp = app.add_subcommand("compare", "Agreement report between result sets");
  std::vector<std::string> cmp_files;
  bool per_dataset = false, svg = false;
  cmp->add_option("files", cmp_files, "reference.csv candidate.csv...")->required()->expected(2, -1);
  auto* pool_flag = cmp->add_flag("--pool", "Pool all datasets (default)");
  cmp->add_flag("--per-dataset", per_dataset, "One row per dataset (room_id)")->excludes(pool_flag);
  cmp->add_flag("--svg", svg, "Also render scatter.svg");

  // report
  auto* rep = app.add_subcommand("report", "Print the table of a report JSON");
  std::string rep_file;
  rep->add_option("report", rep_file)->required();

  // gen-demo
  auto* demo_cmd = app.add_subcommand("gen-demo", "Write a self-contained demo workspace");
  demo::DemoOptions demo_opts;
  demo_cmd->add_option("--utterances", demo_opts.utterances);
  demo_cmd->add_option("--duration", demo_opts.duration);

  // grid
  auto* grid_cmd = app.add_subcommand("grid", "Add a rectangular receiver grid to a scene");
  std::string grid_scene, grid_output;
  double spacing = 0.5, height = 1.5;
  grid_cmd->add_option("--scene", grid_scene)->required();
  grid_cmd->add_option("--spacing", spacing);
  grid_cmd->add_option("--height", height);
  grid_cmd->add_option("--output", grid_output, "Scene JSON to write (default <out>/scene_grid.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    set_num_threads(g.threads);
    const fs::path out_dir = g.out;

    if (*sim) {
      const auto cfg = load_config(g);
      std::vector<std::string> scenes = sim_scenes.empty() ? cfg.scenes : sim_scenes;
      std::vector<std::string> engines = sim_engines.empty() ? cfg.engines : sim_engines;
      if (scenes.empty()) throw Error(ErrorKind::invalid_argument, "no scene given (--scene or config)");
      fs::create_directories(out_dir);
      const fs::path manifest_path = sim_manifest.empty() ? out_dir / "manifest.json" : fs::path(sim_manifest);
      auto manifest = load_or_empty(manifest_path);
      manifest.base_dir = manifest_path.parent_path();
      std::size_t total = 0;
      for (const auto& sp : scenes) {
        const auto scene = load_scene(sp);
        for (const auto& e : engines) {
          const auto summary = pipeline::simulate(scene, parse_engine(e), cfg, manifest.base_dir,
                                                  manifest, dump_echogram);
          for (const auto& w : summary.warnings) warn(w);
          total += summary.rirs;
        }
      }
      save_manifest(manifest, manifest_path);
      std::cout << "wrote " << total << " RIRs; manifest " << manifest_path.string() << " ("
                << manifest.entries.size() << " entries)\n";
    } else if (*conv) {
      const Rir rir = read_rir(conv_rir);
      AudioBuffer in = read_wav(conv_input);
      if (in.num_channels() != 1) in.channels.resize(1);
      const auto y = dsp::fft_convolve(in, rir);
      write_wav(conv_output, y, WavFormat::float32);
    } else if (*der) {
      const auto cfg = load_config(g);
      AudioBuffer mix;
      for (const auto& p : der_inputs) {
        const auto a = read_wav(p);
        if (mix.channels.empty()) mix.sample_rate = a.sample_rate;
        else if (a.sample_rate != mix.sample_rate)
          throw Error(ErrorKind::invalid_argument, "channel files differ in sample rate");
        for (const auto& ch : a.channels) mix.channels.push_back(ch);
      }
      std::size_t len = 0;
      for (const auto& ch : mix.channels) len = std::max(len, ch.size());
      for (auto& ch : mix.channels) ch.resize(len, 0.0);
      write_wav(der_output, wpe::wpe_dereverb(mix, cfg.dereverb.wpe), WavFormat::float32);
    } else if (*ev) {
      const auto cfg = load_config(g);
      auto manifest = pipeline::filter_engine(load_manifest(ev_manifest), ev_engine);
      if (manifest.entries.empty())
        throw Error(ErrorKind::degenerate, "no manifest entries to evaluate");
      const fs::path results_path = ev_results.empty() ? out_dir / "results.csv" : fs::path(ev_results);
      std::vector<EvalResult> rows;
      if (!ev_external.empty()) {
        if (ev_metric.empty()) throw Error(ErrorKind::invalid_argument, "--external needs --metric");
        rows = metrics::ingest_external_scores(ev_external, ev_metric, manifest,
                                               ev_algorithm.empty() ? "external" : ev_algorithm);
      } else {
        const fs::path corpus = ev_corpus.empty() ? fs::path(cfg.corpus) : fs::path(ev_corpus);
        if (!fs::is_directory(corpus))
          return report_failure({"corpus_not_found", "corpus directory not found: " + corpus.string(), 2});
        const auto speech = pipeline::load_corpus(corpus, cfg.target_rate);
        auto dcfg = cfg.dereverb;
        if (ev_support) dcfg.n_support = *ev_support;
        if (!ev_condition.empty()) dcfg.condition = ev_condition;
        if (ev_self_check) dcfg.self_check = true;
        if (!ev_algorithm.empty()) dcfg.algorithm = ev_algorithm;
        rows = wpe::run_dereverb_eval(manifest, speech, dcfg, cfg.seed);
      }
      std::vector<EvalResult> existing;
      if (fs::exists(results_path)) existing = read_results(results_path);
      const auto merged = pipeline::merge_results(std::move(existing), rows);
      if (results_path.has_parent_path()) fs::create_directories(results_path.parent_path());
      write_results(results_path, merged);
      std::cout << "wrote " << rows.size() << " result rows to " << results_path.string() << '\n';
    } else if (*cmp) {
      const auto reference = read_results(cmp_files[0]);
      if (reference.empty())
        throw Error(ErrorKind::degenerate, "reference file " + cmp_files[0] + " has no rows");
      std::vector<std::vector<EvalResult>> candidates;
      for (std::size_t i = 1; i < cmp_files.size(); ++i) {
        candidates.push_back(read_results(cmp_files[i]));
        if (candidates.back().empty())
          throw Error(ErrorKind::degenerate, "candidate file " + cmp_files[i] + " has no rows");
      }
      agreement::ReportConfig rc;
      rc.per_dataset = per_dataset;
      const auto report = agreement::build_report(reference, candidates, rc);
      fs::create_directories(out_dir);
      write_text(out_dir / "report.json", agreement::report_to_json(report).dump(2) + "\n");
      const auto table = agreement::report_to_table(report);
      write_text(out_dir / "report.txt", table);
      write_text(out_dir / "scatter.csv", agreement::scatter_to_csv(report));
      if (svg) write_text(out_dir / "scatter.svg", agreement::scatter_to_svg(report));
      std::cout << table;
      for (const auto& r : report.rows)
        if (r.error) warn(r.engine + " " + r.algorithm + "/" + r.metric + ": " + *r.error);
      if (report.succeeded() == 0)
        return report_failure({"degenerate_data", "no report row could be computed", 3});
    } else if (*rep) {
      std::ifstream in(rep_file);
      if (!in) throw Error(ErrorKind::not_found, "report not found: " + rep_file);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, rep_file + ": " + e.what());
      }
      std::cout << agreement::report_to_table(agreement::report_from_json(j));
    } else if (*demo_cmd) {
      demo_opts.seed = g.seed.value_or(0);
      demo::write_demo_workspace(out_dir, demo_opts);
      std::cout << "demo workspace written to " << out_dir.string() << " (run_demo.sh)\n";
    } else if (*grid_cmd) {
      auto scene = load_scene(grid_scene);
      const auto points = make_receiver_grid(scene, spacing, height);
      int n = 0;
      for (const auto& p : points) {
        char id[16];
        std::snprintf(id, sizeof id, "g%03d", ++n);
        scene.receivers.push_back({id, p});
      }
      const fs::path target = grid_output.empty() ? out_dir / "scene_grid.json" : fs::path(grid_output);
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      save_scene(scene, target);
      std::cout << points.size() << " grid receivers added; scene written to " << target.string() << '\n';
    }
  } catch (const Error& e) {
    return report_failure({std::string(error_kind_name(e.kind())), e.what(), exit_code(e.kind())});
  } catch (const std::exception& e) {
    return report_failure({"internal", e.what(), 1});
  }
  return 0;
}
