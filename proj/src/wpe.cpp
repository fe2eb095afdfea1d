#include "roomsim/wpe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Dense>

#include "roomsim/error.hpp"
#include "roomsim/metrics.hpp"
#include "roomsim/parallel.hpp"
#include "roomsim/random.hpp"
#include "roomsim/wav.hpp"

namespace roomsim::wpe {

void WpeConfig::validate() const {
  if (taps < 1) throw Error(ErrorKind::invalid_argument, "WPE taps must be >= 1");
  if (delay < 1) throw Error(ErrorKind::invalid_argument, "WPE delay must be >= 1");
  if (iterations < 1) throw Error(ErrorKind::invalid_argument, "WPE iterations must be >= 1");
  if (!(psd_floor > 0.0)) throw Error(ErrorKind::invalid_argument, "WPE psd_floor must be > 0");
  if (!(loading >= 0.0)) throw Error(ErrorKind::invalid_argument, "WPE loading must be >= 0");
  dsp::check_cola(stft);
}

nlohmann::json WpeConfig::to_json() const {
  return {{"taps", taps},
          {"delay", delay},
          {"iterations", iterations},
          {"psd_floor", psd_floor},
          {"loading", loading},
          {"stft", {{"fft_size", stft.fft_size}, {"hop", stft.hop}, {"window", "hann"}}}};
}

WpeConfig WpeConfig::from_json(const nlohmann::json& j) {
  WpeConfig c;
  c.taps = j.value("taps", c.taps);
  c.delay = j.value("delay", c.delay);
  c.iterations = j.value("iterations", c.iterations);
  c.psd_floor = j.value("psd_floor", c.psd_floor);
  c.loading = j.value("loading", c.loading);
  if (j.contains("stft")) {
    c.stft.fft_size = j["stft"].value("fft_size", c.stft.fft_size);
    c.stft.hop = j["stft"].value("hop", c.stft.hop);
  }
  return c;
}

AudioBuffer wpe_dereverb(const AudioBuffer& input, const WpeConfig& config,
                         std::vector<double>* objective) {
  config.validate();
  input.validate();
  const std::size_t D = input.num_channels();
  if (D < 2) throw Error(ErrorKind::invalid_argument, "WPE needs at least 2 channels");
  bool silent = true;
  for (const auto& ch : input.channels)
    silent = silent && std::all_of(ch.begin(), ch.end(), [](double v) { return v == 0.0; });
  if (silent) throw Error(ErrorKind::degenerate, "WPE input is all zero");

  std::vector<dsp::StftFrames> spec;
  for (const auto& ch : input.channels) spec.push_back(dsp::stft(ch, input.sample_rate, config.stft));
  const std::size_t T = spec[0].frames;
  const std::size_t F = spec[0].bins;
  const std::size_t K = static_cast<std::size_t>(config.taps);
  const std::size_t delta = static_cast<std::size_t>(config.delay);
  const std::size_t DK = D * K;

  // floor relative to the mean input power keeps the solve scale equivariant
  double power = 0.0;
  for (const auto& sp : spec)
    for (const auto& v : sp.data) power += std::norm(v);
  const double lambda_min = config.psd_floor * power / static_cast<double>(D * T * F);

  using Mat = Eigen::MatrixXcd;
  std::vector<std::vector<double>> bin_objective(F, std::vector<double>(config.iterations, 0.0));
  dsp::StftFrames out = spec[0];

  parallel_for(static_cast<std::int64_t>(F), [&](std::int64_t fi) {
    const auto f = static_cast<std::size_t>(fi);
    Mat Y(D, T);
    for (std::size_t d = 0; d < D; ++d)
      for (std::size_t t = 0; t < T; ++t) Y(d, t) = spec[d].at(t, f);
    Mat Yt = Mat::Zero(DK, T);
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t t = delta + k; t < T; ++t)
        for (std::size_t d = 0; d < D; ++d) Yt(k * D + d, t) = Y(d, t - delta - k);

    Mat X = Y;
    Eigen::VectorXd inv_lambda(T);
    for (int it = 0; it < config.iterations; ++it) {
      for (std::size_t t = 0; t < T; ++t)
        inv_lambda(t) = 1.0 / std::max(lambda_min, X.col(t).squaredNorm() / D);
      const Mat weighted = Yt * inv_lambda.asDiagonal();
      Mat R = weighted * Yt.adjoint();
      const Mat P = weighted * Y.adjoint();
      const double trace = R.trace().real();
      if (trace > 0.0) {
        R.diagonal().array() += config.loading * trace / static_cast<double>(DK);
        const Mat G = R.ldlt().solve(P);
        X = Y - G.adjoint() * Yt;
      }
      double obj = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double lam = std::max(lambda_min, X.col(t).squaredNorm() / D);
        obj += X.col(t).squaredNorm() / D / lam + std::log(lam);
      }
      bin_objective[f][it] = obj;
    }
    for (std::size_t t = 0; t < T; ++t) out.at(t, f) = X(0, t);
  });

  if (objective) {
    objective->assign(config.iterations, 0.0);
    for (const auto& b : bin_objective)
      for (int it = 0; it < config.iterations; ++it) (*objective)[it] += b[it];
  }
  auto y = dsp::istft(out);
  for (double v : y)
    if (!std::isfinite(v)) throw Error(ErrorKind::numerical, "WPE produced non-finite output");
  return AudioBuffer::mono(std::move(y), input.sample_rate);
}

// ---------------------------------------------------------------------------

std::vector<EvalGroup> build_eval_groups(const DatasetManifest& manifest,
                                         const std::string& condition, std::size_t n_support,
                                         std::uint64_t seed) {
  if (n_support < kMinSupports || n_support > kMaxSupports)
    throw Error(ErrorKind::invalid_argument, "n_support must lie in [4, 12], got " +
                                                 std::to_string(n_support));
  // pools keyed by engine/room/condition, in manifest order
  std::map<std::string, std::vector<std::size_t>> pools;
  std::vector<std::string> pool_order;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (!condition.empty() && e.condition_id != condition) continue;
    const std::string key = engine_name(e.engine) + "/" + e.room_id + "/" + e.condition_id;
    if (!pools.count(key)) pool_order.push_back(key);
    pools[key].push_back(i);
  }
  if (pools.empty())
    throw Error(ErrorKind::degenerate, "no manifest entries for condition '" + condition + "'");

  std::vector<EvalGroup> groups;
  for (const auto& key : pool_order) {
    const auto& pool = pools[key];
    if (pool.size() <= n_support)
      throw Error(ErrorKind::degenerate, "condition " + key + " has " + std::to_string(pool.size()) +
                                             " entries, needs more than n_support = " +
                                             std::to_string(n_support));
    for (std::size_t m = 0; m < pool.size(); ++m) {
      std::mt19937_64 rng(splitmix64(seed) ^ splitmix64(pool[m] + 1));
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < pool.size(); ++j)
        if (j != m) rest.push_back(pool[j]);
      EvalGroup g;
      g.main = manifest.entries[pool[m]];
      for (std::size_t s = 0; s < n_support; ++s) {
        const std::size_t pick = s + uniform_index(rng, rest.size() - s);
        std::swap(rest[s], rest[pick]);
        g.supports.push_back(manifest.entries[rest[s]]);
      }
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

std::vector<double> direct_path_reference(std::span<const double> speech, const Rir& rir) {
  if (rir.samples.empty()) throw Error(ErrorKind::degenerate, "empty RIR");
  const auto& h = rir.samples;
  double top = 0.0;
  for (double v : h) top = std::max(top, std::abs(v));
  if (top == 0.0) throw Error(ErrorKind::degenerate, "all-zero RIR");
  // first local maximum within 6 dB of the largest one
  std::size_t peak = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double a = std::abs(h[i]);
    if (a >= 0.5 * top && (i + 1 == h.size() || a >= std::abs(h[i + 1]))) {
      peak = i;
      break;
    }
  }
  const auto end = std::min(h.size(), peak + static_cast<std::size_t>(std::lround(kDirectWindow * rir.sample_rate)) + 1);
  auto y = dsp::convolve(speech, std::span<const double>(h.data(), end));
  y.resize(speech.size());
  return y;
}

nlohmann::json DereverbEvalConfig::to_json() const {
  return {{"wpe", wpe.to_json()},     {"n_support", n_support},   {"condition", condition},
          {"metrics", metrics},       {"self_check", self_check}, {"algorithm", algorithm}};
}

DereverbEvalConfig DereverbEvalConfig::from_json(const nlohmann::json& j) {
  DereverbEvalConfig c;
  if (j.contains("wpe")) c.wpe = WpeConfig::from_json(j["wpe"]);
  c.n_support = j.value("n_support", c.n_support);
  c.condition = j.value("condition", c.condition);
  c.metrics = j.value("metrics", c.metrics);
  c.self_check = j.value("self_check", c.self_check);
  c.algorithm = j.value("algorithm", c.algorithm);
  return c;
}

namespace {

double score(const std::string& metric, std::span<const double> processed,
             std::span<const double> unprocessed, std::span<const double> reference, double fs) {
  if (metric == "estoi") return metrics::estoi(reference, processed, fs).stored();
  if (metric == "si_sdr") return metrics::si_sdr(processed, reference).stored();
  if (metric == "estoi_in") return metrics::estoi(reference, unprocessed, fs).stored();
  if (metric == "si_sdr_in") return metrics::si_sdr(unprocessed, reference).stored();
  throw Error(ErrorKind::invalid_argument, "unknown dereverberation metric '" + metric + "'");
}

}  // namespace

std::vector<EvalResult> run_dereverb_eval(const DatasetManifest& manifest,
                                          const std::vector<AudioBuffer>& corpus,
                                          const DereverbEvalConfig& config, std::uint64_t seed) {
  config.wpe.validate();
  if (corpus.empty()) throw Error(ErrorKind::degenerate, "speech corpus is empty");
  for (const auto& m : config.metrics)
    if (m != "estoi" && m != "si_sdr" && m != "estoi_in" && m != "si_sdr_in")
      throw Error(ErrorKind::invalid_argument, "unknown dereverberation metric '" + m + "'");
  const auto groups = build_eval_groups(manifest, config.condition, config.n_support, seed);
  const std::size_t offset = splitmix64(seed) % corpus.size();

  std::vector<std::vector<EvalResult>> per_group(groups.size());
  parallel_for(static_cast<std::int64_t>(groups.size()), [&](std::int64_t gi) {
    const auto& g = groups[gi];
    const AudioBuffer& speech = corpus[(gi + offset) % corpus.size()];
    const double fs = speech.sample_rate;
    const Rir main = read_rir(manifest.resolve(g.main));
    if (main.sample_rate != fs)
      throw Error(ErrorKind::incompatible, "RIR " + g.main.rir_path + " at " +
                                               std::to_string(main.sample_rate) +
                                               " Hz does not match corpus rate " + std::to_string(fs));
    const auto reference = direct_path_reference(speech.samples(), main);

    AudioBuffer mix;
    mix.sample_rate = fs;
    auto add_channel = [&](const Rir& rir) {
      auto y = dsp::convolve(speech.samples(), rir.samples);
      y.resize(speech.length());
      mix.channels.push_back(std::move(y));
    };
    add_channel(main);
    for (const auto& s : g.supports) {
      const Rir rir = read_rir(manifest.resolve(s));
      if (rir.sample_rate != fs)
        throw Error(ErrorKind::incompatible, "RIR " + s.rir_path + " sample rate mismatch");
      add_channel(rir);
    }

    std::vector<double> processed;
    if (config.self_check) processed = reference;
    else processed = wpe_dereverb(mix, config.wpe).samples();
    const auto& unprocessed = config.self_check ? reference : mix.channels[0];

    for (const auto& m : config.metrics)
      per_group[gi].push_back({engine_name(g.main.engine), g.main.room_id, g.main.condition_id,
                               g.main.source_id, g.main.receiver_id, config.algorithm, m,
                               score(m, processed, unprocessed, reference, fs)});
  });

  std::vector<EvalResult> out;
  for (auto& rows : per_group)
    for (auto& r : rows) out.push_back(std::move(r));
  return out;
}

}  // namespace roomsim::wpe
