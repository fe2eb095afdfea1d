#include "roomsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/fft.hpp"

namespace roomsim::metrics {

double MetricValue::stored() const {
  return sentinel == Sentinel::plus_infinity ? std::numeric_limits<double>::infinity() : value;
}

// ---------------------------------------------------------------------------
// SI-SDR

MetricValue si_sdr(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size())
    throw Error(ErrorKind::invalid_argument,
                "si_sdr length mismatch: " + std::to_string(estimate.size()) + " vs " +
                    std::to_string(reference.size()));
  if (reference.empty()) throw Error(ErrorKind::invalid_argument, "si_sdr of empty signals");
  const std::size_t n = reference.size();
  double me = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    me += estimate[i];
    mr += reference[i];
  }
  me /= static_cast<double>(n);
  mr /= static_cast<double>(n);
  double ss = 0.0, es = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = reference[i] - mr;
    ss += s * s;
    es += (estimate[i] - me) * s;
  }
  if (!(ss > 0.0)) throw Error(ErrorKind::degenerate, "si_sdr reference is all zero");
  const double alpha = es / ss;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = alpha * (reference[i] - mr);
    const double d = t - (estimate[i] - me);
    target += t * t;
    residual += d * d;
  }
  MetricValue m{"si_sdr", 0.0, Sentinel::finite};
  if (residual <= kSiSdrZeroResidual * target) {
    m.sentinel = Sentinel::plus_infinity;
    m.value = std::numeric_limits<double>::infinity();
    return m;
  }
  m.value = 10.0 * std::log10(target / residual);
  return m;
}

MetricValue si_sdr(const AudioBuffer& estimate, const AudioBuffer& reference) {
  if (estimate.sample_rate != reference.sample_rate)
    throw Error(ErrorKind::invalid_argument, "si_sdr sample-rate mismatch");
  return si_sdr(estimate.samples(), reference.samples());
}

// ---------------------------------------------------------------------------
// ESTOI

namespace {

// Hann of length n+2 without its zero end points.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  return w;
}

void remove_silent_frames(std::vector<double>& x, std::vector<double>& y, const EstoiParams& p) {
  const auto w = inner_hann(p.frame);
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + p.frame <= x.size(); i += p.hop) starts.push_back(i);
  std::vector<double> level(starts.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.frame; ++i) {
      const double v = w[i] * x[starts[f] + i];
      e += v * v;
    }
    level[f] = 20.0 * std::log10(std::sqrt(e) + std::numeric_limits<double>::epsilon());
    top = std::max(top, level[f]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < starts.size(); ++f)
    if (top - p.dynamic_range_db - level[f] < 0.0) keep.push_back(starts[f]);
  const std::size_t len = keep.empty() ? 0 : (keep.size() - 1) * p.hop + p.frame;
  std::vector<double> xs(len, 0.0), ys(len, 0.0);
  for (std::size_t k = 0; k < keep.size(); ++k)
    for (std::size_t i = 0; i < p.frame; ++i) {
      xs[k * p.hop + i] += w[i] * x[keep[k] + i];
      ys[k * p.hop + i] += w[i] * y[keep[k] + i];
    }
  x = std::move(xs);
  y = std::move(ys);
}

// Third-octave band envelopes, [band][frame].
std::vector<std::vector<double>> band_envelopes(const std::vector<double>& x, const EstoiParams& p) {
  const auto w = inner_hann(p.frame);
  dsp::RealFft fft(p.fft_size);
  const std::size_t bins = fft.bins();

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  auto nearest_bin = [&](double f) {
    std::size_t best = 0;
    double err = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < bins; ++k) {
      const double d = std::abs(k * p.sample_rate / p.fft_size - f);
      if (d < err) {
        err = d;
        best = k;
      }
    }
    return best;
  };
  for (int b = 0; b < p.bands; ++b) {
    const double lo = p.min_freq * std::pow(2.0, (2.0 * b - 1.0) / 6.0);
    const double hi = p.min_freq * std::pow(2.0, (2.0 * b + 1.0) / 6.0);
    edges.emplace_back(nearest_bin(lo), nearest_bin(hi));
  }

  std::vector<std::vector<double>> env(p.bands);
  std::vector<double> frame(p.frame);
  std::vector<dsp::cplx> spec(bins);
  for (std::size_t i = 0; i + p.frame < x.size(); i += p.hop) {
    for (std::size_t n = 0; n < p.frame; ++n) frame[n] = w[n] * x[i + n];
    fft.forward(frame, spec);
    for (int b = 0; b < p.bands; ++b) {
      double e = 0.0;
      for (std::size_t k = edges[b].first; k < edges[b].second; ++k) e += std::norm(spec[k]);
      env[b].push_back(std::sqrt(e));
    }
  }
  return env;
}

// Zero-mean, unit-norm normalization in place; zero vectors stay zero.
template <class Get>
void normalize(std::size_t n, Get&& at) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += at(i);
  mean /= static_cast<double>(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    at(i) -= mean;
    norm += at(i) * at(i);
  }
  norm = std::sqrt(norm);
  for (std::size_t i = 0; i < n; ++i) at(i) = norm > 0.0 ? at(i) / norm : 0.0;
}

void row_col_normalize(std::vector<double>& seg, std::size_t bands, std::size_t frames) {
  for (std::size_t b = 0; b < bands; ++b)
    normalize(frames, [&](std::size_t t) -> double& { return seg[b * frames + t]; });
  for (std::size_t t = 0; t < frames; ++t)
    normalize(bands, [&](std::size_t b) -> double& { return seg[b * frames + t]; });
}

}  // namespace

MetricValue estoi(std::span<const double> clean, std::span<const double> processed,
                  double sample_rate) {
  if (clean.size() != processed.size())
    throw Error(ErrorKind::invalid_argument, "estoi length mismatch");
  const EstoiParams p;
  std::vector<double> x = dsp::resample(clean, sample_rate, p.sample_rate);
  std::vector<double> y = dsp::resample(processed, sample_rate, p.sample_rate);
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; }))
    throw Error(ErrorKind::degenerate, "estoi clean signal is silent");

  remove_silent_frames(x, y, p);
  const auto ex = band_envelopes(x, p);
  const auto ey = band_envelopes(y, p);
  const std::size_t frames = ex[0].size();
  if (frames < p.segment)
    throw Error(ErrorKind::degenerate, "estoi needs at least " + std::to_string(p.segment) +
                                           " non-silent frames, got " + std::to_string(frames));

  const std::size_t bands = static_cast<std::size_t>(p.bands);
  const std::size_t n = p.segment;
  double total = 0.0;
  std::vector<double> sx(bands * n), sy(bands * n);
  for (std::size_t m = n; m <= frames; ++m) {
    for (std::size_t b = 0; b < bands; ++b)
      for (std::size_t t = 0; t < n; ++t) {
        sx[b * n + t] = ex[b][m - n + t];
        sy[b * n + t] = ey[b][m - n + t];
      }
    row_col_normalize(sx, bands, n);
    row_col_normalize(sy, bands, n);
    double d = 0.0;
    for (std::size_t i = 0; i < sx.size(); ++i) d += sx[i] * sy[i];
    total += d / static_cast<double>(n);
  }
  const double score = total / static_cast<double>(frames - n + 1);
  return {"estoi", std::clamp(score, -1.0, 1.0), Sentinel::finite};
}

MetricValue estoi(const AudioBuffer& clean, const AudioBuffer& processed) {
  if (clean.sample_rate != processed.sample_rate)
    throw Error(ErrorKind::invalid_argument, "estoi sample-rate mismatch");
  return estoi(clean.samples(), processed.samples(), clean.sample_rate);
}

// ---------------------------------------------------------------------------

MetricValue distance_error(double predicted_m, double true_m) {
  if (!(predicted_m >= 0.0) || !(true_m >= 0.0))
    throw Error(ErrorKind::invalid_argument, "distances must be >= 0");
  return {"dist_err", std::abs(predicted_m - true_m), Sentinel::finite};
}

std::vector<EvalResult> ingest_external_scores(const std::filesystem::path& path,
                                               const std::string& metric_name,
                                               const DatasetManifest& manifest,
                                               const std::string& algorithm) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::not_found, "score file not found: " + path.string());
  constexpr const char* kHeader = "engine,room_id,condition_id,source_id,receiver_id,metric,value";

  std::map<std::string, const ManifestEntry*> by_key;
  for (const auto& e : manifest.entries) by_key[e.key()] = &e;

  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw Error(ErrorKind::parse, path.string() + ": expected header '" + kHeader + "'");

  std::vector<EvalResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw Error(ErrorKind::parse, where + ": expected 7 fields");
    if (f[5] != metric_name) continue;
    double v = 0.0;
    try {
      v = parse_value(f[6]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, where + ": " + e.what());
    }
    Engine engine;
    try {
      engine = parse_engine(f[0]);
    } catch (const Error&) {
      throw Error(ErrorKind::validation, where + ": unknown engine '" + f[0] + "'");
    }
    ManifestEntry probe;
    probe.engine = engine;
    probe.room_id = f[1];
    probe.condition_id = f[2];
    probe.source_id = f[3];
    probe.receiver_id = f[4];
    const auto it = by_key.find(probe.key());
    if (it == by_key.end())
      throw Error(ErrorKind::validation, where + ": unknown key " + probe.key());

    EvalResult r{f[0], f[1], f[2], f[3], f[4], algorithm, metric_name, v};
    auto range_error = [&](const std::string& what) {
      return Error(ErrorKind::validation, where + ": " + metric_name + " value " + f[6] + " " + what);
    };
    if (metric_name == "pesq") {
      if (!(v >= 1.0 && v <= 5.0)) throw range_error("outside [1, 5]");
    } else if (metric_name == "estoi") {
      if (!(v >= -1.0 && v <= 1.0)) throw range_error("outside [-1, 1]");
    } else if (metric_name == "dist_err") {
      if (!(v >= 0.0) || std::isinf(v)) throw range_error("must be a finite value >= 0");
    } else if (metric_name == "distance") {
      if (!(v >= 0.0) || std::isinf(v)) throw range_error("must be a finite value >= 0");
      r.metric = "dist_err";
      r.value = distance_error(v, it->second->true_distance).value;
    } else if (!std::isfinite(v) && !(metric_name == "si_sdr" && v > 0)) {
      throw range_error("is not finite");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace roomsim::metrics
