#include "roomsim/fdtd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/fft.hpp"
#include "roomsim/parallel.hpp"

namespace roomsim::fdtd {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxCourant = 0.5773502691896258;
constexpr double kUsableFraction = 0.1;
constexpr double kStabilityFactor = 10.0;
constexpr double kPulseFloor = 0.1;  // -20 dB of the pulse spectrum peak

}  // namespace

void FdtdConfig::validate() const {
  if (!(dx > 0.0)) throw Error(ErrorKind::invalid_argument, "dx must be > 0");
  if (!(courant > 0.0) || courant > kMaxCourant + 1e-12)
    throw Error(ErrorKind::invalid_argument,
                "Courant number " + std::to_string(courant) + " outside (0, 1/sqrt(3)]");
  if (!(duration > 0.0)) throw Error(ErrorKind::invalid_argument, "duration must be > 0");
  if (admittance && !(*admittance >= 0.0))
    throw Error(ErrorKind::invalid_argument, "admittance must be >= 0");
  if (!(target_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "target_rate must be > 0");
  if (!(band_cap > 0.0)) throw Error(ErrorKind::invalid_argument, "band_cap must be > 0");
  if (pulse_center_hz < 0.0) throw Error(ErrorKind::invalid_argument, "pulse_center_hz must be >= 0");
}

nlohmann::json FdtdConfig::to_json() const {
  nlohmann::json j = {{"dx", dx},
                      {"courant", courant},
                      {"duration", duration},
                      {"pulse_center_hz", pulse_center_hz},
                      {"per_band", per_band},
                      {"compensate_pulse", compensate_pulse},
                      {"target_rate", target_rate},
                      {"band_cap", band_cap}};
  j["admittance"] = admittance ? nlohmann::json(*admittance) : nlohmann::json(nullptr);
  return j;
}

FdtdConfig FdtdConfig::from_json(const nlohmann::json& j) {
  FdtdConfig c;
  c.dx = j.value("dx", c.dx);
  c.courant = j.value("courant", c.courant);
  c.duration = j.value("duration", c.duration);
  c.pulse_center_hz = j.value("pulse_center_hz", c.pulse_center_hz);
  c.per_band = j.value("per_band", c.per_band);
  c.compensate_pulse = j.value("compensate_pulse", c.compensate_pulse);
  c.target_rate = j.value("target_rate", c.target_rate);
  c.band_cap = j.value("band_cap", c.band_cap);
  c.track_energy = j.value("track_energy", c.track_energy);
  if (j.contains("admittance") && !j["admittance"].is_null()) c.admittance = j["admittance"].get<double>();
  return c;
}

nlohmann::json WaveRunStats::to_json() const {
  const float last_peak = peak.empty() ? 0.f : peak.back();
  const float max_peak = peak.empty() ? 0.f : *std::max_element(peak.begin(), peak.end());
  nlohmann::json j = {{"cells", cells},
                      {"air_cells", air_cells},
                      {"steps", steps},
                      {"fs_grid", fs_grid},
                      {"usable_fmax", usable_fmax},
                      {"source_offset_step", source_offset_step},
                      {"source_peak", source_peak},
                      {"max_peak", max_peak},
                      {"final_peak", last_peak}};
  if (!energy.empty()) j["final_energy"] = energy.back();
  return j;
}

double grid_rate(const FdtdConfig& config, double c) { return c / (config.courant * config.dx); }

double estimate_usable_bandwidth(const FdtdConfig& config, double c) {
  return kUsableFraction * grid_rate(config, c);
}

std::vector<double> source_pulse(const FdtdConfig& config, double c) {
  const double fs = grid_rate(config, c);
  const double fc = config.pulse_center_hz > 0.0 ? config.pulse_center_hz
                                                 : 0.5 * estimate_usable_bandwidth(config, c);
  if (fc >= fs / 2.0) throw Error(ErrorKind::invalid_argument, "pulse centre above grid Nyquist");
  const double sigma = 1.0 / (2.0 * kPi * fc);
  const auto half = static_cast<std::size_t>(std::ceil(4.0 * sigma * fs));
  std::vector<double> s(2 * half + 1);
  double peak = 0.0;
  for (std::size_t n = 0; n < s.size(); ++n) {
    const double x = (static_cast<double>(n) - static_cast<double>(half)) / (sigma * fs);
    s[n] = -x * std::exp(-0.5 * x * x);
    peak = std::max(peak, std::abs(s[n]));
  }
  for (double& v : s) v /= peak;
  return s;
}

namespace {

// Divide out the pulse spectrum; bins below the floor are attenuated rather
// than amplified.
std::vector<double> deconvolve(std::span<const double> x, std::span<const double> pulse) {
  const std::size_t n = dsp::next_pow2(x.size() + pulse.size());
  dsp::RealFft fft(n);
  std::vector<dsp::cplx> X(n / 2 + 1), S(n / 2 + 1);
  fft.forward(x, X);
  fft.forward(pulse, S);
  double smax = 0.0;
  for (const auto& v : S) smax = std::max(smax, std::abs(v));
  const double floor2 = (kPulseFloor * smax) * (kPulseFloor * smax);
  for (std::size_t k = 0; k < X.size(); ++k)
    X[k] = X[k] * std::conj(S[k]) / std::max(std::norm(S[k]), floor2);
  std::vector<double> y(n);
  fft.inverse(X, y);
  y.resize(x.size());
  for (double& v : y) v /= static_cast<double>(n);
  return y;
}

struct Snap {
  std::array<int, 3> cell;
  Vec3 node;
  double offset;
};

Snap snap_to_air(const VoxelGrid& grid, Vec3 p, const char* what) {
  try {
    const auto c = grid.snap(p);
    const Vec3 node = grid.center(c[0], c[1], c[2]);
    return {c, node, distance(node, p)};
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, std::string(what) + ": " + e.what());
  }
}

}  // namespace

FdtdRun run_fdtd(const VoxelGrid& grid, Vec3 source, const std::vector<Vec3>& receivers,
                 const FdtdConfig& config, double c) {
  config.validate();
  if (std::abs(grid.dx - config.dx) > 1e-12)
    throw Error(ErrorKind::invalid_argument, "grid spacing differs from config dx");

  const double lambda = config.courant;
  const double l2 = lambda * lambda;
  const double fs = grid_rate(config, c);
  const auto steps = static_cast<std::size_t>(std::ceil(config.duration * fs));
  const auto pulse = source_pulse(config, c);

  const Snap src = snap_to_air(grid, source, "source");
  std::vector<Snap> rcv;
  for (const auto& r : receivers) rcv.push_back(snap_to_air(grid, r, "receiver"));

  // Padded layout: one layer of zero cells around the grid.
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  const std::size_t sy = static_cast<std::size_t>(nz + 2);
  const std::size_t sx = sy * static_cast<std::size_t>(ny + 2);
  const std::size_t total = sx * static_cast<std::size_t>(nx + 2);
  auto pidx = [&](int i, int j, int k) {
    return static_cast<std::size_t>(i + 1) * sx + static_cast<std::size_t>(j + 1) * sy +
           static_cast<std::size_t>(k + 1);
  };

  // p+ = a p + l (sum of neighbours) - b p- , all zero on solid cells
  std::vector<double> ca(total, 0.0), cl(total, 0.0), cb(total, 0.0), inv_m(total, 0.0);
  std::vector<std::uint8_t> air(total, 0);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      for (int k = 0; k < nz; ++k) {
        const std::size_t g = grid.index(i, j, k);
        if (grid.solid[g]) continue;
        int neighbours = 0;
        double beta = 0.0;
        for (float f : grid.face_beta[g]) {
          if (f < 0.f) ++neighbours;
          else beta += f;
        }
        const double m = 1.0 + 0.5 * lambda * beta;
        const std::size_t p = pidx(i, j, k);
        air[p] = 1;
        inv_m[p] = 1.0 / m;
        ca[p] = (2.0 - l2 * neighbours) / m;
        cl[p] = l2 / m;
        cb[p] = (1.0 - 0.5 * lambda * beta) / m;
      }

  std::vector<double> prev(total, 0.0), cur(total, 0.0), next(total, 0.0);
  const std::size_t src_p = pidx(src.cell[0], src.cell[1], src.cell[2]);
  std::vector<std::size_t> rcv_p;
  for (const auto& r : rcv) rcv_p.push_back(pidx(r.cell[0], r.cell[1], r.cell[2]));

  FdtdRun run;
  auto& st = run.stats;
  st.cells = grid.size();
  st.air_cells = grid.air_cells();
  st.steps = steps;
  st.fs_grid = fs;
  st.usable_fmax = estimate_usable_bandwidth(config, c);
  st.source_offset_step = pulse.size();
  st.peak.resize(steps);
  if (config.track_energy) st.energy.resize(steps);
  run.raw.assign(receivers.size(), std::vector<double>(steps));

  std::vector<double> slab_peak(static_cast<std::size_t>(nx));
  std::vector<double> slab_energy(static_cast<std::size_t>(nx));
  const double scale = 4.0 * kPi * l2 / grid.dx;

  for (std::size_t n = 0; n < steps; ++n) {
    const double drive = n < pulse.size() ? pulse[n] : 0.0;
    parallel_for(nx, [&](std::int64_t ii) {
      const int i = static_cast<int>(ii);
      double peak = 0.0;
      for (int j = 0; j < ny; ++j) {
        const std::size_t row = pidx(i, j, 0);
        for (std::size_t p = row; p < row + static_cast<std::size_t>(nz); ++p) {
          const double sum = cur[p - 1] + cur[p + 1] + cur[p - sy] + cur[p + sy] + cur[p - sx] +
                             cur[p + sx];
          const double v = ca[p] * cur[p] + cl[p] * sum - cb[p] * prev[p];
          next[p] = v;
          peak = std::max(peak, std::abs(v));
        }
      }
      slab_peak[ii] = peak;
    });
    if (drive != 0.0) next[src_p] += drive * inv_m[src_p];

    double peak = std::abs(next[src_p]);
    for (double v : slab_peak) peak = std::max(peak, v);
    if (!std::isfinite(peak))
      throw Error(ErrorKind::numerical, "FDTD field became non-finite at step " + std::to_string(n));
    st.peak[n] = static_cast<float>(peak);
    if (n < st.source_offset_step) {
      st.source_peak = std::max(st.source_peak, peak);
    } else if (peak > kStabilityFactor * st.source_peak) {
      throw Error(ErrorKind::numerical, "FDTD field exceeded 10x the source-driven maximum at step " +
                                            std::to_string(n));
    }

    if (config.track_energy) {
      parallel_for(nx, [&](std::int64_t ii) {
        const int i = static_cast<int>(ii);
        double e = 0.0;
        for (int j = 0; j < ny; ++j) {
          const std::size_t row = pidx(i, j, 0);
          for (std::size_t p = row; p < row + static_cast<std::size_t>(nz); ++p) {
            if (!air[p]) continue;
            const double dt = next[p] - cur[p];
            e += 0.5 * dt * dt;
            for (std::size_t q : {p + 1, p + sy, p + sx}) {
              if (!air[q]) continue;
              e += 0.5 * l2 * (next[p] - next[q]) * (cur[p] - cur[q]);
            }
          }
        }
        slab_energy[ii] = e;
      });
      double e = 0.0;
      for (double v : slab_energy) e += v;
      st.energy[n] = e;
    }

    for (std::size_t r = 0; r < rcv_p.size(); ++r) run.raw[r][n] = scale * next[rcv_p[r]];
    std::swap(prev, cur);
    std::swap(cur, next);
  }

  // Post-processing: compensate, band-limit, resample.
  const double cutoff = std::min(st.usable_fmax, config.band_cap);
  const auto out_len = static_cast<std::size_t>(std::lround(config.duration * config.target_rate));
  run.rirs.resize(receivers.size());
  parallel_for(static_cast<std::int64_t>(receivers.size()), [&](std::int64_t r) {
    std::vector<double> x = config.compensate_pulse ? deconvolve(run.raw[r], pulse) : run.raw[r];
    x = dsp::lowpass(x, fs, cutoff);
    x = dsp::resample(x, fs, config.target_rate);
    x.resize(out_len, 0.0);
    Rir& rir = run.rirs[r];
    rir.samples = std::move(x);
    rir.sample_rate = config.target_rate;
    rir.engine = "fdtd";
    rir.band_limit = cutoff;
    rir.provenance.tool_version = kToolVersion;
    rir.provenance.config_hash = config_hash(config.to_json());
    nlohmann::json extra = {
        {"config", config.to_json()},
        {"fs_grid", fs},
        {"usable_fmax", st.usable_fmax},
        {"source_node", {src.node.x, src.node.y, src.node.z}},
        {"source_snap_offset", src.offset},
        {"receiver_node", {rcv[r].node.x, rcv[r].node.y, rcv[r].node.z}},
        {"receiver_snap_offset", rcv[r].offset}};
    if (config.band_cap > st.usable_fmax)
      extra["warnings"] = {"band_limit reduced from " + std::to_string(config.band_cap) + " Hz to usable " +
                           std::to_string(st.usable_fmax) + " Hz"};
    rir.provenance.extra = extra;
  });
  return run;
}

std::vector<Rir> render_rirs_fdtd(const RoomScene& scene, std::size_t source_idx,
                                  const FdtdConfig& config, WaveRunStats* stats) {
  config.validate();
  require_valid(scene);
  if (source_idx >= scene.sources.size())
    throw Error(ErrorKind::invalid_argument, "source index out of range");
  const auto& src = scene.sources[source_idx];
  if (src.directivity.kind != DirectivityKind::omni)
    throw Error(ErrorKind::incompatible, "FDTD point source is omnidirectional only");
  std::vector<Vec3> positions;
  for (const auto& r : scene.receivers) positions.push_back(r.position);
  const double c = scene.speed_of_sound;

  auto finish = [&](std::vector<Rir>& rirs) {
    for (std::size_t r = 0; r < rirs.size(); ++r) {
      rirs[r].provenance.scene = scene.name;
      rirs[r].provenance.source_id = src.id;
      rirs[r].provenance.receiver_id = scene.receivers[r].id;
    }
  };

  if (!config.per_band) {
    AdmittanceSpec spec;
    spec.uniform = config.admittance;
    auto run = run_fdtd(voxelize(scene, config.dx, spec), src.position, positions, config, c);
    if (stats) *stats = std::move(run.stats);
    finish(run.rirs);
    return std::move(run.rirs);
  }

  const double usable = estimate_usable_bandwidth(config, c);
  const auto bank = dsp::octave_filterbank(config.target_rate);
  std::vector<Rir> out;
  for (int b = 0; b < kNumBands; ++b) {
    if (kBandCenters[b] / std::numbers::sqrt2 >= usable) continue;
    AdmittanceSpec spec;
    spec.uniform = config.admittance;
    spec.band = b;
    auto run = run_fdtd(voxelize(scene, config.dx, spec), src.position, positions, config, c);
    if (out.empty()) {
      out = run.rirs;
      for (auto& r : out) std::fill(r.samples.begin(), r.samples.end(), 0.0);
      if (stats) *stats = run.stats;
    }
    for (std::size_t r = 0; r < out.size(); ++r) {
      const auto band = bank.apply(b, run.rirs[r].samples);
      for (std::size_t i = 0; i < band.size(); ++i) out[r].samples[i] += band[i];
    }
  }
  for (auto& r : out) r.provenance.extra["per_band"] = true;
  finish(out);
  return out;
}

}  // namespace roomsim::fdtd
