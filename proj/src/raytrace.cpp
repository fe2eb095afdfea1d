#include "roomsim/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/parallel.hpp"

namespace roomsim::rt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = 1e-9;
constexpr std::uint64_t kRaysPerChunk = 4096;

}  // namespace

void RtConfig::validate() const {
  if (n_rays < 1) throw Error(ErrorKind::invalid_argument, "n_rays must be >= 1");
  if (!(bin_width > 0.0)) throw Error(ErrorKind::invalid_argument, "bin_width must be > 0");
  if (!(receiver_radius > 0.0)) throw Error(ErrorKind::invalid_argument, "receiver_radius must be > 0");
  if (!(max_time > 0.0)) throw Error(ErrorKind::invalid_argument, "max_time must be > 0");
}

nlohmann::json RtConfig::to_json() const {
  return {{"n_rays", n_rays},          {"max_time", max_time},
          {"bin_width", bin_width},    {"seed", seed},
          {"receiver_radius", receiver_radius}, {"energy_floor_db", energy_floor_db}};
}

RtConfig RtConfig::from_json(const nlohmann::json& j) {
  RtConfig c;
  c.n_rays = j.value("n_rays", c.n_rays);
  c.max_time = j.value("max_time", c.max_time);
  c.bin_width = j.value("bin_width", c.bin_width);
  c.seed = j.value("seed", c.seed);
  c.receiver_radius = j.value("receiver_radius", c.receiver_radius);
  c.energy_floor_db = j.value("energy_floor_db", c.energy_floor_db);
  return c;
}

double Echogram::broadband(std::size_t receiver, std::size_t bin) const {
  double s = 0.0;
  for (const auto& band : receivers[receiver].energy) s += band[bin];
  return s / kNumBands;
}

double EnergyLedger::imbalance() const {
  const double in = emitted + splitting_adjustment;
  return std::abs(in - absorbed - truncated) / std::max(emitted, 1e-300);
}

// ---------------------------------------------------------------------------
// Geometry

namespace {

// Slab test; returns entry distance along `dir` or +inf.
double box_entry(const Box& b, Vec3 origin, Vec3 dir, int* face) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_face = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] <= b.min[a] || origin[a] >= b.max[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t0 = (b.min[a] - origin[a]) / dir[a];
    double t1 = (b.max[a] - origin[a]) / dir[a];
    int f0 = 2 * a, f1 = 2 * a + 1;
    if (t0 > t1) {
      std::swap(t0, t1);
      std::swap(f0, f1);
    }
    if (t0 > t_near) {
      t_near = t0;
      near_face = f0;
    }
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || t_near <= kEps) return std::numeric_limits<double>::infinity();
  if (face) *face = near_face;
  return t_near;
}

Vec3 face_normal(int face) {
  Vec3 n;
  n[face / 2] = (face % 2 == 0) ? -1.0 : 1.0;
  return n;
}

struct Intersection {
  double distance;
  Vec3 normal;  // into the air
  int box;      // -1 for room wall
  int wall;     // wall index when box < 0
};

Intersection intersect(const RoomScene& scene, Vec3 origin, Vec3 dir) {
  Intersection hit{std::numeric_limits<double>::infinity(), {}, -1, -1};
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0) {
      const double t = (scene.dims[a] - origin[a]) / dir[a];
      if (t < hit.distance) hit = {t, face_normal(2 * a), -1, 2 * a + 1};
    } else if (dir[a] < 0) {
      const double t = -origin[a] / dir[a];
      if (t < hit.distance) hit = {t, face_normal(2 * a + 1), -1, 2 * a};
    }
  }
  for (std::size_t k = 0; k < scene.boxes.size(); ++k) {
    int face = -1;
    const double t = box_entry(scene.boxes[k], origin, dir, &face);
    if (t < hit.distance) hit = {t, face_normal(face), static_cast<int>(k), -1};
  }
  // wall normals point into the room
  if (hit.box < 0 && hit.wall >= 0) hit.normal = -1.0 * face_normal(hit.wall);
  return hit;
}

void orthonormal_basis(Vec3 n, Vec3& t1, Vec3& t2) {
  const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  Vec3 t{helper.y * n.z - helper.z * n.y, helper.z * n.x - helper.x * n.z,
         helper.x * n.y - helper.y * n.x};
  t = (1.0 / t.norm()) * t;
  t1 = t;
  t2 = {n.y * t.z - n.z * t.y, n.z * t.x - n.x * t.z, n.x * t.y - n.y * t.x};
}

Vec3 around_axis(Vec3 axis, double cos_theta, double phi) {
  Vec3 t1, t2;
  orthonormal_basis(axis, t1, t2);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return sin_theta * std::cos(phi) * t1 + sin_theta * std::sin(phi) * t2 + cos_theta * axis;
}

const Material& surface_material(const RoomScene& scene, const Intersection& hit) {
  return hit.box >= 0 ? scene.material(scene.boxes[hit.box].material)
                      : scene.wall_material(hit.wall);
}

// Solid angle of a sphere of radius r seen from distance d.
double sphere_solid_angle(double r, double d) {
  if (d <= r) return 2.0 * kPi;
  return 2.0 * kPi * (1.0 - std::sqrt(1.0 - (r * r) / (d * d)));
}

}  // namespace

bool visible(const RoomScene& scene, Vec3 a, Vec3 b) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len == 0.0) return true;
  const Vec3 u = (1.0 / len) * d;
  for (const auto& box : scene.boxes) {
    const double t = box_entry(box, a, u, nullptr);
    if (t < len - kEps) return false;
    if (box.contains(a)) return false;
  }
  return true;
}

std::vector<Deposit> diffuse_rain(const SurfaceHit& hit, const RoomScene& scene,
                                  double receiver_radius) {
  std::vector<Deposit> out;
  const double area = kPi * receiver_radius * receiver_radius;
  for (std::size_t r = 0; r < scene.receivers.size(); ++r) {
    const Vec3 to = scene.receivers[r].position - hit.point;
    const double d = to.norm();
    if (d == 0.0) continue;
    const double cos_theta = hit.normal.dot(to) / d;
    if (cos_theta <= 0.0) continue;
    // step off the surface so the hit's own box does not occlude
    if (!visible(scene, hit.point + 1e-7 * hit.normal, scene.receivers[r].position)) continue;
    const double fraction =
        std::min(1.0, cos_theta * sphere_solid_angle(receiver_radius, d) / kPi);
    Deposit dep{r, hit.time + d / scene.speed_of_sound, {}};
    for (int b = 0; b < kNumBands; ++b) dep.energy[b] = hit.diffuse_energy[b] * fraction / area;
    out.push_back(dep);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tracing

namespace {

struct ChunkResult {
  std::vector<std::array<std::vector<double>, kNumBands>> bins;  // [receiver][band][bin]
  EnergyLedger ledger;
};

class Tracer {
 public:
  Tracer(const RoomScene& scene, const Source& src, const RtConfig& cfg, std::size_t num_bins)
      : scene_(scene), src_(src), cfg_(cfg), num_bins_(num_bins) {
    const bool cardioid = src.directivity.kind == DirectivityKind::cardioid;
    // integral of gain^2 over the sphere: 4 pi (omni), 4 pi / 3 (cardioid)
    ray_energy_ = (cardioid ? 4.0 * kPi / 3.0 : 4.0 * kPi) / static_cast<double>(cfg.n_rays);
    floor_ = ray_energy_ * std::pow(10.0, cfg.energy_floor_db / 10.0);
    area_ = kPi * cfg.receiver_radius * cfg.receiver_radius;
    for (const auto& m : scene.materials) {
      double s = 0.0;
      for (double v : m.scattering) s += v;
      mean_scatter_.push_back(s / kNumBands);
    }
  }

  ChunkResult run(std::uint64_t first, std::uint64_t last) const {
    ChunkResult res;
    res.bins.resize(scene_.receivers.size());
    for (auto& r : res.bins)
      for (auto& b : r) b.assign(num_bins_, 0.0);
    const std::uint64_t stream = splitmix64(cfg_.seed);
    for (std::uint64_t i = first; i < last; ++i) trace_ray(stream ^ i, res);
    return res;
  }

 private:
  void deposit(ChunkResult& res, std::size_t r, double time, const BandArray& e) const {
    if (time < 0.0 || time >= cfg_.max_time) return;
    const auto bin = static_cast<std::size_t>(time / cfg_.bin_width);
    if (bin >= num_bins_) return;
    for (int b = 0; b < kNumBands; ++b) res.bins[r][b][bin] += e[b];
  }

  Vec3 emit_direction(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    const double phi = 2.0 * kPi * u01(rng);
    if (src_.directivity.kind == DirectivityKind::cardioid) {
      // density proportional to ((1 + cos)/2)^2
      const double c = 2.0 * std::cbrt(u) - 1.0;
      return around_axis(src_.directivity.orientation, c, phi);
    }
    return around_axis({0, 0, 1}, 1.0 - 2.0 * u, phi);
  }

  void trace_ray(std::uint64_t stream, ChunkResult& res) const {
    std::mt19937_64 rng(stream);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double c = scene_.speed_of_sound;

    Vec3 pos = src_.position;
    Vec3 dir = emit_direction(rng);
    BandArray e;
    e.fill(ray_energy_);
    res.ledger.emitted += ray_energy_ * kNumBands;
    double time = 0.0;
    bool count_segment = false;  // first segment is the analytic direct path

    while (true) {
      const Intersection hit = intersect(scene_, pos, dir);
      if (!std::isfinite(hit.distance)) {
        // numerical escape; count as truncated
        for (double v : e) res.ledger.truncated += v;
        return;
      }
      if (count_segment) detect(res, pos, dir, hit.distance, time, e);

      const double arrival = time + hit.distance / c;
      if (arrival >= cfg_.max_time) {
        for (double v : e) res.ledger.truncated += v;
        return;
      }
      time = arrival;
      pos = pos + hit.distance * dir;

      const Material& mat = surface_material(scene_, hit);
      const double mean_s = hit.box >= 0 ? material_scatter(scene_.boxes[hit.box].material)
                                         : material_scatter(scene_.walls[hit.wall]);
      SurfaceHit sh{pos, hit.normal, time, {}, hit.box};
      double peak = 0.0;
      for (int b = 0; b < kNumBands; ++b) {
        const double absorbed = e[b] * mat.absorption[b];
        res.ledger.absorbed += absorbed;
        e[b] -= absorbed;
        sh.diffuse_energy[b] = e[b] * mat.scattering[b];
      }
      if (mean_s > 0.0)
        for (const auto& dep : diffuse_rain(sh, scene_, cfg_.receiver_radius))
          deposit(res, dep.receiver, dep.time, dep.energy);

      const bool diffuse = u01(rng) < mean_s;
      for (int b = 0; b < kNumBands; ++b) {
        const double share = diffuse ? mat.scattering[b] / mean_s
                                     : (1.0 - mat.scattering[b]) / (1.0 - mean_s);
        const double next = e[b] * share;
        res.ledger.splitting_adjustment += next - e[b];
        e[b] = next;
        peak = std::max(peak, e[b]);
      }
      if (diffuse) {
        const double cos_t = std::sqrt(u01(rng));
        dir = around_axis(hit.normal, cos_t, 2.0 * kPi * u01(rng));
      } else {
        dir = dir - 2.0 * dir.dot(hit.normal) * hit.normal;
      }
      count_segment = !diffuse;
      pos = pos + 1e-9 * hit.normal;

      if (peak < floor_) {
        for (double v : e) res.ledger.truncated += v;
        return;
      }
    }
  }

  // Receivers crossed by the segment collect energy / (pi R^2).
  void detect(ChunkResult& res, Vec3 origin, Vec3 dir, double length, double t0,
              const BandArray& e) const {
    const double r2 = cfg_.receiver_radius * cfg_.receiver_radius;
    for (std::size_t r = 0; r < scene_.receivers.size(); ++r) {
      const Vec3 to = scene_.receivers[r].position - origin;
      const double along = to.dot(dir);
      if (along <= 0.0 || along >= length) continue;
      const double miss2 = to.dot(to) - along * along;
      if (miss2 >= r2) continue;
      BandArray dep;
      for (int b = 0; b < kNumBands; ++b) dep[b] = e[b] / area_;
      deposit(res, r, t0 + along / scene_.speed_of_sound, dep);
    }
  }

  double material_scatter(const std::string& name) const {
    for (std::size_t m = 0; m < scene_.materials.size(); ++m)
      if (scene_.materials[m].name == name) return mean_scatter_[m];
    return 0.0;
  }

  const RoomScene& scene_;
  const Source& src_;
  const RtConfig& cfg_;
  std::size_t num_bins_;
  double ray_energy_;
  double floor_;
  double area_;
  std::vector<double> mean_scatter_;
};

}  // namespace

TraceResult trace(const RoomScene& scene, std::size_t source_idx, const RtConfig& config) {
  config.validate();
  require_valid(scene);
  if (source_idx >= scene.sources.size())
    throw Error(ErrorKind::invalid_argument, "source index out of range");
  const Source& src = scene.sources[source_idx];

  TraceResult out;
  auto& eg = out.echogram;
  eg.bin_width = config.bin_width;
  eg.num_bins = static_cast<std::size_t>(std::ceil(config.max_time / config.bin_width - 1e-9));
  eg.receivers.resize(scene.receivers.size());
  for (auto& r : eg.receivers)
    for (auto& b : r.energy) b.assign(eg.num_bins, 0.0);

  // analytic direct path
  for (std::size_t r = 0; r < scene.receivers.size(); ++r) {
    const Vec3 rp = scene.receivers[r].position;
    if (!visible(scene, src.position, rp)) continue;
    const double d = distance(src.position, rp);
    const double t = d / scene.speed_of_sound;
    const double g = src.directivity.gain(rp - src.position);
    auto& rec = eg.receivers[r];
    rec.direct_time = t;
    const auto bin = static_cast<std::size_t>(t / config.bin_width);
    for (int b = 0; b < kNumBands; ++b) {
      rec.direct_energy[b] = g * g / (d * d);
      if (bin < eg.num_bins) rec.energy[b][bin] += rec.direct_energy[b];
    }
  }

  const Tracer tracer(scene, src, config, eg.num_bins);
  const std::uint64_t chunks = (config.n_rays + kRaysPerChunk - 1) / kRaysPerChunk;
  std::vector<ChunkResult> results(chunks);
  parallel_for(static_cast<std::int64_t>(chunks), [&](std::int64_t k) {
    const std::uint64_t first = static_cast<std::uint64_t>(k) * kRaysPerChunk;
    results[k] = tracer.run(first, std::min(config.n_rays, first + kRaysPerChunk));
  });
  for (const auto& chunk : results) {
    for (std::size_t r = 0; r < eg.receivers.size(); ++r)
      for (int b = 0; b < kNumBands; ++b)
        for (std::size_t i = 0; i < eg.num_bins; ++i) eg.receivers[r].energy[b][i] += chunk.bins[r][b][i];
    out.ledger.emitted += chunk.ledger.emitted;
    out.ledger.absorbed += chunk.ledger.absorbed;
    out.ledger.truncated += chunk.ledger.truncated;
    out.ledger.splitting_adjustment += chunk.ledger.splitting_adjustment;
  }
#ifndef NDEBUG
  if (out.ledger.imbalance() > 1e-6)
    throw Error(ErrorKind::numerical, "ray energy bookkeeping out of balance");
#endif
  return out;
}

// ---------------------------------------------------------------------------

Rir echogram_to_rir(const Echogram& eg, std::size_t receiver, std::uint64_t seed,
                    double sample_rate) {
  if (receiver >= eg.receivers.size())
    throw Error(ErrorKind::invalid_argument, "receiver index out of range");
  const auto& rec = eg.receivers[receiver];
  for (const auto& band : rec.energy)
    for (double v : band)
      if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::numerical, "echogram not finite");

  const double fs = sample_rate;
  const auto len = static_cast<std::size_t>(std::lround(eg.num_bins * eg.bin_width * fs));
  auto bin_start = [&](std::size_t k) {
    return std::min(len, static_cast<std::size_t>(std::lround(k * eg.bin_width * fs)));
  };
  const auto bank = dsp::octave_filterbank(fs);
  const std::size_t direct_bin =
      rec.direct_time >= 0.0 ? static_cast<std::size_t>(rec.direct_time / eg.bin_width) : eg.num_bins;

  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(len);
  for (double& v : noise) v = gauss(rng);
  std::vector<double> noise_energy(eg.num_bins);
  for (std::size_t k = 0; k < eg.num_bins; ++k) {
    const std::size_t lo = bin_start(k), hi = bin_start(k + 1);
    noise_energy[k] = dsp::energy(std::span<const double>(noise.data() + lo, hi - lo));
  }

  std::vector<double> out(len, 0.0);
  for (int b = 0; b < kNumBands; ++b) {
    const auto& e = rec.energy[b];
    if (std::all_of(e.begin(), e.end(), [](double v) { return v == 0.0; })) continue;
    auto shaped = bank.apply(b, noise);
    for (std::size_t k = 0; k < eg.num_bins; ++k) {
      const std::size_t lo = bin_start(k), hi = bin_start(k + 1);
      double target = e[k];
      if (k == direct_bin) target = std::max(0.0, target - rec.direct_energy[b]);
      const double gain =
          (noise_energy[k] > 0.0 && target > 0.0) ? std::sqrt(target / noise_energy[k]) : 0.0;
      for (std::size_t i = lo; i < hi; ++i) shaped[i] *= gain;
    }
    if (direct_bin < eg.num_bins && rec.direct_energy[b] > 0.0) {
      std::vector<double> pulse(len, 0.0);
      dsp::add_fractional_impulse(pulse, rec.direct_time * fs, std::sqrt(rec.direct_energy[b]));
      const auto filtered = bank.apply(b, pulse);
      for (std::size_t i = 0; i < len; ++i) shaped[i] += filtered[i];
    }
    for (std::size_t i = 0; i < len; ++i) out[i] += shaped[i];
  }

  Rir rir;
  rir.samples = std::move(out);
  rir.sample_rate = fs;
  rir.engine = "rt";
  rir.band_limit = fs / 2.0;
  rir.provenance.seed = seed;
  rir.provenance.tool_version = kToolVersion;
  return rir;
}

}  // namespace roomsim::rt
