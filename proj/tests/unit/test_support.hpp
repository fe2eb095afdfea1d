#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "roomsim/fft.hpp"
#include "roomsim/scene.hpp"

namespace testing {

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

inline std::vector<double> tone(std::size_t n, double freq, double fs, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * M_PI * freq * i / fs);
  return x;
}

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("roomsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline roomsim::RoomScene shoebox(roomsim::Vec3 dims, double alpha, double scattering = 0.0) {
  roomsim::RoomScene s;
  s.name = "box";
  s.dims = dims;
  s.materials = {roomsim::Material::uniform("wall", alpha, scattering)};
  s.walls.fill("wall");
  return s;
}

// Analytic rigid-box mode frequencies sorted ascending, excluding (0,0,0).
inline std::vector<double> box_modes(roomsim::Vec3 dims, double c, double fmax) {
  std::vector<double> f;
  for (int n = 0; n * c / (2 * dims.x) <= fmax; ++n)
    for (int m = 0; m * c / (2 * dims.y) <= fmax; ++m)
      for (int l = 0; l * c / (2 * dims.z) <= fmax; ++l) {
        if (n + m + l == 0) continue;
        const double v = 0.5 * c * std::sqrt(std::pow(n / dims.x, 2) + std::pow(m / dims.y, 2) +
                                             std::pow(l / dims.z, 2));
        if (v <= fmax) f.push_back(v);
      }
  std::sort(f.begin(), f.end());
  return f;
}

// Spectral peaks of a Hann-windowed, mean-removed signal between fmin and
// fmax, stronger than `floor_db` below the largest one. Coarse maxima come
// from a zero-padded FFT and are refined by golden-section search on the DTFT.
struct Peak {
  double freq;
  double magnitude;
};

inline std::vector<Peak> spectral_peaks(std::vector<double> x, double fs, double fmin, double fmax,
                                        double floor_db = -40.0) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    x[i] = (x[i] - mean) * (0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1)));

  const std::size_t nfft = roomsim::dsp::next_pow2(8 * n);
  roomsim::dsp::RealFft fft(nfft);
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(x, X);
  const double df = fs / static_cast<double>(nfft);

  auto dtft = [&](double f) {
    std::complex<double> acc = 0.0;
    const std::complex<double> step = std::polar(1.0, -2.0 * M_PI * f / fs);
    std::complex<double> w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * w;
      w *= step;
      if (i % 1024 == 1023) w = std::polar(1.0, -2.0 * M_PI * f / fs * (i + 1));
    }
    return std::abs(acc);
  };

  std::vector<Peak> peaks;
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(fmin / df)));
  const auto hi = std::min(X.size() - 2, static_cast<std::size_t>(std::ceil(fmax / df)));
  for (std::size_t k = lo; k <= hi; ++k) {
    const double m = std::abs(X[k]);
    if (m > std::abs(X[k - 1]) && m >= std::abs(X[k + 1])) {
      double a = (k - 1) * df, b = (k + 1) * df;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = dtft(c), fd = dtft(d);
      for (int it = 0; it < 40; ++it) {
        if (fc > fd) {
          b = d, d = c, fd = fc;
          c = b - g * (b - a);
          fc = dtft(c);
        } else {
          a = c, c = d, fc = fd;
          d = a + g * (b - a);
          fd = dtft(d);
        }
      }
      const double f = 0.5 * (a + b);
      peaks.push_back({f, dtft(f)});
    }
  }
  double top = 0.0;
  for (const auto& p : peaks) top = std::max(top, p.magnitude);
  std::vector<Peak> kept;
  for (const auto& p : peaks)
    if (20.0 * std::log10(p.magnitude / top) >= floor_db) kept.push_back(p);
  return kept;
}

// Peak closest to `f` within a relative window, or nullopt.
inline std::optional<Peak> peak_near(const std::vector<Peak>& peaks, double f, double rel) {
  std::optional<Peak> best;
  for (const auto& p : peaks)
    if (std::abs(p.freq - f) <= rel * f && (!best || std::abs(p.freq - f) < std::abs(best->freq - f)))
      best = p;
  return best;
}

}  // namespace testing
