#include "roomsim/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "roomsim/error.hpp"
#include "roomsim/fft.hpp"

namespace roomsim::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Kaiser window value for x in [-1, 1].
double kaiser_at(double x, double beta) {
  if (std::abs(x) > 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  if (std::min(a.size(), b.size()) <= 32) {
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
  }
  const std::size_t n = next_pow2(out_len);
  RealFft fft(n);
  std::vector<cplx> fa(fft.bins()), fb(fft.bins());
  fft.forward(a, fa);
  fft.forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  std::vector<double> out(n);
  fft.inverse(fa, out);
  out.resize(out_len);
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

AudioBuffer fft_convolve(const AudioBuffer& signal, const Rir& rir) {
  if (signal.sample_rate != rir.sample_rate)
    throw Error(ErrorKind::invalid_argument,
                "sample-rate mismatch: signal " + std::to_string(signal.sample_rate) + " Hz, rir " +
                    std::to_string(rir.sample_rate) + " Hz");
  AudioBuffer out;
  out.sample_rate = signal.sample_rate;
  for (const auto& ch : signal.channels) out.channels.push_back(convolve(ch, rir.samples));
  return out;
}

double kaiser_beta(double a) {
  if (a > 50.0) return 0.1102 * (a - 8.7);
  if (a >= 21.0) return 0.5842 * std::pow(a - 21.0, 0.4) + 0.07886 * (a - 21.0);
  return 0.0;
}

std::vector<double> kaiser_window(std::size_t n, double beta) {
  std::vector<double> w(n, 1.0);
  if (n < 2) return w;
  const double m = static_cast<double>(n - 1) / 2.0;
  for (std::size_t i = 0; i < n; ++i) w[i] = kaiser_at((static_cast<double>(i) - m) / m, beta);
  return w;
}

std::vector<double> hann_window(std::size_t n, bool periodic) {
  std::vector<double> w(n);
  const double denom = periodic ? static_cast<double>(n) : static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / denom);
  return w;
}

std::vector<double> design_lowpass(double fs, double cutoff, const LowpassDesign& design) {
  if (!(cutoff > 0.0) || cutoff >= fs / 2.0)
    throw Error(ErrorKind::invalid_argument, "low-pass cutoff " + std::to_string(cutoff) +
                                                 " Hz must lie in (0, Nyquist=" +
                                                 std::to_string(fs / 2.0) + ")");
  const std::size_t n = design.taps | 1;  // odd length keeps an integer group delay
  const auto win = kaiser_window(n, kaiser_beta(design.stopband_db));
  const double fc = cutoff / fs;
  const double m = static_cast<double>(n - 1) / 2.0;
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = 2.0 * fc * sinc(2.0 * fc * (i - m)) * win[i];
  const double dc = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= dc;
  return h;
}

double fir_response(std::span<const double> taps, double fs, double freq) {
  cplx acc{0.0, 0.0};
  const double w = 2.0 * kPi * freq / fs;
  for (std::size_t i = 0; i < taps.size(); ++i) acc += taps[i] * std::polar(1.0, -w * i);
  return std::abs(acc);
}

namespace {
std::vector<double> zero_phase(std::span<const double> x, std::span<const double> h) {
  const std::size_t delay = h.size() / 2;
  auto y = convolve(x, h);
  if (y.empty()) return std::vector<double>(x.size(), 0.0);
  return std::vector<double>(y.begin() + delay, y.begin() + delay + x.size());
}
}  // namespace

std::vector<double> lowpass(std::span<const double> x, double fs, double cutoff,
                            const LowpassDesign& design) {
  const auto h = design_lowpass(fs, cutoff, design);
  return zero_phase(x, h);
}

AudioBuffer lowpass(const AudioBuffer& signal, double cutoff, const LowpassDesign& design) {
  const auto h = design_lowpass(signal.sample_rate, cutoff, design);
  AudioBuffer out;
  out.sample_rate = signal.sample_rate;
  for (const auto& ch : signal.channels) out.channels.push_back(zero_phase(ch, h));
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

namespace {

constexpr double kResampleCutoff = 0.475;       // fraction of the lower rate
constexpr double kResampleHalfWidth = 40.0;     // in samples of the lower rate
constexpr double kResampleStopbandDb = 80.0;

struct SincKernel {
  double half_width;  // input samples
  double fc;          // cycles per input sample
  double beta;
  double operator()(double tau) const {
    if (std::abs(tau) >= half_width) return 0.0;
    return sinc(2.0 * fc * tau) * kaiser_at(tau / half_width, beta);
  }
};

}  // namespace

std::vector<double> highpass_biquad(std::span<const double> x, double sample_rate, double cutoff_hz) {
  if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0)
    throw Error(ErrorKind::invalid_argument, "high-pass cutoff must lie in (0, fs/2)");
  const double w = 2.0 * std::numbers::pi * cutoff_hz / sample_rate;
  const double alpha = std::sin(w) / std::sqrt(2.0);
  const double cw = std::cos(w), a0 = 1.0 + alpha;
  const double b0 = (1.0 + cw) / 2.0 / a0, b1 = -(1.0 + cw) / a0, b2 = b0;
  const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    y[n] = b0 * x[n] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1, x1 = x[n], y2 = y1, y1 = y[n];
  }
  return y;
}

std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out) {
  if (!(fs_in > 0.0) || !(fs_out > 0.0))
    throw Error(ErrorKind::invalid_argument, "sample rates must be positive");
  if (fs_in == fs_out) return {x.begin(), x.end()};
  if (x.empty()) return {};

  const double low = std::min(fs_in, fs_out);
  const SincKernel kernel{kResampleHalfWidth * fs_in / low, kResampleCutoff * low / fs_in,
                          kaiser_beta(kResampleStopbandDb)};
  const auto out_len =
      static_cast<std::size_t>(std::ceil(static_cast<double>(x.size()) * fs_out / fs_in - 1e-9));
  std::vector<double> y(out_len, 0.0);
  const auto n_in = static_cast<long>(x.size());
  const long reach = static_cast<long>(std::ceil(kernel.half_width));

  auto weights_at = [&](double frac, std::vector<double>& w) {
    // taps for input offsets -reach+1 .. reach relative to floor(t)
    w.resize(2 * reach);
    double sum = 0.0;
    for (long k = -reach + 1; k <= reach; ++k) {
      const double v = kernel(frac - static_cast<double>(k));
      w[k + reach - 1] = v;
      sum += v;
    }
    for (double& v : w) v /= sum;
  };
  auto apply = [&](std::size_t m, long base, const std::vector<double>& w) {
    double acc = 0.0;
    for (long k = -reach + 1; k <= reach; ++k) {
      const long n = base + k;
      if (n >= 0 && n < n_in) acc += w[k + reach - 1] * x[n];
    }
    y[m] = acc;
  };

  const bool integer_rates = fs_in == std::floor(fs_in) && fs_out == std::floor(fs_out);
  const long g = integer_rates ? std::gcd(static_cast<long>(fs_in), static_cast<long>(fs_out)) : 0;
  const long up = integer_rates ? static_cast<long>(fs_out) / g : 0;
  const long down = integer_rates ? static_cast<long>(fs_in) / g : 0;
  if (integer_rates && up <= 4096) {
    // polyphase: output m sits at input time m*down/up
    std::vector<std::vector<double>> table(up);
    for (long p = 0; p < up; ++p) weights_at(static_cast<double>(p) / up, table[p]);
    for (std::size_t m = 0; m < out_len; ++m) {
      const long num = static_cast<long>(m) * down;
      apply(m, num / up, table[num % up]);
    }
  } else {
    std::vector<double> w;
    for (std::size_t m = 0; m < out_len; ++m) {
      const double t = static_cast<double>(m) * fs_in / fs_out;
      const double base = std::floor(t);
      weights_at(t - base, w);
      apply(m, static_cast<long>(base), w);
    }
  }
  return y;
}

AudioBuffer resample(const AudioBuffer& signal, double target_rate) {
  AudioBuffer out;
  out.sample_rate = target_rate;
  for (const auto& ch : signal.channels)
    out.channels.push_back(resample(ch, signal.sample_rate, target_rate));
  return out;
}

// ---------------------------------------------------------------------------
// STFT

void check_cola(const StftSpec& spec) {
  if (spec.fft_size < 2 || spec.hop == 0 || spec.hop > spec.fft_size)
    throw Error(ErrorKind::invalid_argument, "invalid STFT spec");
  const auto w = hann_window(spec.fft_size, true);
  std::vector<double> sum(spec.hop, 0.0);
  for (std::size_t i = 0; i < spec.fft_size; ++i) sum[i % spec.hop] += w[i] * w[i];
  const auto [lo, hi] = std::minmax_element(sum.begin(), sum.end());
  if (*hi - *lo > 1e-9 * *hi)
    throw Error(ErrorKind::invalid_argument,
                "STFT spec (fft " + std::to_string(spec.fft_size) + ", hop " +
                    std::to_string(spec.hop) + ") violates the overlap-add condition");
}

StftFrames stft(std::span<const double> x, double fs, const StftSpec& spec) {
  check_cola(spec);
  const std::size_t n = spec.fft_size;
  const std::size_t pad = n - spec.hop;
  StftFrames out;
  out.spec = spec;
  out.signal_length = x.size();
  out.sample_rate = fs;
  out.bins = n / 2 + 1;
  out.frames = x.empty() ? 0 : (pad + x.size() - 1) / spec.hop + 1;
  out.data.assign(out.frames * out.bins, cplx{});
  const auto w = hann_window(n, true);
  RealFft fft(n);
  std::vector<double> frame(n);
  for (std::size_t t = 0; t < out.frames; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const long src = static_cast<long>(t * spec.hop + i) - static_cast<long>(pad);
      frame[i] = (src >= 0 && src < static_cast<long>(x.size())) ? x[src] * w[i] : 0.0;
    }
    fft.forward(frame, std::span<cplx>(out.data.data() + t * out.bins, out.bins));
  }
  return out;
}

std::vector<double> istft(const StftFrames& s) {
  const std::size_t n = s.spec.fft_size;
  const std::size_t pad = n - s.spec.hop;
  const std::size_t total = (s.frames == 0 ? 0 : (s.frames - 1) * s.spec.hop + n);
  std::vector<double> acc(total, 0.0), norm(total, 0.0), frame(n);
  const auto w = hann_window(n, true);
  RealFft fft(n);
  for (std::size_t t = 0; t < s.frames; ++t) {
    fft.inverse(std::span<const cplx>(s.data.data() + t * s.bins, s.bins), frame);
    for (std::size_t i = 0; i < n; ++i) {
      acc[t * s.spec.hop + i] += frame[i] / static_cast<double>(n) * w[i];
      norm[t * s.spec.hop + i] += w[i] * w[i];
    }
  }
  std::vector<double> y(s.signal_length, 0.0);
  for (std::size_t i = 0; i < s.signal_length && i + pad < total; ++i)
    y[i] = norm[i + pad] > 1e-12 ? acc[i + pad] / norm[i + pad] : 0.0;
  return y;
}

// ---------------------------------------------------------------------------
// Octave filterbank

namespace {

constexpr double kCrossoverHalfWidth = 0.25;  // octaves

// Smooth low-pass step in log frequency: 1 below the crossover band, 0 above.
double log_step(double freq, double crossover) {
  if (freq <= 0.0) return 1.0;
  const double u = std::log2(freq / crossover) / kCrossoverHalfWidth;
  if (u <= -1.0) return 1.0;
  if (u >= 1.0) return 0.0;
  return 0.5 * (1.0 - std::sin(0.5 * kPi * u));
}

double crossover(int k) { return kBandCenters[k] * std::numbers::sqrt2; }

}  // namespace

double OctaveFilterbank::band_gain(int band, double freq) {
  const double upper = band == kNumBands - 1 ? 1.0 : log_step(freq, crossover(band));
  const double lower = band == 0 ? 0.0 : log_step(freq, crossover(band - 1));
  return upper - lower;
}

OctaveFilterbank::OctaveFilterbank(double fs) : fs_(fs) {
  if (fs < kMinFilterbankRate)
    throw Error(ErrorKind::invalid_argument,
                "octave filterbank needs fs >= " + std::to_string(kMinFilterbankRate) + " Hz");
  const std::size_t half = static_cast<std::size_t>(std::lround(1024.0 * fs / 16000.0));
  const std::size_t taps = 2 * half + 1;
  const std::size_t grid = next_pow2(8 * taps);
  const auto win = hann_window(taps + 2, false);  // drop the zero end points
  RealFft fft(grid);
  std::vector<cplx> spec(fft.bins());
  std::vector<double> resp(grid);
  for (int b = 0; b < kNumBands; ++b) {
    for (std::size_t k = 0; k < spec.size(); ++k)
      spec[k] = band_gain(b, static_cast<double>(k) * fs / static_cast<double>(grid));
    fft.inverse(spec, resp);
    auto& h = filters_[b];
    h.resize(taps);
    for (std::size_t i = 0; i < taps; ++i) {
      const long lag = static_cast<long>(i) - static_cast<long>(half);
      const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : grid - static_cast<std::size_t>(-lag);
      h[i] = resp[idx] / static_cast<double>(grid) * win[i + 1];
    }
  }
}

std::vector<double> OctaveFilterbank::apply(int band, std::span<const double> x) const {
  return zero_phase(x, filters_[band]);
}

std::vector<double> OctaveFilterbank::synthesize(
    const std::array<std::vector<double>, kNumBands>& bands) const {
  const std::size_t len = bands[0].size();
  std::vector<double> out(len, 0.0);
  for (int b = 0; b < kNumBands; ++b) {
    if (bands[b].size() != len) throw Error(ErrorKind::invalid_argument, "band lengths differ");
    if (std::all_of(bands[b].begin(), bands[b].end(), [](double v) { return v == 0.0; })) continue;
    const auto y = apply(b, bands[b]);
    for (std::size_t i = 0; i < len; ++i) out[i] += y[i];
  }
  return out;
}

OctaveFilterbank octave_filterbank(double fs) { return OctaveFilterbank(fs); }

// ---------------------------------------------------------------------------

void add_fractional_impulse(std::vector<double>& out, double position, double amp, int taps) {
  const long n0 = std::lround(position);
  const double frac = position - static_cast<double>(n0);
  const long n = static_cast<long>(out.size());
  if (frac == 0.0 || taps <= 1) {
    if (n0 >= 0 && n0 < n) out[n0] += amp;
    return;
  }
  const int half = taps / 2;
  const double window_half = half + 1.0;
  for (long k = n0 - half; k <= n0 + half; ++k) {
    if (k < 0 || k >= n) continue;
    const double x = static_cast<double>(k) - position;
    const double w = 0.5 * (1.0 + std::cos(kPi * x / window_half));
    out[k] += amp * sinc(x) * w;
  }
}

double energy(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double rms_db(std::span<const double> x) {
  if (x.empty()) return -300.0;
  return 10.0 * std::log10(std::max(energy(x) / x.size(), 1e-30));
}

}  // namespace roomsim::dsp
