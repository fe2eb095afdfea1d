#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "roomsim/audio.hpp"
#include "roomsim/scene.hpp"

namespace roomsim::dsp {

using cplx = std::complex<double>;

// Full linear convolution via FFT; length a.size() + b.size() - 1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

// Mono signal convolved with an RIR; sample rates must match.
AudioBuffer fft_convolve(const AudioBuffer& signal, const Rir& rir);

double kaiser_beta(double attenuation_db);
std::vector<double> kaiser_window(std::size_t n, double beta);
std::vector<double> hann_window(std::size_t n, bool periodic);

// Linear-phase windowed-sinc low-pass. Defaults: 255 taps, Kaiser window for
// 60 dB stopband. `cutoff_hz` is the -6 dB point.
struct LowpassDesign {
  std::size_t taps = 255;
  double stopband_db = 60.0;
};
std::vector<double> design_lowpass(double sample_rate, double cutoff_hz,
                                   const LowpassDesign& design = {});

// Magnitude of an FIR's frequency response at `freq_hz`.
double fir_response(std::span<const double> taps, double sample_rate, double freq_hz);

// Zero-phase application of design_lowpass: output is time-aligned with the
// input and has the same length. Applies to every channel.
AudioBuffer lowpass(const AudioBuffer& signal, double cutoff_hz, const LowpassDesign& design = {});
std::vector<double> lowpass(std::span<const double> x, double sample_rate, double cutoff_hz,
                            const LowpassDesign& design = {});

// Windowed-sinc resampler. Integer rate pairs use a precomputed polyphase
// table; other ratios evaluate the kernel per output sample. The anti-alias
// cutoff sits at 0.475 x min(rate); every phase is normalized to unit DC gain.
// Causal second-order Butterworth high-pass (bilinear transform).
std::vector<double> highpass_biquad(std::span<const double> x, double sample_rate, double cutoff_hz);

std::vector<double> resample(std::span<const double> x, double source_rate, double target_rate);
AudioBuffer resample(const AudioBuffer& signal, double target_rate);

// STFT with weighted overlap-add synthesis.
struct StftSpec {
  std::size_t fft_size = 512;
  std::size_t hop = 128;

  friend bool operator==(const StftSpec&, const StftSpec&) = default;
};

struct StftFrames {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<cplx> data;  // frame-major: data[t * bins + f]
  StftSpec spec;
  std::size_t signal_length = 0;
  double sample_rate = 0.0;

  cplx& at(std::size_t t, std::size_t f) { return data[t * bins + f]; }
  const cplx& at(std::size_t t, std::size_t f) const { return data[t * bins + f]; }
};

// Throws unless sum of squared periodic-Hann windows at the hop is constant.
void check_cola(const StftSpec& spec);
StftFrames stft(std::span<const double> x, double sample_rate, const StftSpec& spec = {});
std::vector<double> istft(const StftFrames& frames);

// Six zero-phase FIR band filters (125-4000 Hz centres). The magnitude
// responses form a partition of unity with half-octave raised-cosine
// crossovers in log frequency, so the bands sum to a unit impulse. The first
// band extends to DC and the last to Nyquist.
class OctaveFilterbank {
 public:
  explicit OctaveFilterbank(double sample_rate);

  double sample_rate() const { return fs_; }
  std::size_t taps() const { return filters_[0].size(); }
  std::size_t delay() const { return taps() / 2; }
  const std::vector<double>& filter(int band) const { return filters_[band]; }

  // Design magnitude of band `b` at `freq_hz`.
  static double band_gain(int band, double freq_hz);

  // Zero-phase filtering, output same length as input.
  std::vector<double> apply(int band, std::span<const double> x) const;

  // Sum over bands of each band-filtered input; inputs must share length.
  std::vector<double> synthesize(const std::array<std::vector<double>, kNumBands>& bands) const;

 private:
  double fs_;
  std::array<std::vector<double>, kNumBands> filters_;
};

inline constexpr double kMinFilterbankRate = 11314.0;
OctaveFilterbank octave_filterbank(double sample_rate);

// Adds amp * (Hann-windowed sinc centred at `position`) into `out`.
// Taps beyond the ends of `out` are dropped.
inline constexpr int kFractionalDelayTaps = 81;
void add_fractional_impulse(std::vector<double>& out, double position, double amp,
                            int taps = kFractionalDelayTaps);

double energy(std::span<const double> x);
double rms_db(std::span<const double> x);

}  // namespace roomsim::dsp
