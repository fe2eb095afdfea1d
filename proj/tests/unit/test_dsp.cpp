#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "roomsim/dsp.hpp"
#include "roomsim/error.hpp"
#include "roomsim/wav.hpp"
#include "test_support.hpp"

using namespace roomsim;
using testing::gaussian;
using testing::rel_l2;
using testing::tone;

namespace {

std::vector<double> naive_convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> y(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) y[i + j] += a[i] * b[j];
  return y;
}

// Least-squares amplitude of a sinusoid at `freq` over x[begin, end).
double tone_amplitude(const std::vector<double>& x, double freq, double fs, std::size_t begin,
                      std::size_t end) {
  double sc = 0, ss = 0, cc = 0, sx = 0, cx = 0;
  for (std::size_t i = begin; i < end; ++i) {
    const double s = std::sin(2 * M_PI * freq * i / fs), c = std::cos(2 * M_PI * freq * i / fs);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    sx += s * x[i];
    cx += c * x[i];
  }
  const double det = ss * cc - sc * sc;
  const double a = (sx * cc - cx * sc) / det, b = (cx * ss - sx * sc) / det;
  return std::hypot(a, b);
}

double db(double r) { return 20.0 * std::log10(r); }

}  // namespace

TEST_CASE("fft convolution matches the direct sum") {
  const auto a = gaussian(1000, 1), b = gaussian(1000, 2);
  const auto fast = dsp::convolve(a, b);
  const auto slow = naive_convolve(a, b);
  REQUIRE(fast.size() == 1999);
  CHECK(rel_l2(fast, slow) < 1e-9);

  const auto c = gaussian(37, 3), d = gaussian(5000, 4);
  CHECK(rel_l2(dsp::convolve(c, d), naive_convolve(c, d)) < 1e-9);
}

TEST_CASE("convolution identities and linearity") {
  const auto x = gaussian(300, 5), h = gaussian(120, 6), y = gaussian(300, 7);
  const std::vector<double> delta = {1.0};
  CHECK(rel_l2(dsp::convolve(x, delta), x) < 1e-12);
  CHECK(rel_l2(dsp::convolve(delta, h), h) < 1e-12);

  std::vector<double> mix(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
  const auto lhs = dsp::convolve(mix, h);
  const auto cx = dsp::convolve(x, h), cy = dsp::convolve(y, h);
  std::vector<double> rhs(lhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = 2.5 * cx[i] - 0.75 * cy[i];
  CHECK(rel_l2(lhs, rhs) < 1e-9);
}

TEST_CASE("fft_convolve checks sample rates") {
  Rir rir;
  rir.samples = {1.0, 0.5};
  rir.sample_rate = 16000;
  const auto sig = AudioBuffer::mono(gaussian(100, 8), 16000);
  const auto out = dsp::fft_convolve(sig, rir);
  CHECK(out.length() == 101);
  rir.sample_rate = 48000;
  CHECK_THROWS_AS(dsp::fft_convolve(sig, rir), Error);
}

TEST_CASE("lowpass keeps the passband and rejects 7.8 kHz") {
  const double fs = 16000;
  const auto x1 = tone(16000, 1000, fs);
  const auto y1 = dsp::lowpass(x1, fs, 7000);
  CHECK(std::abs(db(tone_amplitude(y1, 1000, fs, 2000, 14000))) < 0.1);

  const auto x2 = tone(16000, 7800, fs);
  const auto y2 = dsp::lowpass(x2, fs, 7000);
  CHECK(db(tone_amplitude(y2, 7800, fs, 2000, 14000)) <= -40.0);

  const auto taps = dsp::design_lowpass(fs, 7000);
  CHECK(taps.size() == 255);
  CHECK(db(dsp::fir_response(taps, fs, 7800)) <= -40.0);
  CHECK(std::abs(db(dsp::fir_response(taps, fs, 1000))) < 0.1);
}

TEST_CASE("lowpass impulse response is the centred filter") {
  const double fs = 16000;
  std::vector<double> x(1001, 0.0);
  x[500] = 1.0;
  const auto y = dsp::lowpass(x, fs, 3000);
  const auto taps = dsp::design_lowpass(fs, 3000);
  REQUIRE(y.size() == x.size());
  const std::size_t half = taps.size() / 2;
  for (std::size_t k = 0; k < taps.size(); ++k) CHECK(y[500 - half + k] == doctest::Approx(taps[k]));
  CHECK(std::max_element(y.begin(), y.end()) - y.begin() == 500);
  CHECK_THROWS_AS(dsp::lowpass(x, fs, 8000), Error);
}

TEST_CASE("biquad high-pass removes DC and keeps the passband") {
  const double fs = 16000;
  const std::vector<double> dc(16000, 1.0);
  const auto y = dsp::highpass_biquad(dc, fs, 20.0);
  CHECK(std::abs(y.back()) < 1e-6);
  const auto t = dsp::highpass_biquad(tone(16000, 1000, fs), fs, 20.0);
  CHECK(std::abs(db(tone_amplitude(t, 1000, fs, 4000, 16000))) < 0.01);
  // -3 dB at the cutoff
  const auto c = dsp::highpass_biquad(tone(64000, 20, fs), fs, 20.0);
  CHECK(db(tone_amplitude(c, 20, fs, 32000, 64000)) == doctest::Approx(-3.01).epsilon(0.01));
  CHECK_THROWS_AS(dsp::highpass_biquad(dc, fs, 0.0), Error);
}

TEST_CASE("resample 48 kHz to 16 kHz preserves a 1 kHz tone") {
  const auto x = tone(48000, 1000, 48000);
  const auto y = dsp::resample(x, 48000, 16000);
  CHECK(y.size() == 16000);
  CHECK(std::abs(db(tone_amplitude(y, 1000, 16000, 1000, 15000))) < 0.1);
  // and the phase: samples line up with the analytic tone
  const auto ref = tone(16000, 1000, 16000);
  std::vector<double> mid(y.begin() + 1000, y.begin() + 15000), rmid(ref.begin() + 1000, ref.begin() + 15000);
  CHECK(rel_l2(mid, rmid) < 0.02);
}

TEST_CASE("resample passband, identity and DC") {
  const auto x = gaussian(4000, 9);
  CHECK(rel_l2(dsp::resample(x, 16000, 16000), x) < 1e-9);

  const std::vector<double> dc(3000, 0.7);
  const auto y = dsp::resample(dc, 44100, 16000);
  for (std::size_t i = 200; i + 200 < y.size(); ++i) CHECK(y[i] == doctest::Approx(0.7).epsilon(1e-6));

  // 0.45 x min rate, non-integer ratio
  const double f = 0.44 * 16000;
  const auto t = tone(44100, f, 44100);
  const auto r = dsp::resample(t, 44100, 16000);
  CHECK(std::abs(db(tone_amplitude(r, f, 16000, 1000, r.size() - 1000))) < 0.1);
}

TEST_CASE("stft round trip and zero input") {
  const auto x = gaussian(16000, 10);
  const auto frames = dsp::stft(x, 16000);
  CHECK(frames.bins == 257);
  const auto y = dsp::istft(frames);
  REQUIRE(y.size() == x.size());
  CHECK(rel_l2(y, x) < 1e-6);

  const std::vector<double> zero(4000, 0.0);
  const auto fz = dsp::stft(zero, 16000);
  for (const auto& v : fz.data) CHECK(std::abs(v) == 0.0);

  // squared Hann sums to a constant at 75 % overlap, not at 50 %
  CHECK_THROWS_AS(dsp::check_cola({512, 256}), Error);
  CHECK_THROWS_AS(dsp::check_cola({512, 500}), Error);
  CHECK_NOTHROW(dsp::check_cola({1024, 256}));
}

TEST_CASE("stft of a tone concentrates in the nearest bin") {
  const double fs = 16000, f = 1234.0;
  const auto frames = dsp::stft(tone(8000, f, fs), fs);
  const std::size_t nearest = static_cast<std::size_t>(std::lround(f / fs * 512));
  const std::size_t t = frames.frames / 2;
  double total = 0, near = 0;
  for (std::size_t k = 0; k < frames.bins; ++k) {
    const double e = std::norm(frames.at(t, k));
    total += e;
    if (k + 1 >= nearest && k <= nearest + 1) near += e;
  }
  CHECK(near / total > 0.95);
}

TEST_CASE("octave filterbank is power complementary over 100-5000 Hz") {
  const double fs = 16000;
  const auto bank = dsp::octave_filterbank(fs);
  std::vector<double> sum(bank.taps(), 0.0);
  for (int b = 0; b < kNumBands; ++b)
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += bank.filter(b)[k];
  for (double f = 100; f <= 5000; f *= 1.05) {
    const double g = db(dsp::fir_response(sum, fs, f));
    CHECK(std::abs(g) < 1.5);
  }

  const auto noise = gaussian(1 << 16, 11);
  std::array<std::vector<double>, kNumBands> bands;
  bands.fill(noise);
  const auto y = bank.synthesize(bands);
  const double ratio = 10 * std::log10(dsp::energy(y) / dsp::energy(noise));
  CHECK(std::abs(ratio) < 1.5);
}

TEST_CASE("octave filterbank tone, silence and rate checks") {
  const double fs = 16000;
  const auto bank = dsp::octave_filterbank(fs);
  const auto x = tone(8000, 1000, fs);
  int best = -1;
  double best_e = -1;
  for (int b = 0; b < kNumBands; ++b) {
    const double e = dsp::energy(bank.apply(b, x));
    if (e > best_e) best_e = e, best = b;
  }
  CHECK(best == 3);

  const std::vector<double> silence(2000, 0.0);
  for (int b = 0; b < kNumBands; ++b) {
    const auto y = bank.apply(b, silence);
    CHECK(dsp::energy(y) == 0.0);
  }
  CHECK_THROWS_AS(dsp::octave_filterbank(8000), Error);
}

TEST_CASE("fractional impulse interpolates between samples") {
  std::vector<double> out(200, 0.0);
  dsp::add_fractional_impulse(out, 100.5, 1.0);
  CHECK(out[100] == doctest::Approx(out[101]));
  CHECK(out[100] > 0.6);
  std::vector<double> integer(200, 0.0);
  dsp::add_fractional_impulse(integer, 100.0, 2.0);
  CHECK(integer[100] == doctest::Approx(2.0));
  CHECK(std::abs(integer[101]) < 1e-12);
}

TEST_CASE("wav round trips in every format") {
  const auto dir = testing::scratch_dir("wav");
  auto x = gaussian(1000, 12, 0.2);
  AudioBuffer buf = AudioBuffer::mono(x, 22050);
  for (auto fmt : {WavFormat::pcm16, WavFormat::pcm24, WavFormat::float32}) {
    write_wav(dir / "x.wav", buf, fmt);
    const auto back = read_wav(dir / "x.wav");
    CHECK(back.sample_rate == 22050);
    REQUIRE(back.length() == x.size());
    const double tol = fmt == WavFormat::pcm16 ? 1e-4 : (fmt == WavFormat::pcm24 ? 1e-6 : 1e-7);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back.samples()[i] - x[i]) < tol);
  }
  CHECK_THROWS_AS(read_wav(dir / "nope.wav"), Error);
}
