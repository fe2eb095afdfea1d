#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace roomsim::dsp {

using cplx = std::complex<double>;

// Real-to-complex transform of fixed size backed by FFTW. One instance per
// thread; plans are created under a global lock.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // `in` is zero-padded (or truncated) to size().
  void forward(std::span<const double> in, std::span<cplx> out);
  // Unnormalized inverse: forward then inverse scales by size().
  void inverse(std::span<const cplx> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  void* spec_;
  void* plan_fwd_;
  void* plan_inv_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace roomsim::dsp
