#include "roomsim/acoustics.hpp"

#include <cmath>
#include <limits>

#include "roomsim/error.hpp"

namespace roomsim {

namespace {

std::vector<double> backward_integral_db(std::span<const double> energy) {
  std::vector<double> edc(energy.size());
  double acc = 0.0;
  for (std::size_t i = energy.size(); i-- > 0;) {
    acc += energy[i];
    edc[i] = acc;
  }
  if (!(acc > 0.0)) throw Error(ErrorKind::degenerate, "decay curve of a silent response");
  for (double& v : edc) v = v > 0.0 ? 10.0 * std::log10(v / acc) : -std::numeric_limits<double>::infinity();
  return edc;
}

double fit_decay(const std::vector<double>& edc, double dt, double upper_db, double lower_db) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    if (edc[i] > upper_db) continue;
    if (edc[i] < lower_db) break;
    const double t = i * dt;
    sx += t;
    sy += edc[i];
    sxx += t * t;
    sxy += t * edc[i];
    ++n;
  }
  if (n < 2) throw Error(ErrorKind::degenerate, "decay range too short for a T60 fit");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) throw Error(ErrorKind::numerical, "non-decaying energy curve");
  return -60.0 / slope;
}

}  // namespace

std::vector<double> schroeder_decay_db(std::span<const double> rir) {
  std::vector<double> e(rir.size());
  for (std::size_t i = 0; i < rir.size(); ++i) e[i] = rir[i] * rir[i];
  return backward_integral_db(e);
}

double fit_t60(std::span<const double> rir, double sample_rate, double upper_db, double lower_db) {
  return fit_decay(schroeder_decay_db(rir), 1.0 / sample_rate, upper_db, lower_db);
}

double fit_t60_from_energy(std::span<const double> energy, double bin_width, double upper_db,
                           double lower_db) {
  return fit_decay(backward_integral_db(energy), bin_width, upper_db, lower_db);
}

}  // namespace roomsim
