#pragma once

#include <span>
#include <vector>

namespace roomsim {

// Backward-integrated energy decay curve in dB, normalized to 0 dB at t = 0.
std::vector<double> schroeder_decay_db(std::span<const double> rir);

// Reverberation time from a least-squares line through the decay curve
// between `upper_db` and `lower_db` (default -5 / -35 dB), extrapolated to 60 dB.
double fit_t60(std::span<const double> rir, double sample_rate, double upper_db = -5.0,
               double lower_db = -35.0);

// Same fit on an energy histogram with uniform bin width.
double fit_t60_from_energy(std::span<const double> energy, double bin_width,
                           double upper_db = -5.0, double lower_db = -35.0);

}  // namespace roomsim
