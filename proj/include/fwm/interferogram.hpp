#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fwm/field.hpp"

namespace fwm {

/// Combined signal + reference spectrum and the reference delay that put
/// fringes on it.
struct Interferogram {
  Spectrum spectrum;
  double tau_r = 0.0;  // fs
  std::map<std::string, std::string> meta;

  void validate() const;
};

/// Phase-coherent background S_B(w), phi_B(w). Only used to stress the
/// forward model; measured data are assumed background free.
struct CoherentBackground {
  Spectrum spectrum;
  std::vector<double> phase;

  void validate() const;
};

struct DetectorNoise {
  double rms = 0.0;  ///< additive white noise, absolute intensity units
  std::uint64_t seed = 0;
};

/// Synthesizes |E_S + E_R exp(i w tau_r) (+ E_B)|^2 on the shared grid:
///
///   S = S_R + S_S + 2 sqrt(S_R S_S) cos(phi_S - phi_R + w tau_r)
///
/// plus, with a background, S_B and its two cross terms. The cross terms
/// carry the physical factor 2. `w` is the grid axis value of each bin.
/// Noise, when requested, is added after synthesis and the result is clipped
/// at zero.
Interferogram synthesize_interferogram(const SpectralField& signal, const SpectralField& reference,
                                       double tau_r,
                                       const std::optional<CoherentBackground>& background = std::nullopt,
                                       const std::optional<DetectorNoise>& noise = std::nullopt);

/// Nominal fringe spacing 2*pi/|tau_r| in rad/fs.
double fringe_period(double tau_r);

}  // namespace fwm
