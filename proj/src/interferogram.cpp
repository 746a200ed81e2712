#include "fwm/interferogram.hpp"

#include <cmath>
#include <random>

#include "fwm/error.hpp"

namespace fwm {
namespace {

constexpr const char* kModule = "interferogram-forward";

void require_tau(double tau_r) {
  if (!std::isfinite(tau_r) || tau_r == 0.0) {
    throw Error(ErrorCode::kZeroTauR, kModule, "reference delay tau_r must be finite and nonzero");
  }
}

}  // namespace

void Interferogram::validate() const {
  spectrum.validate();
  if (!std::isfinite(tau_r)) throw Error(ErrorCode::kInvalidArgument, kModule, "tau_r must be finite");
}

void CoherentBackground::validate() const {
  spectrum.validate();
  if (phase.size() != spectrum.grid.n) {
    throw Error(ErrorCode::kLengthMismatch, kModule, "background phase length != spectrum length");
  }
}

Interferogram synthesize_interferogram(const SpectralField& signal, const SpectralField& reference,
                                       double tau_r,
                                       const std::optional<CoherentBackground>& background,
                                       const std::optional<DetectorNoise>& noise) {
  signal.validate();
  reference.validate();
  require_tau(tau_r);
  if (!same_grid(signal.grid, reference.grid)) {
    throw Error(ErrorCode::kGridMismatch, kModule, "signal and reference grids differ");
  }
  if (background) {
    background->validate();
    if (!same_grid(background->spectrum.grid, signal.grid)) {
      throw Error(ErrorCode::kGridMismatch, kModule, "background grid differs from signal grid");
    }
  }

  const FreqGrid& grid = reference.grid;
  Interferogram ig{Spectrum{grid, std::vector<double>(grid.n)}, tau_r, {}};
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double w = grid.at(k);
    const double s_r = std::norm(reference.samples[k]);
    const double s_s = std::norm(signal.samples[k]);
    const double phi_r = -std::arg(reference.samples[k]);
    const double phi_s = -std::arg(signal.samples[k]);

    double v = s_r + s_s + 2.0 * std::sqrt(s_r * s_s) * std::cos(phi_s - phi_r + w * tau_r);
    if (background) {
      const double s_b = background->spectrum.intensity[k];
      const double phi_b = background->phase[k];
      // Same delay convention as the signal cross term: the background
      // travels with the signal.
      v += s_b + 2.0 * std::sqrt(s_s * s_b) * std::cos(phi_s - phi_b) +
           2.0 * std::sqrt(s_r * s_b) * std::cos(phi_b - phi_r + w * tau_r);
    }
    // The exact value is a modulus squared; round-off can dip below zero at
    // perfect destructive interference.
    ig.spectrum.intensity[k] = std::max(v, 0.0);
  }

  if (noise && noise->rms > 0.0) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> gauss(0.0, noise->rms);
    for (auto& v : ig.spectrum.intensity) v = std::max(v + gauss(rng), 0.0);
  }
  return ig;
}

double fringe_period(double tau_r) {
  require_tau(tau_r);
  return kTwoPi / std::abs(tau_r);
}

}  // namespace fwm
