#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "fwm/error.hpp"
#include "fwm/field.hpp"

namespace testing {

/// Error code thrown by f, or nothing if it returned normally.
template <class F>
std::optional<fwm::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const fwm::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::vector<fwm::cplx> random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<fwm::cplx> v(n);
  for (auto& z : v) z = {g(rng), g(rng)};
  return v;
}

/// Reference 800 nm / 50 fs pulse on the 2048 x 2 fs retrieval grid, and a
/// signal with extra spectral phase 0.5 gdd w^2.
struct PulsePair {
  fwm::SpectralField reference;
  fwm::SpectralField signal;
  double omega0 = 0.0;
};

inline PulsePair pulse_pair(double gdd, double amplitude = 1.0, double dt = 2.0, std::size_t n = 2048) {
  const fwm::TimeGrid g = fwm::TimeGrid::centered(dt, n);
  const fwm::TimeField ref_t = fwm::make_gaussian_pulse(800.0, 50.0, 0.0, 1.0, g);
  PulsePair p{fwm::time_to_freq(ref_t), {}, ref_t.omega0};
  p.signal = p.reference;
  for (std::size_t k = 0; k < p.signal.grid.n; ++k) {
    const double w = p.signal.grid.at(k);
    p.signal.samples[k] *= amplitude * std::polar(1.0, -0.5 * gdd * w * w);
  }
  return p;
}

inline double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace testing
