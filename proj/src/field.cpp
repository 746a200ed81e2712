#include "fwm/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fwm/error.hpp"

namespace fwm {
namespace {

constexpr const char* kModule = "field-core";

[[noreturn]] void fail(ErrorCode code, const std::string& what) {
  throw Error(code, kModule, what);
}

bool close_rel(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TimeGrid TimeGrid::centered(double dt, std::size_t n) {
  return TimeGrid{-static_cast<double>(n / 2) * dt, dt, n};
}

void TimeGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::kInvalidArgument, "time grid: dt must be > 0");
  if (!std::isfinite(t0)) fail(ErrorCode::kInvalidArgument, "time grid: t0 must be finite");
  if (n < 8 || n % 2 != 0) {
    fail(ErrorCode::kInvalidArgument, "time grid: n must be even and >= 8, got " + std::to_string(n));
  }
}

void FreqGrid::validate() const {
  if (!(dw > 0.0) || !std::isfinite(dw)) fail(ErrorCode::kInvalidArgument, "freq grid: dw must be > 0");
  if (!std::isfinite(w0)) fail(ErrorCode::kInvalidArgument, "freq grid: w0 must be finite");
  if (n < 8 || n % 2 != 0) {
    fail(ErrorCode::kInvalidArgument, "freq grid: n must be even and >= 8, got " + std::to_string(n));
  }
}

FreqGrid conjugate_grid(const TimeGrid& grid) {
  const double dw = kTwoPi / (static_cast<double>(grid.n) * grid.dt);
  return FreqGrid{-static_cast<double>(grid.n / 2) * dw, dw, grid.n};
}

TimeGrid conjugate_grid(const FreqGrid& grid, double t0) {
  const double dt = kTwoPi / (static_cast<double>(grid.n) * grid.dw);
  return TimeGrid{t0, dt, grid.n};
}

TimeGrid conjugate_grid(const FreqGrid& grid) {
  const double dt = kTwoPi / (static_cast<double>(grid.n) * grid.dw);
  return TimeGrid::centered(dt, grid.n);
}

void TimeField::validate() const {
  grid.validate();
  if (samples.size() != grid.n) fail(ErrorCode::kLengthMismatch, "time field: samples.size() != grid.n");
}

void SpectralField::validate() const {
  grid.validate();
  if (samples.size() != grid.n) fail(ErrorCode::kLengthMismatch, "spectral field: samples.size() != grid.n");
}

void Spectrum::validate() const {
  grid.validate();
  if (intensity.size() != grid.n) fail(ErrorCode::kLengthMismatch, "spectrum: intensity.size() != grid.n");
  for (double v : intensity) {
    if (!(v >= 0.0)) fail(ErrorCode::kInvalidArgument, "spectrum: intensity must be >= 0");
  }
}

bool same_grid(const FreqGrid& a, const FreqGrid& b, double rel_tol) {
  return a.n == b.n && close_rel(a.dw, b.dw, rel_tol) &&
         std::abs(a.w0 - b.w0) <= rel_tol * std::max(std::abs(a.w0), a.dw * static_cast<double>(a.n));
}

bool same_grid(const TimeGrid& a, const TimeGrid& b, double rel_tol) {
  return a.n == b.n && close_rel(a.dt, b.dt, rel_tol) &&
         std::abs(a.t0 - b.t0) <= rel_tol * std::max(std::abs(a.t0), a.dt * static_cast<double>(a.n));
}

double carrier_from_wavelength(double wavelength_nm) {
  if (!(wavelength_nm > 0.0)) fail(ErrorCode::kInvalidArgument, "wavelength must be > 0");
  return kTwoPi * kSpeedOfLight / wavelength_nm;
}

SpectralField time_to_freq(const TimeField& f, FreqAxis axis) {
  f.validate();
  SpectralField out{conjugate_grid(f.grid), {}};
  out.samples = uniform_dft(f.samples, f.grid.t0, f.grid.dt, out.grid.w0, +1);
  for (auto& v : out.samples) v *= f.grid.dt;
  if (axis == FreqAxis::kAbsolute) out.grid.w0 += f.omega0;
  return out;
}

TimeField freq_to_time(const SpectralField& F, double omega0) {
  return freq_to_time(F, omega0, conjugate_grid(F.grid).t0);
}

TimeField freq_to_time(const SpectralField& F, double omega0, double t0) {
  F.validate();
  TimeField out{conjugate_grid(F.grid, t0), omega0, {}};
  out.samples = uniform_dft(F.samples, F.grid.w0, F.grid.dw, t0, -1);
  const double norm = F.grid.dw / kTwoPi;
  for (auto& v : out.samples) v *= norm;
  return out;
}

SpectralField field_from_spectrum_and_phase(const Spectrum& s, std::span<const double> phase) {
  s.validate();
  if (phase.size() != s.grid.n) {
    fail(ErrorCode::kLengthMismatch, "field_from_spectrum_and_phase: phase length " +
                                         std::to_string(phase.size()) + " != " + std::to_string(s.grid.n));
  }
  SpectralField out{s.grid, std::vector<cplx>(s.grid.n)};
  for (std::size_t k = 0; k < s.grid.n; ++k) {
    out.samples[k] = std::polar(std::sqrt(s.intensity[k]), -phase[k]);
  }
  return out;
}

Spectrum intensity_of(const SpectralField& F) {
  return Spectrum{F.grid, abs2(F.samples)};
}

std::vector<double> spectral_phase(const SpectralField& F) {
  std::vector<double> out(F.samples.size());
  std::transform(F.samples.begin(), F.samples.end(), out.begin(),
                 [](cplx v) { return -std::arg(v); });
  return out;
}

TimeField make_gaussian_pulse(double center_wavelength_nm, double fwhm, double chirp_b,
                              double amplitude, const TimeGrid& grid, double center_time) {
  grid.validate();
  if (!(fwhm > 0.0)) fail(ErrorCode::kInvalidArgument, "make_gaussian_pulse: fwhm must be > 0");
  const double omega0 = carrier_from_wavelength(center_wavelength_nm);
  if (grid.span() < 4.0 * fwhm) {
    fail(ErrorCode::kGridTooShort, "make_gaussian_pulse: grid spans less than 4x fwhm");
  }
  const double a = 2.0 * std::numbers::ln2 / (fwhm * fwhm);
  auto envelope = [&](double t) {
    const double x = t - center_time;
    return std::exp(-a * x * x);
  };
  const double edge = std::max(envelope(grid.at(0)), envelope(grid.at(grid.n - 1)));
  if (edge > 1e-6) {
    fail(ErrorCode::kGridTooShort,
         "make_gaussian_pulse: envelope at grid edge is " + std::to_string(edge) + " of peak");
  }
  TimeField out{grid, omega0, std::vector<cplx>(grid.n)};
  for (std::size_t k = 0; k < grid.n; ++k) {
    const double x = grid.at(k) - center_time;
    out.samples[k] = amplitude * std::polar(envelope(grid.at(k)), -chirp_b * x * x);
  }
  return out;
}

double gaussian_spectral_fwhm(double fwhm, double chirp_b) {
  // exp(-alpha t^2), alpha = a + i b  ->  |E(w)|^2 ~ exp(-w^2 a / (2 (a^2 + b^2)))
  const double a = 2.0 * std::numbers::ln2 / (fwhm * fwhm);
  return 2.0 * std::sqrt(2.0 * std::numbers::ln2 * (a * a + chirp_b * chirp_b) / a);
}

double intensity_fwhm(std::span<const double> intensity, double dx) {
  if (intensity.empty()) return 0.0;
  const auto peak_it = std::max_element(intensity.begin(), intensity.end());
  const double half = 0.5 * *peak_it;
  const auto peak = static_cast<std::size_t>(peak_it - intensity.begin());
  if (half <= 0.0) return 0.0;

  std::size_t hi = peak;
  while (hi + 1 < intensity.size() && intensity[hi + 1] >= half) ++hi;
  std::size_t lo = peak;
  while (lo > 0 && intensity[lo - 1] >= half) --lo;

  double right = static_cast<double>(hi);
  if (hi + 1 < intensity.size()) {
    right += (intensity[hi] - half) / (intensity[hi] - intensity[hi + 1]);
  }
  double left = static_cast<double>(lo);
  if (lo > 0) {
    left -= (intensity[lo] - half) / (intensity[lo] - intensity[lo - 1]);
  }
  return (right - left) * dx;
}

std::vector<double> abs2(std::span<const cplx> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](cplx z) { return std::norm(z); });
  return out;
}

}  // namespace fwm
