#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace fwm {

using cplx = std::complex<double>;

// Units: time fs, angular frequency rad/fs, wavelength nm, energy eV.
inline constexpr double kSpeedOfLight = 299.792458;  // nm/fs
inline constexpr double kHbar = 0.6582119569;        // eV fs
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Uniform time axis, t_k = t0 + k * dt.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  std::size_t n = 0;

  double at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
  double span() const { return static_cast<double>(n) * dt; }

  /// Grid of n samples with t = 0 at index n/2.
  static TimeGrid centered(double dt, std::size_t n);

  /// Throws kInvalidArgument unless dt > 0, n >= 8 and n even.
  void validate() const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Uniform angular-frequency axis, w_k = w0 + k * dw.
struct FreqGrid {
  double w0 = 0.0;
  double dw = 1.0;
  std::size_t n = 0;

  double at(std::size_t k) const { return w0 + static_cast<double>(k) * dw; }

  void validate() const;

  friend bool operator==(const FreqGrid&, const FreqGrid&) = default;
};

/// Frequency grid conjugate to `grid`: dw = 2*pi / (n * dt), zero offset at
/// index n/2.
FreqGrid conjugate_grid(const TimeGrid& grid);

/// Time grid conjugate to `grid` with the given origin.
TimeGrid conjugate_grid(const FreqGrid& grid, double t0);

/// Same as above with t = 0 at index n/2.
TimeGrid conjugate_grid(const FreqGrid& grid);

/// Complex envelope on a time grid. The physical field is
/// Re[samples_k * exp(-i * omega0 * t_k)], so the temporal phase is
/// phi(t) = -arg(samples).
struct TimeField {
  TimeGrid grid;
  double omega0 = 0.0;
  std::vector<cplx> samples;

  void validate() const;
};

/// Complex spectral amplitudes E(w) = sqrt(S(w)) * exp(-i * phi(w)).
struct SpectralField {
  FreqGrid grid;
  std::vector<cplx> samples;

  void validate() const;
};

/// Real non-negative spectral intensity S(w).
struct Spectrum {
  FreqGrid grid;
  std::vector<double> intensity;

  void validate() const;
};

/// Relative tolerance used when comparing grids produced by different code
/// paths (CSV round trips, independent constructions).
bool same_grid(const FreqGrid& a, const FreqGrid& b, double rel_tol = 1e-9);
bool same_grid(const TimeGrid& a, const TimeGrid& b, double rel_tol = 1e-9);

double carrier_from_wavelength(double wavelength_nm);

// --- Transforms -----------------------------------------------------------

enum class FreqAxis {
  kOffset,    ///< frequencies relative to the carrier omega0
  kAbsolute,  ///< axis shifted by omega0
};

/// E(w_j) = sum_k s_k exp(+i w_j t_k) dt on the conjugate grid.
SpectralField time_to_freq(const TimeField& f, FreqAxis axis = FreqAxis::kOffset);

/// Inverse of time_to_freq for an offset-axis spectrum. The output grid is
/// conjugate to F.grid with t = 0 at index n/2 unless `t0` is given.
TimeField freq_to_time(const SpectralField& F, double omega0);
TimeField freq_to_time(const SpectralField& F, double omega0, double t0);

/// Samples of the DFT pair used above:
///   out_j = sum_k in_k exp(sign * i * y_j * x_k),  y_j = y0 + j * 2pi/(n dx).
/// `sign` is +1 or -1; no normalization is applied.
std::vector<cplx> uniform_dft(std::span<const cplx> in, double x0, double dx, double y0,
                              int sign);

// --- Spectra --------------------------------------------------------------

/// samples_k = sqrt(intensity_k) * exp(-i * phase_k).
SpectralField field_from_spectrum_and_phase(const Spectrum& s, std::span<const double> phase);

Spectrum intensity_of(const SpectralField& F);

/// Wrapped phase -arg(E) per bin.
std::vector<double> spectral_phase(const SpectralField& F);

// --- Pulses ---------------------------------------------------------------

/// Gaussian envelope exp(-2 ln2 (t-tc)^2 / fwhm^2) * exp(-i chirp (t-tc)^2)
/// scaled by `amplitude`, with fwhm the intensity FWHM. Throws
/// kGridTooShort when the envelope at either grid edge exceeds 1e-6 of the
/// peak.
TimeField make_gaussian_pulse(double center_wavelength_nm, double fwhm, double chirp_b,
                              double amplitude, const TimeGrid& grid, double center_time = 0.0);

/// Intensity FWHM of the spectrum of a Gaussian pulse with the given
/// temporal intensity FWHM and quadratic temporal phase.
double gaussian_spectral_fwhm(double fwhm, double chirp_b);

// --- Utilities ------------------------------------------------------------

/// Intensity FWHM of a sampled profile, linear interpolation at the
/// half-maximum crossings around the peak.
double intensity_fwhm(std::span<const double> intensity, double dx);

std::vector<double> abs2(std::span<const cplx> v);

}  // namespace fwm
