#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fwm/field.hpp"

namespace fwm {

struct TemporalPhase {
  std::vector<double> phase;  ///< -arg(samples), unwrapped along t
  std::vector<bool> mask;     ///< |E| >= frac * peak
  std::size_t seed = 0;       ///< amplitude peak index
  std::vector<std::size_t> large_steps;
};

/// Unwraps -arg(E(t)) from the amplitude peak outward over masked bins.
/// Throws kAllBelowThreshold when the field is identically zero.
TemporalPhase unwrap_temporal_phase(const TimeField& f, double min_amplitude_frac);

/// phi(t) = phi0 + a (t - origin) + b (t - origin)^2 + c (t - origin)^3 + d (t - origin)^4
struct PhaseFit {
  double phi0 = 0.0;  ///< rad
  double a = 0.0;     ///< rad/fs
  double b = 0.0;     ///< rad/fs^2
  double c = 0.0;     ///< rad/fs^3
  double d = 0.0;     ///< rad/fs^4
  std::array<double, 5> sigma{};  ///< 1-sd uncertainties of phi0..d
  Eigen::Matrix<double, 5, 5> covariance = Eigen::Matrix<double, 5, 5>::Zero();
  double origin = 0.0;            ///< fs, expansion point (intensity centroid)
  std::pair<double, double> window{0.0, 0.0};  ///< fs, first/last masked time
  double rms_residual = 0.0;      ///< rad, unweighted over masked bins
  std::size_t bins = 0;

  std::array<double, 5> coefficients() const { return {phi0, a, b, c, d}; }

  /// Same polynomial expanded about `new_origin`, covariance propagated.
  PhaseFit reexpand(double new_origin) const;
};

struct PhaseFitOptions {
  double min_amplitude_frac = 0.05;
  /// Restrict the fit to this time interval (fs) in addition to the mask.
  std::optional<std::pair<double, double>> window;
};

/// |E|^2-weighted degree-4 least squares of the unwrapped temporal phase.
/// Uncertainties use the heteroskedasticity-consistent sandwich estimator,
/// so they stay calibrated when the weights do not match the noise.
PhaseFit fit_phase_polynomial(const TimeField& f, const PhaseFitOptions& opts = {});

enum class Scheme { kDfwm45, kMagicAngle };

std::string_view scheme_label(Scheme s);
Scheme parse_scheme(std::string_view label);

struct DroppedDelay {
  double tau = 0.0;
  std::string reason;
};

template <class Payload>
struct DelayScan {
  std::vector<double> delays;  ///< fs, strictly increasing
  std::vector<Payload> payload;
  Scheme scheme = Scheme::kDfwm45;
  std::vector<DroppedDelay> dropped;

  void validate() const;
};

struct ChirpScanOptions {
  PhaseFitOptions fit;
  Scheme scheme = Scheme::kDfwm45;
  /// Absolute |E| floor; when unset, floor_factor times the scan-wide noise
  /// estimate (median over delays of each field's median |E|).
  std::optional<double> floor;
  double floor_factor = 3.0;
  unsigned threads = 1;
};

/// Fits every delay. Delays below the floor or whose fit fails are listed in
/// `dropped`; an empty input or unsorted delays throw.
DelayScan<PhaseFit> chirp_vs_delay(const std::vector<std::pair<double, TimeField>>& fields,
                                   const ChirpScanOptions& opts = {});

/// sum_k |E(w_k)| dw
double integrated_magnitude(const SpectralField& F);

DelayScan<double> magnitude_vs_delay(const std::vector<std::pair<double, SpectralField>>& fields,
                                     Scheme scheme = Scheme::kDfwm45);

/// Median of |E| over the grid, used as a per-field noise level.
double median_magnitude(const TimeField& f);

}  // namespace fwm
