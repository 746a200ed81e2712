#pragma once

#include <optional>
#include <vector>

#include "fwm/field.hpp"
#include "fwm/interferogram.hpp"

namespace fwm {

enum class SidebandRule {
  kAuto,      ///< the lobe on the side of the interferogram's tau_r
  kPositive,  ///< lobe at positive pseudo-time
  kNegative,  ///< lobe at negative pseudo-time
  kExplicit,  ///< use `sideband_center` as given
};

struct RetrievalConfig {
  int filter_order = 6;                    ///< even, >= 2
  /// w in fs. Default: the widest window with gain <= 1e-6 where it must
  /// reject (DC zone edge, or 1.5 |center| when the DC terms are subtracted).
  std::optional<double> filter_width;
  SidebandRule sideband = SidebandRule::kAuto;
  double sideband_center = 0.0;            ///< fs, kExplicit only
  double min_amplitude_frac = 0.05;        ///< phase mask threshold on sqrt(S_S)
  /// Radius of the pseudo-time zone around zero that belongs to the DC lobe.
  /// Default: three reference-pulse durations (retrieve) or an estimate from
  /// the DC lobe width (standalone calls).
  std::optional<double> dc_exclusion;
  /// Subtract the residual linear spectral phase fitted on masked bins.
  bool refine_linear_phase = false;
  /// Remove least-squares scaled S_R and S_S from the interferogram before
  /// the transform (retrieve only). The DC lobe then vanishes and the default
  /// DC exclusion radius becomes 0.
  bool subtract_dc = true;

  void validate() const;
};

struct RetrievalDiagnostics {
  double sideband_center = 0.0;  ///< fs
  double filter_width = 0.0;     ///< fs
  int filter_order = 0;
  double dc_exclusion = 0.0;     ///< fs
  int shift_bins = 0;
  double fringe_contrast = 0.0;  ///< 2 |sideband peak| / |DC peak|
  bool dc_subtracted = false;
};

struct RetrievedField {
  SpectralField field;                 ///< E(w) of the signal
  std::vector<double> phase;           ///< unwrapped phi_S(w)
  std::vector<double> phase_difference;///< unwrapped phi_S - phi_R
  std::vector<bool> phase_mask;
  double residual_linear_phase = 0.0;  ///< fs, slope of phi_S - phi_R on the mask
  RetrievalDiagnostics diagnostics;
};

/// Transform of the interferogram intensity into the conjugate pseudo-time
/// domain, sum_k S_k exp(+i w_k t) dw. A delay tau_r puts the sideband
/// carrying exp(-i (phi_S - phi_R)) at t = +tau_r.
TimeField pseudo_time_spectrum(const Interferogram& ig);

/// Pseudo-time transform of the interferogram after removing the best
/// least-squares combination kappa_R S_R + kappa_S S_S.
TimeField fringe_pseudo_time(const Interferogram& ig, const SpectralField& reference,
                             const Spectrum& signal_spectrum);

/// DC-lobe radius estimate: three times the DC lobe's intensity FWHM
/// divided by sqrt(2) (field autocorrelation of a Gaussian is sqrt(2) wider).
double estimate_dc_exclusion(const TimeField& pt);

/// Centroid (fs) of the sideband lobe selected by `cfg.sideband` and the
/// optional hint. Throws kNoSideband when the best candidate is below three
/// times the median floor.
double locate_sideband(const TimeField& pt, const RetrievalConfig& cfg,
                       std::optional<double> tau_r_hint = std::nullopt);

/// Super-Gaussian window exp(-((t-c)^2 / (2 w^2))^(order/2)).
double super_gaussian(double x, double width, int order);

/// Effective filter width for `center` under `cfg`.
double filter_width_for(double center, const RetrievalConfig& cfg);

/// Windows the sideband and translates it by round(center/dt) bins so the
/// window center lands on t = 0. Throws kInvalidArgument for center == 0 and
/// kWindowOverlapsDc when the window's half-gain point falls inside the DC
/// exclusion zone.
TimeField filter_and_shift(const TimeField& pt, double center, const RetrievalConfig& cfg);

/// Full inversion: sideband -> phi_S - phi_R, plus the known reference
/// phase, combined with the separately measured signal spectrum.
RetrievedField retrieve(const Interferogram& ig, const SpectralField& reference,
                        const Spectrum& signal_spectrum, const RetrievalConfig& cfg = {});

}  // namespace fwm
