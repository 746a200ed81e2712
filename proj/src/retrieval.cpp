#include "fwm/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "fwm/error.hpp"
#include "fwm/unwrap.hpp"

namespace fwm {
namespace {

constexpr const char* kModule = "tadpole-retrieval";

[[noreturn]] void fail(ErrorCode code, const std::string& what) { throw Error(code, kModule, what); }

std::size_t nearest_index(const TimeGrid& g, double t) {
  const double x = std::round((t - g.t0) / g.dt);
  return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(g.n - 1)));
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }


}  // namespace

TimeField fringe_pseudo_time(const Interferogram& ig, const SpectralField& reference, const Spectrum& signal_spectrum) {
  ig.validate();
  const FreqGrid& fg = ig.spectrum.grid;
  if (!same_grid(fg, reference.grid) || !same_grid(fg, signal_spectrum.grid)) {
    fail(ErrorCode::kGridMismatch, "interferogram, reference and signal spectrum must share one grid");
  }
  // Past pi/dw the sideband wraps around and lands on the wrong side of zero.
  if (std::abs(ig.tau_r) >= std::numbers::pi / fg.dw) {
    fail(ErrorCode::kGridTooShort, "|tau_r| exceeds the pseudo-time half range pi/dw; the sideband would alias");
  }
  // Least-squares scales for S_R and S_S so separately calibrated spectra
  // still cancel; the fast fringe term is nearly orthogonal to both.
  const auto n = static_cast<Eigen::Index>(fg.n);
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    a(k, 0) = std::norm(reference.samples[i]);
    a(k, 1) = signal_spectrum.intensity[i];
    y(k) = ig.spectrum.intensity[i];
  }
  const Eigen::Vector2d kappa = a.completeOrthogonalDecomposition().solve(y);
  const Eigen::VectorXd rest = y - a * kappa;
  std::vector<cplx> fringes(fg.n);
  for (std::size_t k = 0; k < fg.n; ++k) fringes[k] = rest(static_cast<Eigen::Index>(k));
  TimeField pt{conjugate_grid(fg), 0.0, {}};
  pt.samples = uniform_dft(fringes, fg.w0, fg.dw, pt.grid.t0, +1);
  for (auto& v : pt.samples) v *= fg.dw;
  return pt;
}

namespace {

}  // namespace

void RetrievalConfig::validate() const {
  if (filter_order < 2 || filter_order % 2 != 0) {
    fail(ErrorCode::kInvalidArgument, "filter_order must be even and >= 2");
  }
  if (!(min_amplitude_frac > 0.0 && min_amplitude_frac < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "min_amplitude_frac must lie in (0, 1)");
  }
  if (filter_width && !(*filter_width > 0.0)) fail(ErrorCode::kInvalidArgument, "filter_width must be > 0");
  if (dc_exclusion && !(*dc_exclusion >= 0.0)) fail(ErrorCode::kInvalidArgument, "dc_exclusion must be >= 0");
  if (sideband == SidebandRule::kExplicit && sideband_center == 0.0) {
    fail(ErrorCode::kInvalidArgument, "explicit sideband center must be nonzero");
  }
}

TimeField pseudo_time_spectrum(const Interferogram& ig) {
  ig.validate();
  const FreqGrid& fg = ig.spectrum.grid;
  const std::vector<cplx> s(ig.spectrum.intensity.begin(), ig.spectrum.intensity.end());
  TimeField pt{conjugate_grid(fg), 0.0, {}};
  pt.samples = uniform_dft(s, fg.w0, fg.dw, pt.grid.t0, +1);
  for (auto& v : pt.samples) v *= fg.dw;
  return pt;
}

double estimate_dc_exclusion(const TimeField& pt) {
  pt.validate();
  const std::size_t j0 = nearest_index(pt.grid, 0.0);
  const double half = 0.5 * std::norm(pt.samples[j0]);
  std::size_t hi = j0;
  while (hi + 1 < pt.grid.n && std::norm(pt.samples[hi + 1]) >= half) ++hi;
  std::size_t lo = j0;
  while (lo > 0 && std::norm(pt.samples[lo - 1]) >= half) --lo;
  const double fwhm = static_cast<double>(hi - lo + 1) * pt.grid.dt;
  return 3.0 * fwhm / std::numbers::sqrt2;
}

double locate_sideband(const TimeField& pt, const RetrievalConfig& cfg, std::optional<double> tau_r_hint) {
  cfg.validate();
  pt.validate();
  if (cfg.sideband == SidebandRule::kExplicit) return cfg.sideband_center;

  const double radius = cfg.dc_exclusion.value_or(estimate_dc_exclusion(pt));
  double side = 0.0;  // 0: either side
  switch (cfg.sideband) {
    case SidebandRule::kPositive: side = 1.0; break;
    case SidebandRule::kNegative: side = -1.0; break;
    default: side = tau_r_hint ? sign_of(*tau_r_hint) : 1.0; break;
  }

  const std::size_t n = pt.grid.n;
  std::vector<double> mag(n);
  for (std::size_t j = 0; j < n; ++j) mag[j] = std::abs(pt.samples[j]);
  auto in_region = [&](std::size_t j) {
    const double t = pt.grid.at(j);
    return std::abs(t) > radius && (side == 0.0 || t * side > 0.0);
  };

  // Only interior local maxima count, so the falling tail of the DC lobe at
  // the exclusion edge is never mistaken for a sideband.
  auto is_peak = [&](std::size_t j) {
    return j > 0 && j + 1 < n && in_region(j) && in_region(j - 1) && in_region(j + 1) && mag[j] >= mag[j - 1] &&
           mag[j] >= mag[j + 1];
  };
  std::size_t best = n;
  double region_max = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_peak(j) && mag[j] > region_max) {
      region_max = mag[j];
      best = j;
    }
  }
  const double floor = std::max(3.0 * median(mag), 1e-9 * *std::max_element(mag.begin(), mag.end()));
  if (best == n || region_max < floor) {
    fail(ErrorCode::kNoSideband, "no sideband above 3x the median floor outside the DC zone (radius " +
                                     std::to_string(radius) + " fs)");
  }

  if (tau_r_hint) {
    // Nearest significant local maximum to the hint.
    double best_dist = std::abs(pt.grid.at(best) - *tau_r_hint);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      if (!is_peak(j) || mag[j] < 0.1 * region_max || mag[j] < floor) continue;
      const double dist = std::abs(pt.grid.at(j) - *tau_r_hint);
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
  }

  // Intensity centroid of the lobe down to 10% of its peak amplitude.
  const double cut = 0.1 * mag[best];
  std::size_t lo = best;
  while (lo > 0 && in_region(lo - 1) && mag[lo - 1] >= cut) --lo;
  std::size_t hi = best;
  while (hi + 1 < n && in_region(hi + 1) && mag[hi + 1] >= cut) ++hi;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double w = mag[j] * mag[j];
    num += w * pt.grid.at(j);
    den += w;
  }
  return num / den;
}

double super_gaussian(double x, double width, int order) {
  const double q = x * x / (2.0 * width * width);
  return std::exp(-std::pow(q, 0.5 * order));
}

double filter_width_for(double center, const RetrievalConfig& cfg) {
  if (cfg.filter_width) return *cfg.filter_width;
  // Widest window whose gain has fallen to 1e-6 at the nearest structure that
  // must be rejected: the DC zone edge, or with the DC terms subtracted, the
  // middle of the conjugate sideband's half-axis.
  const double reach = cfg.subtract_dc ? 1.5 * std::abs(center) : std::abs(center) - cfg.dc_exclusion.value_or(0.0);
  const double w = reach / (std::numbers::sqrt2 * std::pow(std::log(1e6), 1.0 / cfg.filter_order));
  if (!(w > 0.0)) fail(ErrorCode::kWindowOverlapsDc, "sideband center lies inside the DC exclusion zone");
  return w;
}

TimeField filter_and_shift(const TimeField& pt, double center, const RetrievalConfig& cfg) {
  cfg.validate();
  pt.validate();
  if (center == 0.0 || !std::isfinite(center)) fail(ErrorCode::kInvalidArgument, "filter center must be nonzero");

  const double width = filter_width_for(center, cfg);
  const double radius = cfg.dc_exclusion.value_or(estimate_dc_exclusion(pt));
  const double half_gain = width * std::numbers::sqrt2 * std::pow(std::numbers::ln2, 1.0 / cfg.filter_order);
  if (std::abs(center) - half_gain < radius) {
    fail(ErrorCode::kWindowOverlapsDc,
         "filter window (center " + std::to_string(center) + " fs, half-gain radius " +
             std::to_string(half_gain) + " fs) reaches the DC zone of radius " + std::to_string(radius) + " fs");
  }

  const std::size_t n = pt.grid.n;
  const auto shift = static_cast<std::ptrdiff_t>(std::lround(center / pt.grid.dt));
  TimeField out{pt.grid, pt.omega0, std::vector<cplx>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::ptrdiff_t src_signed = (static_cast<std::ptrdiff_t>(j) + shift) % static_cast<std::ptrdiff_t>(n);
    const auto src = static_cast<std::size_t>(src_signed < 0 ? src_signed + static_cast<std::ptrdiff_t>(n) : src_signed);
    // Window evaluated at the unwrapped source time.
    const double t_src = pt.grid.at(j) + static_cast<double>(shift) * pt.grid.dt;
    out.samples[j] = pt.samples[src] * super_gaussian(t_src - center, width, cfg.filter_order);
  }
  return out;
}

RetrievedField retrieve(const Interferogram& ig, const SpectralField& reference, const Spectrum& signal_spectrum,
                        const RetrievalConfig& cfg_in) {
  cfg_in.validate();
  ig.validate();
  reference.validate();
  signal_spectrum.validate();
  if (ig.tau_r == 0.0) fail(ErrorCode::kZeroTauR, "interferogram tau_r must be nonzero for retrieval");
  const FreqGrid& fg = ig.spectrum.grid;
  if (!same_grid(fg, reference.grid) || !same_grid(fg, signal_spectrum.grid)) {
    fail(ErrorCode::kGridMismatch, "interferogram, reference and signal spectrum must share one grid");
  }

  RetrievalConfig cfg = cfg_in;
  TimeField pt;
  if (cfg.subtract_dc) {
    pt = fringe_pseudo_time(ig, reference, signal_spectrum);
    if (!cfg.dc_exclusion) cfg.dc_exclusion = 0.0;
    // With the DC terms gone the median floor only sees round-off, so judge
    // the remaining fringes against the scale of the raw data.
    const TimeField raw = pseudo_time_spectrum(ig);
    double raw_max = 0.0, fringe_max = 0.0;
    for (const auto& v : raw.samples) raw_max = std::max(raw_max, std::abs(v));
    for (const auto& v : pt.samples) fringe_max = std::max(fringe_max, std::abs(v));
    if (!(fringe_max > 1e-9 * raw_max)) {
      fail(ErrorCode::kNoSideband, "fringe term is below 1e-9 of the interferogram after removing the DC terms");
    }
  } else {
    pt = pseudo_time_spectrum(ig);
    if (!cfg.dc_exclusion) {
      const TimeField ref_t = freq_to_time(reference, 0.0);
      cfg.dc_exclusion = 3.0 * intensity_fwhm(abs2(ref_t.samples), ref_t.grid.dt);
    }
  }
  std::optional<double> hint;
  switch (cfg.sideband) {
    case SidebandRule::kAuto: hint = ig.tau_r; break;
    case SidebandRule::kPositive: hint = std::abs(ig.tau_r); break;
    case SidebandRule::kNegative: hint = -std::abs(ig.tau_r); break;
    case SidebandRule::kExplicit: break;
  }
  const double center = locate_sideband(pt, cfg, hint);
  const TimeField shifted = filter_and_shift(pt, center, cfg);
  const int shift_bins = static_cast<int>(std::lround(center / pt.grid.dt));

  std::vector<cplx> cross = uniform_dft(shifted.samples, pt.grid.t0, pt.grid.dt, fg.w0, -1);
  // The chosen lobe carries exp(-i w c_nom) with c_nom = sign(center)|tau_r|;
  // the integer shift removed shift_bins * dt of it.
  const double s = sign_of(center) * sign_of(ig.tau_r);
  const double c_nom = sign_of(center) * std::abs(ig.tau_r);
  const double residual = c_nom - static_cast<double>(shift_bins) * pt.grid.dt;
  const double norm = pt.grid.dt / kTwoPi;
  std::vector<double> dphi_wrapped(fg.n);
  for (std::size_t k = 0; k < fg.n; ++k) {
    cross[k] *= norm * std::polar(1.0, fg.at(k) * residual);
    dphi_wrapped[k] = -s * std::arg(cross[k]);
  }

  const auto& s_s = signal_spectrum.intensity;
  const std::size_t sig_peak = static_cast<std::size_t>(std::max_element(s_s.begin(), s_s.end()) - s_s.begin());
  RetrievedField out;
  out.phase_mask.assign(fg.n, false);
  const double amp_peak = std::sqrt(s_s[sig_peak]);
  for (std::size_t k = 0; k < fg.n; ++k) {
    out.phase_mask[k] = amp_peak > 0.0 && std::sqrt(s_s[k]) >= cfg.min_amplitude_frac * amp_peak;
  }
  auto chain = std::make_unique<bool[]>(fg.n);
  for (std::size_t k = 0; k < fg.n; ++k) chain[k] = out.phase_mask[k];
  chain[sig_peak] = true;
  std::vector<double> dphi = unwrap_from_seed(dphi_wrapped, sig_peak, {chain.get(), fg.n}).phase;

  // Residual linear phase (slope in fs) over the mask.
  {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < fg.n; ++k) {
      if (!out.phase_mask[k]) continue;
      const double x = fg.at(k);
      sw += 1.0;
      sx += x;
      sy += dphi[k];
      sxx += x * x;
      sxy += x * dphi[k];
    }
    const double det = sw * sxx - sx * sx;
    out.residual_linear_phase = (sw >= 2.0 && det > 0.0) ? (sw * sxy - sx * sy) / det : 0.0;
    if (cfg.refine_linear_phase) {
      for (std::size_t k = 0; k < fg.n; ++k) dphi[k] -= out.residual_linear_phase * fg.at(k);
    }
  }

  std::vector<double> phi_r_wrapped = spectral_phase(reference);
  std::size_t ref_peak = 0;
  for (std::size_t k = 1; k < fg.n; ++k) {
    if (std::norm(reference.samples[k]) > std::norm(reference.samples[ref_peak])) ref_peak = k;
  }
  const std::vector<double> phi_r = unwrap_from_seed(phi_r_wrapped, ref_peak).phase;

  out.phase.resize(fg.n);
  for (std::size_t k = 0; k < fg.n; ++k) out.phase[k] = dphi[k] + phi_r[k];
  out.phase_difference = std::move(dphi);
  out.field = field_from_spectrum_and_phase(signal_spectrum, out.phase);

  // DC peak of the unsubtracted transform is the integral of the interferogram.
  double dc_peak = 0.0;
  for (double v : ig.spectrum.intensity) dc_peak += v * fg.dw;
  const std::size_t jc = nearest_index(pt.grid, center);
  out.diagnostics = RetrievalDiagnostics{
      center,
      filter_width_for(center, cfg),
      cfg.filter_order,
      *cfg.dc_exclusion,
      shift_bins,
      dc_peak > 0.0 ? 2.0 * std::abs(pt.samples[jc]) / dc_peak : 0.0,
      cfg.subtract_dc,
  };
  return out;
}

}  // namespace fwm
