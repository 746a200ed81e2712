#include "fwm/phase_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "fwm/error.hpp"
#include "fwm/parallel.hpp"
#include "fwm/unwrap.hpp"

namespace fwm {
namespace {

constexpr const char* kModule = "phase-analysis";

[[noreturn]] void fail(ErrorCode code, const std::string& what) { throw Error(code, kModule, what); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <class T>
void check_delays(const std::vector<std::pair<double, T>>& fields) {
  if (fields.empty()) fail(ErrorCode::kEmptyInput, "delay scan needs at least one field");
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (!(fields[i].first > fields[i - 1].first)) fail(ErrorCode::kInvalidArgument, "delays must be strictly increasing");
  }
}

}  // namespace

TemporalPhase unwrap_temporal_phase(const TimeField& f, double min_amplitude_frac) {
  f.validate();
  if (!(min_amplitude_frac > 0.0 && min_amplitude_frac < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "min_amplitude_frac must lie in (0, 1)");
  }
  const std::size_t n = f.samples.size();
  std::size_t peak = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(f.samples[k]) > std::abs(f.samples[peak])) peak = k;
  }
  const double amp_peak = std::abs(f.samples[peak]);
  if (!(amp_peak > 0.0)) fail(ErrorCode::kAllBelowThreshold, "field is zero everywhere");

  TemporalPhase out;
  out.seed = peak;
  out.mask.resize(n);
  auto valid = std::make_unique<bool[]>(n);
  std::vector<double> wrapped(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.mask[k] = std::abs(f.samples[k]) >= min_amplitude_frac * amp_peak;
    valid[k] = out.mask[k];
    wrapped[k] = -std::arg(f.samples[k]);
  }
  UnwrapResult u = unwrap_from_seed(wrapped, peak, {valid.get(), n});
  out.phase = std::move(u.phase);
  out.large_steps = std::move(u.large_steps);
  return out;
}

PhaseFit PhaseFit::reexpand(double new_origin) const {
  const double delta = new_origin - origin;
  Eigen::Matrix<double, 5, 5> m = Eigen::Matrix<double, 5, 5>::Zero();
  for (int j = 0; j < 5; ++j) {
    for (int k = j; k < 5; ++k) m(j, k) = binomial(k, j) * std::pow(delta, k - j);
  }
  const auto p = coefficients();
  const Eigen::Matrix<double, 5, 1> q = m * Eigen::Map<const Eigen::Matrix<double, 5, 1>>(p.data());
  PhaseFit out = *this;
  out.phi0 = q(0);
  out.a = q(1);
  out.b = q(2);
  out.c = q(3);
  out.d = q(4);
  out.covariance = m * covariance * m.transpose();
  for (int k = 0; k < 5; ++k) out.sigma[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, out.covariance(k, k)));
  out.origin = new_origin;
  return out;
}

PhaseFit fit_phase_polynomial(const TimeField& f, const PhaseFitOptions& opts) {
  const TemporalPhase tp = unwrap_temporal_phase(f, opts.min_amplitude_frac);
  const std::size_t n = f.samples.size();

  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < n; ++k) {
    if (!tp.mask[k]) continue;
    const double t = f.grid.at(k);
    if (opts.window && (t < opts.window->first || t > opts.window->second)) continue;
    idx.push_back(k);
  }
  constexpr int kTerms = 5;
  if (idx.size() < 10) {
    fail(ErrorCode::kInsufficientSupport, "phase fit needs >= 10 masked bins, have " + std::to_string(idx.size()));
  }

  const double amp_peak = std::abs(f.samples[tp.seed]);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k : idx) {
    const double amp = std::abs(f.samples[k]);
    num += amp * f.grid.at(k);
    den += amp;
  }
  const double origin = num / den;
  double scale = 0.0;
  for (std::size_t k : idx) scale = std::max(scale, std::abs(f.grid.at(k) - origin));
  if (!(scale > 0.0)) scale = 1.0;

  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd x(m, kTerms);
  Eigen::VectorXd y(m);
  Eigen::VectorXd w(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const std::size_t k = idx[static_cast<std::size_t>(r)];
    const double u = (f.grid.at(k) - origin) / scale;
    double p = 1.0;
    for (int c = 0; c < kTerms; ++c, p *= u) x(r, c) = p;
    y(r) = tp.phase[k];
    const double amp = std::abs(f.samples[k]) / amp_peak;
    w(r) = amp * amp;
  }
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  if (qr.rank() < kTerms) fail(ErrorCode::kRankDeficient, "phase fit design matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(sw.cwiseProduct(y));
  const Eigen::VectorXd resid = y - x * coef;

  const Eigen::MatrixXd bread = (xw.transpose() * xw).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(kTerms, kTerms);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double g = w(r) * resid(r);
    meat += (g * g) * x.row(r).transpose() * x.row(r);
  }
  const double dof_scale = static_cast<double>(m) / static_cast<double>(m - kTerms);
  const Eigen::MatrixXd cov_scaled = dof_scale * bread * meat * bread;

  PhaseFit fit;
  std::array<double, kTerms> p{};
  Eigen::Matrix<double, 5, 5> unscale = Eigen::Matrix<double, 5, 5>::Zero();
  for (int c = 0; c < kTerms; ++c) {
    unscale(c, c) = std::pow(scale, -c);
    p[static_cast<std::size_t>(c)] = coef(c) * unscale(c, c);
  }
  fit.phi0 = p[0];
  fit.a = p[1];
  fit.b = p[2];
  fit.c = p[3];
  fit.d = p[4];
  fit.covariance = unscale * cov_scaled * unscale;
  for (int c = 0; c < kTerms; ++c) {
    fit.sigma[static_cast<std::size_t>(c)] = std::sqrt(std::max(0.0, fit.covariance(c, c)));
  }
  fit.origin = origin;
  fit.window = {f.grid.at(idx.front()), f.grid.at(idx.back())};
  fit.rms_residual = std::sqrt(resid.squaredNorm() / static_cast<double>(m));
  fit.bins = idx.size();
  return fit;
}

std::string_view scheme_label(Scheme s) {
  return s == Scheme::kMagicAngle ? "magic-angle-54.7" : "dfwm-45";
}

Scheme parse_scheme(std::string_view label) {
  if (label == "dfwm-45" || label == "dfwm") return Scheme::kDfwm45;
  if (label == "magic-angle-54.7" || label == "magic-angle") return Scheme::kMagicAngle;
  throw Error(ErrorCode::kInvalidConfig, kModule, "unknown scheme '" + std::string(label) + "'");
}

template <class Payload>
void DelayScan<Payload>::validate() const {
  if (delays.size() != payload.size()) fail(ErrorCode::kLengthMismatch, "delay and payload counts differ");
  for (std::size_t i = 1; i < delays.size(); ++i) {
    if (!(delays[i] > delays[i - 1])) fail(ErrorCode::kInvalidArgument, "delays must be strictly increasing");
  }
}

template struct DelayScan<PhaseFit>;
template struct DelayScan<double>;

double median_magnitude(const TimeField& f) {
  std::vector<double> mag(f.samples.size());
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(f.samples[k]);
  return median(std::move(mag));
}

DelayScan<PhaseFit> chirp_vs_delay(const std::vector<std::pair<double, TimeField>>& fields,
                                   const ChirpScanOptions& opts) {
  check_delays(fields);
  double floor = 0.0;
  if (opts.floor) {
    floor = *opts.floor;
  } else {
    std::vector<double> levels;
    for (const auto& [tau, f] : fields) levels.push_back(median_magnitude(f));
    floor = opts.floor_factor * median(levels);
  }

  const std::size_t n = fields.size();
  std::vector<std::optional<PhaseFit>> fits(n);
  std::vector<std::string> reasons(n);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    const TimeField& f = fields[i].second;
    double peak = 0.0;
    for (const auto& s : f.samples) peak = std::max(peak, std::abs(s));
    if (!(peak > floor)) {
      reasons[i] = "peak |E| " + std::to_string(peak) + " below signal floor " + std::to_string(floor);
      return;
    }
    try {
      fits[i] = fit_phase_polynomial(f, opts.fit);
    } catch (const Error& e) {
      reasons[i] = std::string(error_name(e.code())) + ": " + e.what();
    }
  });

  DelayScan<PhaseFit> scan;
  scan.scheme = opts.scheme;
  for (std::size_t i = 0; i < n; ++i) {
    if (fits[i]) {
      scan.delays.push_back(fields[i].first);
      scan.payload.push_back(*fits[i]);
    } else {
      scan.dropped.push_back({fields[i].first, reasons[i]});
    }
  }
  return scan;
}

double integrated_magnitude(const SpectralField& F) {
  F.validate();
  double sum = 0.0;
  for (const auto& s : F.samples) sum += std::abs(s);
  return sum * F.grid.dw;
}

DelayScan<double> magnitude_vs_delay(const std::vector<std::pair<double, SpectralField>>& fields, Scheme scheme) {
  check_delays(fields);
  DelayScan<double> scan;
  scan.scheme = scheme;
  for (const auto& [tau, F] : fields) {
    scan.delays.push_back(tau);
    scan.payload.push_back(integrated_magnitude(F));
  }
  return scan;
}

}  // namespace fwm
