#include "fwm/lindblad.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fwm/error.hpp"
#include "fwm/parallel.hpp"
#include "fwm/retrieval.hpp"

namespace fwm {
namespace {

constexpr const char* kModule = "lindblad-nlo";

[[noreturn]] void fail(ErrorCode code, const std::string& what) { throw Error(code, kModule, what); }

using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxLevels, kMaxLevels>;

struct Integrator {
  std::size_t n = 0;
  Mat h0;
  std::array<Mat, 3> mu_ev;  // dipole * Hartree, so mu.E is in eV for E in a.u.
  std::array<Mat, 3> mu;
  std::vector<double> decay;  // population decay rate per level
  Mat gamma;                  // coherence decay rates

  explicit Integrator(const LevelSystem& sys) : n(sys.size()) {
    h0 = Mat::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) h0(i, i) = sys.energies[i];
    for (int c = 0; c < 3; ++c) {
      mu[c] = sys.dipole[c];
      mu_ev[c] = sys.dipole[c] * kHartreeEv;
    }
    decay.assign(n, 1.0 / sys.relaxation_time);
    decay[0] = 0.0;
    gamma = Mat::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) gamma(i, j) = std::max(1.0 / sys.dephasing_time, 0.5 * (decay[i] + decay[j]));
      }
    }
  }

  void rhs(const Mat& rho, const Vec3& e, Mat& out, Mat& h, Mat& a) const {
    h = h0;
    for (int c = 0; c < 3; ++c) {
      if (e[c] != 0.0) h += e[c] * mu_ev[c];
    }
    a.noalias() = h * rho;
    // [H, rho] = H rho - (H rho)^dagger for Hermitian H and rho.
    out = (a - a.adjoint()) * cplx(0.0, -1.0 / kHbar);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) out(i, j) -= gamma(i, j) * rho(i, j);
      }
    }
    for (std::size_t j = 1; j < n; ++j) {
      const cplx flow = decay[j] * rho(j, j);
      out(j, j) -= flow;
      out(0, 0) += flow;
    }
  }

  CVec3 polarization(const Mat& rho) const {
    CVec3 p;
    for (int c = 0; c < 3; ++c) p[c] = mu[c].cwiseProduct(rho.transpose()).sum();
    return p;
  }
};

void check_state(const Mat& rho, PropagationReport& rep, double trace_tol, double t) {
  const double drift = std::abs(rho.trace() - 1.0);
  rep.max_trace_drift = std::max(rep.max_trace_drift, drift);
  rep.max_hermiticity = std::max(rep.max_hermiticity, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
  const Eigen::MatrixXcd full = rho;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(full, Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
  ++rep.checks;
  if (drift > trace_tol) {
    fail(ErrorCode::kInvariantViolation,
         "trace drifted by " + std::to_string(drift) + " at t = " + std::to_string(t) + " fs");
  }
}

// `fields` holds E at t0 + j dt/2, j = 0 .. 2 (n - 1).
PropagationResult propagate_sampled(const LevelSystem& sys, const std::vector<Vec3>& fields, const TimeGrid& grid,
                                    const DensityState& rho0, const PropagationOptions& opts) {
  if (opts.output_stride == 0) fail(ErrorCode::kInvalidArgument, "output_stride must be >= 1");
  const Integrator in(sys);
  const std::size_t n = in.n;
  if (static_cast<std::size_t>(rho0.rho.rows()) != n || static_cast<std::size_t>(rho0.rho.cols()) != n) {
    fail(ErrorCode::kLengthMismatch, "initial state size does not match the level system");
  }
  rho0.validate();

  PropagationResult res;
  res.polarization.grid = grid;
  res.polarization.p.resize(grid.n);
  Mat rho = rho0.rho;
  Mat k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n), h(n, n), a(n, n);
  const double dt = grid.dt;

  auto record = [&](std::size_t k) {
    res.polarization.p[k] = in.polarization(rho);
    if (k % opts.output_stride == 0 || k + 1 == grid.n) {
      check_state(rho, res.report, opts.trace_tolerance, grid.at(k));
      if (opts.keep_states && k % opts.output_stride == 0) res.states.push_back(DensityState{rho});
    }
  };

  record(0);
  for (std::size_t k = 0; k + 1 < grid.n; ++k) {
    const Vec3& e0 = fields[2 * k];
    const Vec3& eh = fields[2 * k + 1];
    const Vec3& e1 = fields[2 * k + 2];
    in.rhs(rho, e0, k1, h, a);
    tmp = rho + (0.5 * dt) * k1;
    in.rhs(tmp, eh, k2, h, a);
    tmp = rho + (0.5 * dt) * k2;
    in.rhs(tmp, eh, k3, h, a);
    tmp = rho + dt * k3;
    in.rhs(tmp, e1, k4, h, a);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record(k + 1);
  }
  res.report.steps = grid.n - 1;
  res.final_state = DensityState{rho};
  return res;
}

void check_grid(const LevelSystem& sys, const TimeGrid& grid) {
  sys.validate();
  if (!(grid.dt > 0.0) || grid.n < 2) fail(ErrorCode::kInvalidArgument, "propagation grid needs dt > 0 and >= 2 samples");
  const double limit = max_time_step(sys);
  if (grid.dt > limit * (1.0 + 1e-12)) {
    fail(ErrorCode::kStepTooLarge, "dt = " + std::to_string(grid.dt) + " fs exceeds 0.1 hbar/E_max = " +
                                       std::to_string(limit) + " fs");
  }
}

std::vector<Vec3> sample_pulse(const Pulse& p, const TimeGrid& grid) {
  std::vector<Vec3> out(2 * grid.n - 1);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = p.at(grid.t0 + 0.5 * static_cast<double>(j) * grid.dt);
  return out;
}

void check_coverage(const PulseSequence& seq, const TimeGrid& grid) {
  const double t_end = grid.at(grid.n - 1);
  for (std::size_t i = 0; i < seq.pulses.size(); ++i) {
    const Pulse& p = seq.pulses[i];
    if (p.field == 0.0) continue;
    const double r = p.guard_radius();
    if (p.arrival - r < grid.t0 || p.arrival + r > t_end) {
      fail(ErrorCode::kGridTooShort, "pulse " + std::to_string(i + 1) + " (arrival " + std::to_string(p.arrival) +
                                         " fs) is not covered by the grid to its 1e-6 envelope");
    }
  }
}

}  // namespace

double field_au_from_intensity(double tw_per_cm2) {
  if (!(tw_per_cm2 >= 0.0)) fail(ErrorCode::kInvalidArgument, "intensity must be >= 0");
  return std::sqrt(tw_per_cm2 * 1e12 / kAtomicIntensity);
}

CVec3 LevelSystem::dipole_vector(std::size_t i, std::size_t j) const {
  return CVec3(dipole[0](i, j), dipole[1](i, j), dipole[2](i, j));
}

void LevelSystem::set_dipole(std::size_t i, std::size_t j, const CVec3& mu) {
  const auto n = static_cast<Eigen::Index>(size());
  for (auto& d : dipole) {
    if (d.rows() != n || d.cols() != n) d = Eigen::MatrixXcd::Zero(n, n);
  }
  if (i >= size() || j >= size()) fail(ErrorCode::kInvalidArgument, "dipole index out of range");
  if (i == j && mu.imag().cwiseAbs().maxCoeff() > 0.0) {
    fail(ErrorCode::kInvalidArgument, "permanent dipoles must be real");
  }
  for (int c = 0; c < 3; ++c) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    dipole[c](ii, jj) = mu[c];
    dipole[c](jj, ii) = std::conj(mu[c]);
  }
}

void LevelSystem::validate() const {
  const std::size_t n = size();
  if (n < 2 || n > kMaxLevels) fail(ErrorCode::kInvalidArgument, "level count must be in [2, 8]");
  if (energies[0] != 0.0) fail(ErrorCode::kInvalidArgument, "ground state energy must be 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(energies[i] >= energies[i - 1])) fail(ErrorCode::kInvalidArgument, "energies must be ascending");
  }
  for (const auto& d : dipole) {
    if (static_cast<std::size_t>(d.rows()) != n || static_cast<std::size_t>(d.cols()) != n) {
      fail(ErrorCode::kLengthMismatch, "dipole matrices must be n x n");
    }
    if ((d - d.adjoint()).cwiseAbs().maxCoeff() > 1e-12) fail(ErrorCode::kInvalidArgument, "dipole matrix is not Hermitian");
  }
  if (!(dephasing_time > 0.0) || !(relaxation_time > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "dephasing and relaxation times must be > 0");
  }
}

std::vector<DipoleOverride> default_co2_dipoles() {
  const CVec3 u = CVec3(1.0, 1.0, 1.0) / std::sqrt(3.0);
  return {
      {0, 1, 1.0 * u}, {0, 2, 0.8 * u}, {0, 3, 0.6 * u},
      {1, 2, 0.5 * u}, {1, 3, 0.5 * u}, {2, 3, 0.5 * u},
  };
}

LevelSystem build_co2_model(const std::vector<DipoleOverride>& overrides) {
  LevelSystem sys;
  sys.energies = {0.0, 9.058, 10.731, 12.916};
  sys.dephasing_time = 300.0;
  sys.relaxation_time = 300.0;
  for (auto& d : sys.dipole) d = Eigen::MatrixXcd::Zero(4, 4);
  for (const auto& o : default_co2_dipoles()) sys.set_dipole(o.i, o.j, o.mu);
  for (const auto& o : overrides) sys.set_dipole(o.i, o.j, o.mu);
  sys.validate();
  return sys;
}

Vec3 Pulse::at(double t) const {
  if (field == 0.0) return Vec3::Zero();
  const double x = t - arrival;
  const double a = 2.0 * std::numbers::ln2 / (fwhm * fwhm);
  const cplx s = field * std::polar(std::exp(-a * x * x), -chirp * x * x - carrier() * t);
  return (s * polarization).real();
}

double Pulse::guard_radius() const {
  return fwhm * std::sqrt(std::log(1e6) / (2.0 * std::numbers::ln2));
}

void PulseSequence::validate() const {
  for (std::size_t i = 0; i < pulses.size(); ++i) {
    const Pulse& p = pulses[i];
    const std::string which = "pulse " + std::to_string(i + 1) + ": ";
    if (!(p.fwhm > 0.0)) fail(ErrorCode::kInvalidArgument, which + "fwhm must be > 0");
    if (!(p.wavelength_nm > 0.0)) fail(ErrorCode::kInvalidArgument, which + "wavelength must be > 0");
    if (!std::isfinite(p.field) || !std::isfinite(p.chirp) || !std::isfinite(p.arrival)) {
      fail(ErrorCode::kInvalidArgument, which + "non-finite parameter");
    }
    if (std::abs(p.polarization.norm() - 1.0) > 1e-12) fail(ErrorCode::kInvalidArgument, which + "polarization must be a unit vector");
  }
  if (std::abs(analyzer.norm() - 1.0) > 1e-12) fail(ErrorCode::kInvalidArgument, "analyzer must be a unit vector");
  if (pulses[0].arrival != pulses[1].arrival) fail(ErrorCode::kInvalidArgument, "the two gate pulses must share an arrival time");
}

PulseSequence PulseSequence::dfwm(double gate_field, double probe_field, double tau, double gate_angle_deg,
                                  double wavelength_nm, double fwhm, double chirp) {
  const double th = gate_angle_deg * std::numbers::pi / 180.0;
  PulseSequence seq;
  const CVec3 gate_pol(std::cos(th), std::sin(th), 0.0);
  for (int i = 0; i < 2; ++i) seq.pulses[i] = Pulse{wavelength_nm, fwhm, chirp, gate_field, 0.0, gate_pol};
  seq.pulses[2] = Pulse{wavelength_nm, fwhm, chirp, probe_field, tau, CVec3::UnitX()};
  seq.analyzer = Vec3::UnitX();
  return seq;
}

DensityState DensityState::ground(std::size_t n) {
  DensityState s{Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  s.rho(0, 0) = 1.0;
  return s;
}

double DensityState::trace_drift() const { return std::abs(rho.trace() - 1.0); }

double DensityState::hermiticity() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double DensityState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void DensityState::validate() const {
  if (rho.rows() != rho.cols() || rho.rows() == 0) fail(ErrorCode::kInvalidArgument, "density matrix must be square");
  if (hermiticity() > 1e-10) fail(ErrorCode::kInvariantViolation, "density matrix is not Hermitian");
  if (trace_drift() > 1e-8) fail(ErrorCode::kInvariantViolation, "density matrix trace is not 1");
  if (min_eigenvalue() < -1e-8) fail(ErrorCode::kInvariantViolation, "density matrix has a negative eigenvalue");
}

std::vector<double> PolarizationTrace::project(const Vec3& axis) const {
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = (p[k].real().dot(axis));
  return out;
}

double max_time_step(const LevelSystem& sys) {
  const double e_max = *std::max_element(sys.energies.begin(), sys.energies.end());
  return e_max > 0.0 ? 0.1 * kHbar / e_max : std::numeric_limits<double>::infinity();
}

PropagationResult propagate(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                            const DensityState& rho0, const PropagationOptions& opts) {
  check_grid(sys, grid);
  seq.validate();
  check_coverage(seq, grid);
  std::vector<Vec3> fields(2 * grid.n - 1, Vec3::Zero());
  for (const Pulse& p : seq.pulses) {
    if (p.field == 0.0) continue;
    const auto s = sample_pulse(p, grid);
    for (std::size_t j = 0; j < fields.size(); ++j) fields[j] += s[j];
  }
  return propagate_sampled(sys, fields, grid, rho0, opts);
}

PropagationResult propagate(const LevelSystem& sys, const FieldFunction& field, const TimeGrid& grid,
                            const DensityState& rho0, const PropagationOptions& opts) {
  check_grid(sys, grid);
  std::vector<Vec3> fields(2 * grid.n - 1);
  for (std::size_t j = 0; j < fields.size(); ++j) fields[j] = field(grid.t0 + 0.5 * static_cast<double>(j) * grid.dt);
  return propagate_sampled(sys, fields, grid, rho0, opts);
}

PolarizationTrace mixed_third_derivative(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                                         const std::array<double, 3>& eps, unsigned threads) {
  check_grid(sys, grid);
  seq.validate();
  check_coverage(seq, grid);
  for (double e : eps) {
    if (!(e > 0.0)) fail(ErrorCode::kInvalidArgument, "finite-difference steps must be > 0");
  }
  std::array<std::vector<Vec3>, 3> base;
  for (std::size_t i = 0; i < 3; ++i) base[i] = sample_pulse(seq.pulses[i], grid);

  std::array<PolarizationTrace, 8> runs;
  PropagationOptions opts;
  opts.output_stride = 100;
  parallel_for(8, threads, [&](std::size_t pattern) {
    std::array<double, 3> scale{};
    for (std::size_t i = 0; i < 3; ++i) scale[i] = ((pattern >> i) & 1u ? -1.0 : 1.0) * eps[i];
    std::vector<Vec3> fields(base[0].size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      fields[j] = scale[0] * base[0][j] + scale[1] * base[1][j] + scale[2] * base[2][j];
    }
    runs[pattern] = propagate_sampled(sys, fields, grid, DensityState::ground(sys.size()), opts).polarization;
  });

  PolarizationTrace out{grid, std::vector<CVec3>(grid.n, CVec3::Zero())};
  const double denom = 8.0 * eps[0] * eps[1] * eps[2];
  // Sum in a fixed order so the result does not depend on thread scheduling.
  for (std::size_t pattern = 0; pattern < 8; ++pattern) {
    const int parity = std::popcount(static_cast<unsigned>(pattern)) % 2 == 0 ? 1 : -1;
    for (std::size_t k = 0; k < grid.n; ++k) out.p[k] += static_cast<double>(parity) * runs[pattern].p[k];
  }
  for (auto& v : out.p) v /= denom;
  return out;
}

TimeField extract_envelope(std::span<const double> p, const TimeGrid& grid, double omega0, double band_half_width,
                           std::size_t stride) {
  grid.validate();
  if (p.size() != grid.n) fail(ErrorCode::kLengthMismatch, "polarization length does not match the grid");
  if (stride == 0) fail(ErrorCode::kInvalidArgument, "stride must be >= 1");
  if (!(band_half_width > 0.0)) fail(ErrorCode::kInvalidArgument, "band width must be > 0");

  const FreqGrid fg = conjugate_grid(grid);
  std::vector<cplx> x(p.begin(), p.end());
  std::vector<cplx> spec = uniform_dft(x, grid.t0, grid.dt, fg.w0, +1);
  for (std::size_t k = 0; k < fg.n; ++k) spec[k] *= grid.dt * super_gaussian(fg.at(k) - omega0, band_half_width, 6);
  std::vector<cplx> z = uniform_dft(spec, fg.w0, fg.dw, grid.t0, -1);

  std::size_t m = (grid.n + stride - 1) / stride;
  m -= m % 2;
  TimeField out{TimeGrid{grid.t0, grid.dt * static_cast<double>(stride), m}, omega0, std::vector<cplx>(m)};
  const double norm = fg.dw / kTwoPi;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t k = j * stride;
    out.samples[j] = 2.0 * norm * z[k] * std::polar(1.0, omega0 * grid.at(k));
  }
  return out;
}

double relative_rms(const TimeField& a, const TimeField& b) {
  if (a.samples.size() != b.samples.size()) fail(ErrorCode::kLengthMismatch, "envelopes differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.samples.size(); ++k) {
    num += std::norm(a.samples[k] - b.samples[k]);
    den += std::norm(b.samples[k]);
  }
  return den > 0.0 ? std::sqrt(num / den) : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

ThirdOrderResult third_order_signal(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                                    const ThirdOrderOptions& opts) {
  grid.validate();
  const Pulse& probe = seq.pulses[2];
  const double band = opts.band_width_factor * gaussian_spectral_fwhm(probe.fwhm, probe.chirp);
  auto signal_at = [&](const std::array<double, 3>& eps) {
    const PolarizationTrace p3 = mixed_third_derivative(sys, seq, grid, eps, opts.threads);
    const std::vector<double> proj = p3.project(seq.analyzer);
    return extract_envelope(proj, grid, probe.carrier(), band, opts.output_stride);
  };

  ThirdOrderResult res;
  res.signal = signal_at(opts.eps);
  if (opts.richardson_check) {
    const TimeField half = signal_at({0.5 * opts.eps[0], 0.5 * opts.eps[1], 0.5 * opts.eps[2]});
    res.richardson_change = relative_rms(res.signal, half);
    if (res.richardson_change > opts.richardson_tolerance) {
      fail(ErrorCode::kRichardsonFailure, "halving eps changed the third-order signal by " +
                                              std::to_string(100.0 * res.richardson_change) + "% RMS");
    }
  }
  return res;
}

ChirpScanResult simulate_chirp_scan(const LevelSystem& sys, const PulseSequence& base_seq,
                                    const std::vector<double>& delays, const TimeGrid& grid,
                                    const SimScanOptions& opts) {
  if (delays.empty()) fail(ErrorCode::kEmptyInput, "delay list is empty");
  for (std::size_t i = 1; i < delays.size(); ++i) {
    if (!(delays[i] > delays[i - 1])) fail(ErrorCode::kInvalidArgument, "delays must be strictly increasing");
  }
  const std::size_t n = delays.size();
  std::vector<std::optional<TimeField>> signals(n);
  std::vector<double> change(n, 0.0);
  std::vector<double> eps_used(n, 0.0);
  std::vector<std::string> reasons(n);
  ThirdOrderOptions inner = opts.third_order;
  inner.threads = 1;
  parallel_for(n, opts.threads, [&](std::size_t i) {
    PulseSequence seq = base_seq;
    seq.set_delay(delays[i]);
    ThirdOrderOptions local = inner;
    for (unsigned attempt = 0;; ++attempt) {
      try {
        const ThirdOrderResult r = third_order_signal(sys, seq, grid, local);
        change[i] = r.richardson_change;
        eps_used[i] = local.eps[0];
        signals[i] = r.signal;
        break;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kRichardsonFailure && attempt < opts.max_eps_halvings) {
          for (double& v : local.eps) v *= 0.5;
          continue;
        }
        reasons[i] = std::string(error_name(e.code())) + ": " + e.what();
        break;
      }
    }
  });

  ChirpScanResult out;
  out.input_chirp = base_seq.pulses[2].chirp;
  std::vector<std::pair<double, TimeField>> fields;
  for (std::size_t i = 0; i < n; ++i) {
    if (!signals[i]) continue;
    fields.emplace_back(delays[i], *signals[i]);
    out.simulated.push_back({delays[i], std::move(*signals[i]), change[i], eps_used[i]});
  }
  if (fields.empty()) {
    out.scan.scheme = opts.analysis.scheme;
  } else {
    ChirpScanOptions analysis = opts.analysis;
    analysis.threads = opts.threads;
    out.scan = chirp_vs_delay(fields, analysis);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!reasons[i].empty()) out.scan.dropped.push_back({delays[i], reasons[i]});
  }
  std::sort(out.scan.dropped.begin(), out.scan.dropped.end(),
            [](const DroppedDelay& a, const DroppedDelay& b) { return a.tau < b.tau; });
  return out;
}

}  // namespace fwm
