#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fwm/field.hpp"
#include "fwm/phase_analysis.hpp"

namespace fwm {

// Dipoles and field amplitudes are in atomic units; mu.E is converted to eV.
inline constexpr double kHartreeEv = 27.211386245988;
inline constexpr double kAtomicIntensity = 3.50944758e16;  // W/cm^2 for a 1 a.u. peak field

/// Peak field (a.u.) of a linearly polarized pulse with cycle-averaged peak
/// intensity `tw_per_cm2`.
double field_au_from_intensity(double tw_per_cm2);

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr std::size_t kMaxLevels = 8;

struct LevelSystem {
  std::vector<double> energies;            ///< eV, ascending, energies[0] = 0
  std::array<Eigen::MatrixXcd, 3> dipole;  ///< a.u., x/y/z components, each Hermitian
  double dephasing_time = 300.0;           ///< T2, fs
  double relaxation_time = 300.0;          ///< T1, fs

  std::size_t size() const { return energies.size(); }
  CVec3 dipole_vector(std::size_t i, std::size_t j) const;
  void set_dipole(std::size_t i, std::size_t j, const CVec3& mu);  ///< sets (i,j) and its conjugate (j,i)
  void validate() const;
};

struct DipoleOverride {
  std::size_t i = 0;
  std::size_t j = 0;
  CVec3 mu = CVec3::Zero();
};

/// Ground state plus the first three excited singlets of bent CO2 at
/// 9.058, 10.731 and 12.916 eV, T1 = T2 = 300 fs. Dipoles are placeholders
/// of order 1 a.u. (see default_co2_dipoles) unless overridden.
LevelSystem build_co2_model(const std::vector<DipoleOverride>& overrides = {});

/// The shipped placeholder dipoles. Not computed values: ground to excited
/// 1.0, 0.8, 0.6 a.u. and excited to excited 0.5 a.u., all along
/// (1, 1, 1)/sqrt(3); no permanent dipoles.
std::vector<DipoleOverride> default_co2_dipoles();

struct Pulse {
  double wavelength_nm = 800.0;
  double fwhm = 50.0;       ///< intensity FWHM, fs
  double chirp = 0.0;       ///< b in exp(-i b (t - arrival)^2), fs^-2
  double field = 0.0;       ///< peak field amplitude, a.u.
  double arrival = 0.0;     ///< fs
  CVec3 polarization = CVec3::UnitX();  ///< unit (complex allowed for elliptical)

  double carrier() const { return carrier_from_wavelength(wavelength_nm); }
  /// Real lab-frame field Re[field g(t') exp(-i chirp t'^2) exp(-i w0 t) pol], t' = t - arrival.
  /// The carrier is referenced to absolute time: delays move the envelope
  /// while all pulses keep a common carrier phase.
  Vec3 at(double t) const;
  /// Distance from arrival at which the envelope falls to 1e-6.
  double guard_radius() const;
};

struct PulseSequence {
  std::array<Pulse, 3> pulses;  ///< gate 1, gate 2, probe
  Vec3 analyzer = Vec3::UnitX();

  void validate() const;
  void set_delay(double tau) { pulses[2].arrival = tau; }
  double delay() const { return pulses[2].arrival; }

  /// Two gates at t = 0 polarized at `gate_angle_deg` to the probe (x axis)
  /// in the x-y plane, probe at `tau`, analyzer parallel to the probe.
  static PulseSequence dfwm(double gate_field, double probe_field, double tau, double gate_angle_deg,
                            double wavelength_nm = 800.0, double fwhm = 50.0, double chirp = 0.0);
};

struct DensityState {
  Eigen::MatrixXcd rho;

  static DensityState ground(std::size_t n);
  double trace_drift() const;
  double hermiticity() const;
  double min_eigenvalue() const;
  /// Hermitian within 1e-10, trace 1 within 1e-8, eigenvalues >= -1e-8.
  void validate() const;
};

struct PolarizationTrace {
  TimeGrid grid;
  std::vector<CVec3> p;  ///< Tr[mu rho], a.u.

  std::vector<double> project(const Vec3& axis) const;
};

struct PropagationOptions {
  std::size_t output_stride = 25;  ///< states and invariant checks every this many steps
  bool keep_states = false;
  double trace_tolerance = 1e-6;
};

struct PropagationReport {
  double max_trace_drift = 0.0;
  double max_hermiticity = 0.0;
  double min_eigenvalue = 1.0;
  std::size_t steps = 0;
  std::size_t checks = 0;
};

struct PropagationResult {
  std::vector<DensityState> states;  ///< at grid.at(k * output_stride), if kept
  DensityState final_state;
  PolarizationTrace polarization;    ///< every grid sample
  PropagationReport report;
};

using FieldFunction = std::function<Vec3(double)>;

/// Largest step allowed for `sys`: 0.1 hbar / E_max.
double max_time_step(const LevelSystem& sys);

/// Fixed-step RK4 of d rho/dt = -(i/hbar)[H, rho] + L_D rho with
/// H = diag(energies) + mu . E(t), full carrier, no rotating-wave
/// approximation. Integrates over grid.n samples (grid.n - 1 steps).
PropagationResult propagate(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                            const DensityState& rho0, const PropagationOptions& opts = {});

/// Same integrator with an arbitrary real field (a.u.); no pulse coverage check.
PropagationResult propagate(const LevelSystem& sys, const FieldFunction& field, const TimeGrid& grid,
                            const DensityState& rho0, const PropagationOptions& opts = {});

struct ThirdOrderOptions {
  std::array<double, 3> eps{0.1, 0.1, 0.1};
  bool richardson_check = true;
  double richardson_tolerance = 0.01;
  double band_width_factor = 6.0;  ///< super-Gaussian width parameter in units of the input spectral FWHM
  std::size_t output_stride = 25;
  unsigned threads = 1;
};

/// Mixed central difference sum_s s1 s2 s3 P(s) / (8 eps1 eps2 eps3) over the
/// eight sign patterns of the scaled pulse amplitudes. Full resolution.
PolarizationTrace mixed_third_derivative(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                                         const std::array<double, 3>& eps, unsigned threads = 1);

/// Band-passes the real projected polarization around +omega0 with a 6th-order
/// super-Gaussian of half width `band_half_width` (rad/fs) and returns the complex
/// envelope (physical field Re[s exp(-i omega0 t)]) decimated by `stride`.
TimeField extract_envelope(std::span<const double> p, const TimeGrid& grid, double omega0,
                           double band_half_width, std::size_t stride);

struct ThirdOrderResult {
  TimeField signal;
  double richardson_change = 0.0;  ///< relative RMS change under eps -> eps/2 (0 if not checked)
};

/// Third-order signal field for `seq` projected on its analyzer. Throws
/// kRichardsonFailure when halving eps changes the signal by more than the
/// tolerance (relative RMS).
ThirdOrderResult third_order_signal(const LevelSystem& sys, const PulseSequence& seq, const TimeGrid& grid,
                                    const ThirdOrderOptions& opts = {});

/// Relative RMS difference ||a - b|| / ||b|| of two envelopes on one grid.
double relative_rms(const TimeField& a, const TimeField& b);

struct SimulatedDelay {
  double tau = 0.0;
  TimeField signal;                ///< third-order envelope
  double richardson_change = 0.0;
  double eps = 0.0;                ///< eps of pulse 1 actually used
};

struct ChirpScanResult {
  DelayScan<PhaseFit> scan;
  double input_chirp = 0.0;  ///< probe chirp, the reference line
  /// Every delay whose simulation succeeded, including ones the fit stage
  /// later dropped below the signal floor.
  std::vector<SimulatedDelay> simulated;
};

struct SimScanOptions {
  ThirdOrderOptions third_order;
  /// Fit and signal-floor settings, applied exactly as for measured fields.
  ChirpScanOptions analysis;
  unsigned threads = 1;
  /// A delay whose Richardson check fails is retried with all eps halved,
  /// at most this many times.
  unsigned max_eps_halvings = 2;
};

/// b(tau) of the simulated signal for each delay, fitted by chirp_vs_delay.
/// Per-delay simulation failures and floor drops are collected in scan.dropped.
ChirpScanResult simulate_chirp_scan(const LevelSystem& sys, const PulseSequence& base_seq,
                                    const std::vector<double>& delays, const TimeGrid& grid,
                                    const SimScanOptions& opts = {});

}  // namespace fwm
