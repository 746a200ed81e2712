#include <numbers>

#include "doctest.h"

#include "fwm/interferogram.hpp"
#include "fwm/phase_analysis.hpp"
#include "fwm/retrieval.hpp"
#include "support.hpp"

using namespace fwm;
using testing::error_of;

namespace {

// Wrapped difference between retrieved and true phase on the mask.
std::vector<double> phase_errors(const RetrievedField& r, const SpectralField& truth) {
  const std::vector<double> tp = spectral_phase(truth);
  std::vector<double> e;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    if (r.phase_mask[k]) e.push_back(std::remainder(r.phase[k] - tp[k], 2.0 * std::numbers::pi));
  }
  return e;
}

double index_width(const TimeField& pt) { return pt.grid.dt; }

}  // namespace

TEST_SUITE("tadpole-retrieval") {

TEST_CASE("fringe-free input keeps all energy in the DC lobe") {
  auto p = testing::pulse_pair(0.0);
  for (auto& s : p.signal.samples) s = 0.0;
  const TimeField pt = pseudo_time_spectrum(synthesize_interferogram(p.signal, p.reference, 500.0));
  double total = 0.0, far = 0.0;
  for (std::size_t k = 0; k < pt.grid.n; ++k) {
    total += std::norm(pt.samples[k]);
    if (std::abs(pt.grid.at(k)) > 300.0) far += std::norm(pt.samples[k]);
  }
  CHECK(far < 1e-10 * total);
}

TEST_CASE("sideband position follows tau_r") {
  const auto p = testing::pulse_pair(0.0);
  RetrievalConfig cfg;
  cfg.dc_exclusion = 150.0;
  for (double tau : {500.0, -500.0}) {
    const TimeField pt = pseudo_time_spectrum(synthesize_interferogram(p.reference, p.reference, tau));
    CHECK(std::abs(locate_sideband(pt, cfg, tau) - tau) <= index_width(pt));
    RetrievalConfig side = cfg;
    side.sideband = tau > 0 ? SidebandRule::kPositive : SidebandRule::kNegative;
    CHECK(std::abs(locate_sideband(pt, side) - tau) <= index_width(pt));
  }
}

TEST_CASE("missing fringes raise no-sideband") {
  auto p = testing::pulse_pair(0.0);
  for (auto& s : p.signal.samples) s = 0.0;
  const TimeField pt = pseudo_time_spectrum(synthesize_interferogram(p.signal, p.reference, 500.0));
  RetrievalConfig cfg;
  cfg.dc_exclusion = 150.0;
  CHECK(error_of([&] { locate_sideband(pt, cfg, 500.0); }) == ErrorCode::kNoSideband);
}

TEST_CASE("hint picks the nearer of two sidebands") {
  const auto p = testing::pulse_pair(0.0);
  Interferogram a = synthesize_interferogram(p.reference, p.reference, 300.0);
  const Interferogram b = synthesize_interferogram(p.reference, p.reference, 600.0);
  for (std::size_t k = 0; k < a.spectrum.intensity.size(); ++k) a.spectrum.intensity[k] += b.spectrum.intensity[k];
  const TimeField pt = pseudo_time_spectrum(a);
  RetrievalConfig cfg;
  cfg.dc_exclusion = 150.0;
  CHECK(locate_sideband(pt, cfg, 300.0) == doctest::Approx(300.0).epsilon(0.005));
  CHECK(locate_sideband(pt, cfg, 600.0) == doctest::Approx(600.0).epsilon(0.005));
}

TEST_CASE("super-Gaussian window") {
  CHECK(super_gaussian(0.0, 10.0, 6) == 1.0);
  CHECK(super_gaussian(10.0, 10.0, 6) == doctest::Approx(std::exp(-0.125)).epsilon(1e-15));
  CHECK(super_gaussian(10.0, 10.0, 6) == doctest::Approx(0.8825).epsilon(1e-4));
  CHECK(super_gaussian(-10.0, 10.0, 2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
}

TEST_CASE("filter_and_shift preconditions") {
  const auto p = testing::pulse_pair(0.0);
  const TimeField pt = pseudo_time_spectrum(synthesize_interferogram(p.reference, p.reference, 500.0));
  RetrievalConfig cfg;
  cfg.dc_exclusion = 150.0;
  cfg.subtract_dc = false;
  CHECK(error_of([&] { filter_and_shift(pt, 0.0, cfg); }) == ErrorCode::kInvalidArgument);
  RetrievalConfig wide = cfg;
  wide.filter_width = 400.0;
  CHECK(error_of([&] { filter_and_shift(pt, 500.0, wide); }) == ErrorCode::kWindowOverlapsDc);

  const TimeField shifted = filter_and_shift(pt, 500.0, cfg);
  std::size_t peak = 0;
  for (std::size_t k = 0; k < shifted.grid.n; ++k) {
    if (std::abs(shifted.samples[k]) > std::abs(shifted.samples[peak])) peak = k;
  }
  CHECK(std::abs(shifted.grid.at(peak)) <= shifted.grid.dt);
}

TEST_CASE("config validation") {
  RetrievalConfig c;
  c.filter_order = 5;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidArgument);
  c = {};
  c.min_amplitude_frac = 1.0;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidArgument);
  c = {};
  c.sideband = SidebandRule::kExplicit;
  c.sideband_center = 0.0;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("identical pulses retrieve zero phase difference") {
  const auto p = testing::pulse_pair(0.0);
  const Interferogram ig = synthesize_interferogram(p.reference, p.reference, 500.0);
  const RetrievedField r = retrieve(ig, p.reference, intensity_of(p.reference));
  std::vector<double> d;
  double peak = 0.0;
  for (const auto& s : p.reference.samples) peak = std::max(peak, std::abs(s));
  for (std::size_t k = 0; k < r.phase_mask.size(); ++k) {
    CHECK(r.phase_mask[k] == (std::abs(p.reference.samples[k]) >= 0.05 * peak));
    if (!r.phase_mask[k]) continue;
    d.push_back(r.phase_difference[k]);
    CHECK(std::abs(r.field.samples[k]) == doctest::Approx(std::abs(p.reference.samples[k])).epsilon(1e-12));
  }
  CHECK(testing::rms(d) < 1e-6);
  CHECK(std::abs(r.residual_linear_phase) < 1e-3);
  CHECK(r.diagnostics.sideband_center == doctest::Approx(500.0).epsilon(1e-3));
  CHECK(r.diagnostics.filter_order == 6);
}

TEST_CASE("quadratic spectral phase round trip") {
  for (double gdd : {500.0, -500.0, 1500.0}) {
    const auto p = testing::pulse_pair(gdd);
    const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0);
    const RetrievedField r = retrieve(ig, p.reference, intensity_of(p.signal));
    CHECK(testing::rms(phase_errors(r, p.signal)) < 1e-3);
  }
}

TEST_CASE("retrieval ignores a global intensity scale") {
  const auto p = testing::pulse_pair(700.0);
  Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0);
  const RetrievedField a = retrieve(ig, p.reference, intensity_of(p.signal));
  for (double& v : ig.spectrum.intensity) v *= 37.5;
  const RetrievedField b = retrieve(ig, p.reference, intensity_of(p.signal));
  for (std::size_t k = 0; k < a.phase.size(); ++k) {
    if (a.phase_mask[k]) CHECK(std::abs(a.phase[k] - b.phase[k]) <= 1e-12);
  }
}

TEST_CASE("zero background gives a bit-identical retrieval") {
  const auto p = testing::pulse_pair(700.0);
  const Interferogram plain = synthesize_interferogram(p.signal, p.reference, 500.0);
  CoherentBackground bg{Spectrum{p.signal.grid, std::vector<double>(p.signal.grid.n, 0.0)},
                        std::vector<double>(p.signal.grid.n, 0.0)};
  const Interferogram full = synthesize_interferogram(p.signal, p.reference, 500.0, bg);
  const RetrievedField a = retrieve(plain, p.reference, intensity_of(p.signal));
  const RetrievedField b = retrieve(full, p.reference, intensity_of(p.signal));
  CHECK(a.phase == b.phase);
  CHECK(a.field.samples == b.field.samples);
}

TEST_CASE("either sideband gives the same phase") {
  const auto p = testing::pulse_pair(900.0);
  const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0);
  RetrievalConfig pos, neg;
  pos.sideband = SidebandRule::kPositive;
  neg.sideband = SidebandRule::kNegative;
  const RetrievedField a = retrieve(ig, p.reference, intensity_of(p.signal), pos);
  const RetrievedField b = retrieve(ig, p.reference, intensity_of(p.signal), neg);
  CHECK(b.diagnostics.sideband_center == doctest::Approx(-500.0).epsilon(1e-3));
  for (std::size_t k = 0; k < a.phase.size(); ++k) {
    if (a.phase_mask[k]) CHECK(std::abs(std::remainder(a.phase[k] - b.phase[k], 2.0 * std::numbers::pi)) < 1e-6);
  }
}

TEST_CASE("negative reference delay") {
  const auto p = testing::pulse_pair(600.0);
  const Interferogram ig = synthesize_interferogram(p.signal, p.reference, -500.0);
  const RetrievedField r = retrieve(ig, p.reference, intensity_of(p.signal));
  CHECK(r.diagnostics.sideband_center == doctest::Approx(-500.0).epsilon(1e-3));
  CHECK(testing::rms(phase_errors(r, p.signal)) < 1e-3);
}

TEST_CASE("retrieval without DC subtraction") {
  const auto p = testing::pulse_pair(300.0);
  const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0);
  RetrievalConfig cfg;
  cfg.subtract_dc = false;
  const RetrievedField r = retrieve(ig, p.reference, intensity_of(p.signal), cfg);
  CHECK_FALSE(r.diagnostics.dc_subtracted);
  CHECK(r.diagnostics.dc_exclusion > 100.0);
  CHECK(testing::rms(phase_errors(r, p.signal)) < 1e-2);
}

TEST_CASE("retrieval errors") {
  const auto p = testing::pulse_pair(300.0);
  Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0);
  const auto q = testing::pulse_pair(0.0, 1.0, 1.0, 2048);
  CHECK(error_of([&] { retrieve(ig, q.reference, intensity_of(p.signal)); }) == ErrorCode::kGridMismatch);
  Interferogram zero = ig;
  zero.tau_r = 0.0;
  CHECK(error_of([&] { retrieve(zero, p.reference, intensity_of(p.signal)); }) == ErrorCode::kZeroTauR);
  Interferogram alias = ig;
  alias.tau_r = 2100.0;
  CHECK(error_of([&] { retrieve(alias, p.reference, intensity_of(p.signal)); }) == ErrorCode::kGridTooShort);
}

TEST_CASE("noisy retrieval keeps bright bins accurate") {
  // Additive noise of 1% of the interferogram peak swamps the fringes in the
  // spectral wings, so the phase is judged where |E_S| is above half its peak.
  const auto p = testing::pulse_pair(500.0);
  const std::vector<double> tp = spectral_phase(p.signal);
  double amp_peak = 0.0;
  for (const auto& s : p.signal.samples) amp_peak = std::max(amp_peak, std::abs(s));
  const Interferogram clean = synthesize_interferogram(p.signal, p.reference, 500.0);
  const double peak = *std::max_element(clean.spectrum.intensity.begin(), clean.spectrum.intensity.end());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0, std::nullopt, DetectorNoise{0.01 * peak, seed});
    const RetrievedField r = retrieve(ig, p.reference, intensity_of(p.signal));
    for (std::size_t k = 0; k < tp.size(); ++k) {
      if (std::abs(p.signal.samples[k]) < 0.5 * amp_peak) continue;
      const double e = std::remainder(r.phase[k] - tp[k], 2.0 * std::numbers::pi);
      sum += e * e;
      ++count;
    }
  }
  CHECK(std::sqrt(sum / static_cast<double>(count)) < 0.05);
}

TEST_CASE("noise pulls the temporal chirp toward zero, less so as it weakens") {
  // Wing bins whose fringes sit below the noise carry random phase, which
  // flattens the quadratic phase of the time-domain field.
  const auto p = testing::pulse_pair(500.0);
  const Interferogram clean = synthesize_interferogram(p.signal, p.reference, 500.0);
  const double peak = *std::max_element(clean.spectrum.intensity.begin(), clean.spectrum.intensity.end());
  const PhaseFit truth = fit_phase_polynomial(freq_to_time(p.signal, p.omega0));
  const PhaseFit exact = fit_phase_polynomial(freq_to_time(retrieve(clean, p.reference, intensity_of(p.signal)).field, p.omega0));
  CHECK(std::abs(exact.b - truth.b) < 1e-3 * std::abs(truth.b));

  std::vector<double> mean_error;
  for (double level : {1e-2, 1e-3, 1e-4}) {
    double acc = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0, std::nullopt, DetectorNoise{level * peak, seed});
      const PhaseFit fit = fit_phase_polynomial(freq_to_time(retrieve(ig, p.reference, intensity_of(p.signal)).field, p.omega0));
      acc += (fit.b - truth.b) / truth.b;
    }
    mean_error.push_back(acc / 10.0);
  }
  CHECK(mean_error[0] < 0.0);
  CHECK(mean_error[1] < 0.0);
  CHECK(std::abs(mean_error[0]) > std::abs(mean_error[1]));
  CHECK(std::abs(mean_error[1]) > std::abs(mean_error[2]));
  CHECK(std::abs(mean_error[2]) < 0.05);
}

}  // TEST_SUITE
