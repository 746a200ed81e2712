#include <numbers>
#include <random>

#include "doctest.h"

#include "fwm/phase_analysis.hpp"
#include "fwm/unwrap.hpp"
#include "support.hpp"

using namespace fwm;
using testing::error_of;

namespace {

constexpr double kPi = std::numbers::pi;

// Gaussian amplitude at `tc` with phase sum_k coef[k] (t - t_ref)^k.
TimeField polynomial_field(const std::array<double, 5>& coef, double t_ref, double tc, double fwhm = 50.0) {
  const TimeGrid g = TimeGrid::centered(0.5, 2048);
  TimeField f{g, 2.3546, std::vector<cplx>(g.n)};
  const double a = 2.0 * std::numbers::ln2 / (fwhm * fwhm);
  for (std::size_t k = 0; k < g.n; ++k) {
    const double t = g.at(k);
    const double x = t - t_ref;
    const double phi = coef[0] + x * (coef[1] + x * (coef[2] + x * (coef[3] + x * coef[4])));
    f.samples[k] = std::polar(std::exp(-a * (t - tc) * (t - tc)), -phi);
  }
  return f;
}

}  // namespace

TEST_SUITE("phase-analysis") {

TEST_CASE("unwrapped phase of a chirped pulse") {
  const TimeField f = make_gaussian_pulse(800.0, 50.0, 0.001, 1.0, TimeGrid::centered(0.5, 2048));
  const TemporalPhase tp = unwrap_temporal_phase(f, 0.05);
  CHECK(f.grid.at(tp.seed) == 0.0);
  std::size_t masked = 0;
  for (std::size_t k = 0; k < f.grid.n; ++k) {
    if (!tp.mask[k]) continue;
    ++masked;
    const double t = f.grid.at(k);
    CHECK(std::abs(tp.phase[k] - 0.001 * t * t) < 1e-9);
  }
  CHECK(masked > 100);
}

TEST_CASE("constant phase pi has no false jumps") {
  const TimeGrid g = TimeGrid::centered(1.0, 256);
  TimeField f = make_gaussian_pulse(800.0, 30.0, 0.0, 1.0, g);
  for (auto& s : f.samples) s *= std::polar(1.0, -kPi);
  const TemporalPhase tp = unwrap_temporal_phase(f, 0.05);
  for (std::size_t k = 0; k < g.n; ++k) {
    if (tp.mask[k]) CHECK(std::abs(tp.phase[k] - tp.phase[tp.seed]) < 1e-12);
  }
  CHECK(tp.large_steps.empty());
}

TEST_CASE("a 1.9 pi jump is read as the short step and flagged") {
  std::vector<double> wrapped(20, 0.0);
  for (std::size_t k = 10; k < 20; ++k) wrapped[k] = wrap_angle(1.9 * kPi);
  const UnwrapResult u = unwrap_from_seed(wrapped, 0);
  CHECK(u.phase[10] - u.phase[9] == doctest::Approx(-0.1 * kPi).epsilon(1e-12));
  CHECK(u.large_steps.empty());

  std::vector<double> big(20, 0.0);
  for (std::size_t k = 10; k < 20; ++k) big[k] = wrap_angle(0.6 * kPi);
  const UnwrapResult v = unwrap_from_seed(big, 0);
  REQUIRE(v.large_steps.size() == 1);
  CHECK(v.large_steps[0] == 10);
}

TEST_CASE("unwrap inverts wrap up to a global 2 pi k") {
  std::vector<double> truth(400), wrapped(400), shifted(400);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double x = static_cast<double>(k) - 200.0;
    truth[k] = 1e-6 * x * x * x + 0.02 * x;
    wrapped[k] = wrap_angle(truth[k]);
    shifted[k] = wrapped[k] + 2.0 * kPi;
  }
  const UnwrapResult u = unwrap_from_seed(wrapped, 200);
  const UnwrapResult s = unwrap_from_seed(shifted, 200);
  const double offset = u.phase[0] - truth[0];
  CHECK(std::abs(std::remainder(offset, 2.0 * kPi)) < 1e-9);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    CHECK(u.phase[k] - truth[k] == doctest::Approx(offset).epsilon(1e-9));
    CHECK(std::abs(std::remainder(s.phase[k] - u.phase[k], 2.0 * kPi)) < 1e-9);
  }
}

TEST_CASE("zero field and too few bins") {
  const TimeGrid g = TimeGrid::centered(1.0, 64);
  TimeField zero{g, 2.0, std::vector<cplx>(g.n)};
  CHECK(error_of([&] { unwrap_temporal_phase(zero, 0.05); }) == ErrorCode::kAllBelowThreshold);
  TimeField spike = zero;
  for (std::size_t k = 30; k < 35; ++k) spike.samples[k] = 1.0;
  CHECK(error_of([&] { fit_phase_polynomial(spike); }) == ErrorCode::kInsufficientSupport);
}

TEST_CASE("pure quadratic phase recovers b") {
  const TimeField f = make_gaussian_pulse(800.0, 50.0, 0.0008, 1.0, TimeGrid::centered(0.5, 2048));
  const PhaseFit fit = fit_phase_polynomial(f);
  CHECK(std::abs(fit.b - 0.0008) < 1e-6);
  CHECK(std::abs(fit.c) < 1e-9);
  CHECK(std::abs(fit.d) < 1e-9);
  CHECK(fit.origin == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  for (double s : fit.sigma) CHECK(s >= 0.0);
  CHECK(fit.window.first < 0.0);
  CHECK(fit.window.second > 0.0);
}

TEST_CASE("zero phase gives zero coefficients") {
  const TimeField f = make_gaussian_pulse(800.0, 50.0, 0.0, 1.0, TimeGrid::centered(0.5, 2048));
  const PhaseFit fit = fit_phase_polynomial(f);
  for (double c : fit.coefficients()) CHECK(std::abs(c) < 1e-12);
  CHECK(fit.rms_residual < 1e-12);
}

TEST_CASE("all five coefficients for any centroid offset") {
  const std::array<double, 5> coef{0.4, 0.012, 6e-4, 3e-6, -4e-8};
  for (double tc : {0.0, 37.0, -120.0}) {
    // Phase defined about t = 0 while the pulse sits at tc.
    const TimeField f = polynomial_field(coef, 0.0, tc);
    const PhaseFit fit = fit_phase_polynomial(f);
    CHECK(fit.origin == doctest::Approx(tc).epsilon(1e-9).scale(1.0));
    const PhaseFit about_zero = fit.reexpand(0.0);
    // The unwrap seed fixes phi0 only modulo 2 pi.
    CHECK(std::abs(std::remainder(about_zero.phi0 - coef[0], 2.0 * kPi)) < 1e-6);
    CHECK(std::abs(about_zero.a - coef[1]) < 1e-6);
    CHECK(std::abs(about_zero.b - coef[2]) < 1e-6);
    CHECK(std::abs(about_zero.c - coef[3]) < 1e-6);
    CHECK(std::abs(about_zero.d - coef[4]) < 1e-6);
    const PhaseFit back = about_zero.reexpand(fit.origin);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(back.coefficients()[k] == doctest::Approx(fit.coefficients()[k]).epsilon(1e-9).scale(1e-9));
    }
  }
}

TEST_CASE("chirp is invariant under amplitude scaling") {
  TimeField f = polynomial_field({0.0, 0.01, 5e-4, 1e-6, 0.0}, 0.0, 20.0);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 0.01);
  for (auto& s : f.samples) s *= std::polar(1.0, g(rng));
  const PhaseFit a = fit_phase_polynomial(f);
  for (auto& s : f.samples) s *= 7.25;
  const PhaseFit b = fit_phase_polynomial(f);
  CHECK(std::abs(a.b - b.b) <= 1e-12 * std::abs(a.b));

  // Covariance survives a round trip through another origin.
  const PhaseFit back = a.reexpand(-50.0).reexpand(a.origin);
  for (std::size_t k = 0; k < 5; ++k) CHECK(back.sigma[k] == doctest::Approx(a.sigma[k]).epsilon(1e-6));
}

TEST_CASE("reported sigma_b is calibrated under white phase noise") {
  const double b0 = 5e-4;
  const TimeField clean = make_gaussian_pulse(800.0, 50.0, b0, 1.0, TimeGrid::centered(0.5, 2048));
  std::vector<double> bs, sigmas;
  std::size_t covered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.01);
    TimeField f = clean;
    for (auto& s : f.samples) s *= std::polar(1.0, g(rng));
    const PhaseFit fit = fit_phase_polynomial(f);
    bs.push_back(fit.b);
    sigmas.push_back(fit.sigma[2]);
    if (std::abs(fit.b - b0) <= 3.0 * fit.sigma[2]) ++covered;
  }
  double mean = 0.0, mean_sigma = 0.0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    mean += bs[i] / 100.0;
    mean_sigma += sigmas[i] / 100.0;
  }
  double var = 0.0;
  for (double b : bs) var += (b - mean) * (b - mean) / 99.0;
  CHECK(covered >= 95);
  CHECK(std::sqrt(var) / mean_sigma == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("chirp versus delay") {
  const TimeField f = make_gaussian_pulse(800.0, 50.0, 4e-4, 1.0, TimeGrid::centered(0.5, 2048));
  std::vector<std::pair<double, TimeField>> same;
  for (double tau : {-20.0, 0.0, 20.0, 40.0}) same.emplace_back(tau, f);
  const auto scan = chirp_vs_delay(same);
  REQUIRE(scan.delays.size() == 4);
  for (const auto& fit : scan.payload) CHECK(fit.b == scan.payload[0].b);
  CHECK(scan.dropped.empty());
  scan.validate();

  CHECK(error_of([] { chirp_vs_delay({}); }) == ErrorCode::kEmptyInput);
  std::vector<std::pair<double, TimeField>> unsorted{{10.0, f}, {0.0, f}};
  CHECK(error_of([&] { chirp_vs_delay(unsorted); }) == ErrorCode::kInvalidArgument);

  // A field at the noise floor is dropped with a reason, the rest survive.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1e-3);
  std::vector<std::pair<double, TimeField>> mixed;
  for (double tau : {0.0, 10.0, 20.0}) {
    TimeField x = f;
    const double scale = tau == 20.0 ? 1e-3 : 1.0;
    for (auto& s : x.samples) s = s * scale + cplx(g(rng), g(rng));
    mixed.emplace_back(tau, x);
  }
  ChirpScanOptions opts;
  opts.scheme = Scheme::kMagicAngle;
  opts.threads = 2;
  const auto m = chirp_vs_delay(mixed, opts);
  CHECK(m.scheme == Scheme::kMagicAngle);
  CHECK(m.delays == std::vector<double>{0.0, 10.0});
  REQUIRE(m.dropped.size() == 1);
  CHECK(m.dropped[0].tau == 20.0);
  CHECK_FALSE(m.dropped[0].reason.empty());
}

TEST_CASE("scheme labels") {
  CHECK(parse_scheme("dfwm-45") == Scheme::kDfwm45);
  CHECK(parse_scheme(scheme_label(Scheme::kMagicAngle)) == Scheme::kMagicAngle);
  CHECK(error_of([] { parse_scheme("boxcars"); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("integrated magnitude") {
  const FreqGrid fg{-1.0, 1e-3, 2000};
  const double sigma = 0.05, A = 2.5;
  SpectralField F{fg, std::vector<cplx>(fg.n)};
  for (std::size_t k = 0; k < fg.n; ++k) {
    const double w = fg.at(k) - 0.02;
    F.samples[k] = std::polar(A * std::exp(-w * w / (2.0 * sigma * sigma)), 300.0 * w * w);
  }
  CHECK(integrated_magnitude(F) == doctest::Approx(std::sqrt(2.0 * kPi) * sigma * A).epsilon(1e-3));

  SpectralField zero{fg, std::vector<cplx>(fg.n)};
  CHECK(integrated_magnitude(zero) == 0.0);
  SpectralField triple = F;
  for (auto& s : triple.samples) s *= 3.0;
  CHECK(integrated_magnitude(triple) == doctest::Approx(3.0 * integrated_magnitude(F)).epsilon(1e-14));

  const auto scan = magnitude_vs_delay({{-10.0, F}, {0.0, triple}}, Scheme::kDfwm45);
  CHECK(scan.payload[1] == doctest::Approx(3.0 * scan.payload[0]).epsilon(1e-14));
}

}  // TEST_SUITE
