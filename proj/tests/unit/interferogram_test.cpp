#include <numbers>

#include "doctest.h"

#include "fwm/interferogram.hpp"
#include "support.hpp"

using namespace fwm;
using testing::error_of;

TEST_SUITE("interferogram-forward") {

TEST_CASE("identical pulses give full-contrast fringes") {
  const auto p = testing::pulse_pair(0.0);
  const Interferogram ig = synthesize_interferogram(p.reference, p.reference, 500.0);
  CHECK(ig.tau_r == 500.0);
  double peak = 0.0;
  for (double v : ig.spectrum.intensity) peak = std::max(peak, v);
  for (std::size_t k = 0; k < ig.spectrum.grid.n; ++k) {
    const double s = std::norm(p.reference.samples[k]);
    const double w = ig.spectrum.grid.at(k);
    CHECK(ig.spectrum.intensity[k] == doctest::Approx(2.0 * s * (1.0 + std::cos(w * 500.0))).epsilon(1e-12).scale(peak));
  }
}

TEST_CASE("no signal leaves the reference spectrum") {
  const auto p = testing::pulse_pair(0.0);
  SpectralField zero = p.reference;
  for (auto& s : zero.samples) s = 0.0;
  const Interferogram ig = synthesize_interferogram(zero, p.reference, 500.0);
  for (std::size_t k = 0; k < ig.spectrum.grid.n; ++k) CHECK(ig.spectrum.intensity[k] == std::norm(p.reference.samples[k]));
}

TEST_CASE("fringe period") {
  CHECK(fringe_period(500.0) == doctest::Approx(0.012566).epsilon(1e-4));
  CHECK(fringe_period(250.0) == doctest::Approx(0.025133).epsilon(1e-4));
  CHECK(fringe_period(-500.0) == fringe_period(500.0));
  CHECK(error_of([] { fringe_period(0.0); }) == ErrorCode::kZeroTauR);
}

TEST_CASE("precondition errors") {
  const auto p = testing::pulse_pair(0.0);
  CHECK(error_of([&] { synthesize_interferogram(p.signal, p.reference, 0.0); }) == ErrorCode::kZeroTauR);
  const auto q = testing::pulse_pair(0.0, 1.0, 1.0, 2048);
  CHECK(error_of([&] { synthesize_interferogram(q.signal, p.reference, 500.0); }) == ErrorCode::kGridMismatch);
}

TEST_CASE("nonnegativity, contrast bound and fringe-averaged energy") {
  // Unchirped signal with an offset phase: the cross term then has one fringe
  // frequency across the whole band and averages out over a period.
  // The long grid resolves the spectral envelope finely against one period.
  auto p = testing::pulse_pair(0.0, 0.7, 2.0, 8192);
  for (auto& s : p.signal.samples) s *= std::polar(1.0, 0.4);
  // tau_r = 2048 fs puts exactly 8 bins in one fringe period on this grid.
  const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 2048.0);
  const std::size_t period = 8;
  CHECK(fringe_period(2048.0) == doctest::Approx(period * ig.spectrum.grid.dw).epsilon(1e-12));
  double peak = 0.0;
  for (std::size_t k = 0; k < ig.spectrum.grid.n; ++k) {
    const double sr = std::norm(p.reference.samples[k]);
    const double ss = std::norm(p.signal.samples[k]);
    peak = std::max(peak, sr + ss);
    CHECK(ig.spectrum.intensity[k] >= 0.0);
    CHECK(ig.spectrum.intensity[k] <= std::pow(std::sqrt(sr) + std::sqrt(ss), 2) * (1 + 1e-12));
  }
  // The fringe term integrates to zero over the band, and over any single
  // period it leaves only the envelope slope.
  double total = 0.0, total_dc = 0.0;
  for (std::size_t k = 0; k < ig.spectrum.grid.n; ++k) {
    total += ig.spectrum.intensity[k];
    total_dc += std::norm(p.reference.samples[k]) + std::norm(p.signal.samples[k]);
  }
  CHECK(total == doctest::Approx(total_dc).epsilon(1e-9));
  for (std::size_t k = 0; k + period <= ig.spectrum.grid.n; ++k) {
    double mean = 0.0, dc = 0.0;
    for (std::size_t j = k; j < k + period; ++j) {
      mean += ig.spectrum.intensity[j];
      dc += std::norm(p.reference.samples[j]) + std::norm(p.signal.samples[j]);
    }
    CHECK(std::abs(mean - dc) <= 0.02 * peak * period);
  }
}

TEST_CASE("zero background reproduces the background-free model exactly") {
  const auto p = testing::pulse_pair(500.0);
  const Interferogram plain = synthesize_interferogram(p.signal, p.reference, 500.0);
  CoherentBackground bg{Spectrum{p.signal.grid, std::vector<double>(p.signal.grid.n, 0.0)},
                        std::vector<double>(p.signal.grid.n, 1.234)};
  const Interferogram full = synthesize_interferogram(p.signal, p.reference, 500.0, bg);
  CHECK(full.spectrum.intensity == plain.spectrum.intensity);
}

TEST_CASE("background equals the modulus square of the three-field sum") {
  const auto p = testing::pulse_pair(300.0, 0.6);
  const std::size_t n = p.signal.grid.n;
  CoherentBackground bg{Spectrum{p.signal.grid, std::vector<double>(n)}, std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double w = p.signal.grid.at(k);
    bg.spectrum.intensity[k] = 0.2 * std::norm(p.reference.samples[k]);
    bg.phase[k] = 40.0 * w + 0.3;
  }
  const Interferogram ig = synthesize_interferogram(p.signal, p.reference, 500.0, bg);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = p.signal.grid.at(k);
    const cplx eb = std::polar(std::sqrt(bg.spectrum.intensity[k]), -bg.phase[k]);
    const double direct = std::norm(p.signal.samples[k] + eb + p.reference.samples[k] * std::polar(1.0, w * 500.0));
    CHECK(ig.spectrum.intensity[k] == doctest::Approx(direct).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("detector noise is seeded") {
  const auto p = testing::pulse_pair(500.0);
  const auto a = synthesize_interferogram(p.signal, p.reference, 500.0, std::nullopt, DetectorNoise{0.01, 42});
  const auto b = synthesize_interferogram(p.signal, p.reference, 500.0, std::nullopt, DetectorNoise{0.01, 42});
  const auto c = synthesize_interferogram(p.signal, p.reference, 500.0, std::nullopt, DetectorNoise{0.01, 43});
  CHECK(a.spectrum.intensity == b.spectrum.intensity);
  CHECK(a.spectrum.intensity != c.spectrum.intensity);
  for (double v : a.spectrum.intensity) CHECK(v >= 0.0);
}

}  // TEST_SUITE
