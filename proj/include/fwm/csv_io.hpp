#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "fwm/field.hpp"
#include "fwm/interferogram.hpp"

namespace fwm::io {

// Text formats. Header line `# kind, n, dt_or_dw, origin, omega0` followed by
// one row per sample, `index, re, im` for complex data or `index, intensity`
// for spectra. Interferograms use `# interferogram, n, dw, w0, tau_r`.
// Values are written with 17 significant digits.

void write_csv(std::ostream& os, const TimeField& f);
void write_csv(std::ostream& os, const SpectralField& F, double omega0 = 0.0);
void write_csv(std::ostream& os, const Spectrum& s, double omega0 = 0.0);
void write_csv(std::ostream& os, const Interferogram& ig);

/// Frequency-domain payload read back from a CSV together with the carrier
/// recorded in its header.
template <class T>
struct WithCarrier {
  T value;
  double omega0 = 0.0;
};

using AnyField = std::variant<TimeField, WithCarrier<SpectralField>, WithCarrier<Spectrum>, Interferogram>;

/// Parses any of the formats above. Throws Error(kParse) with the offending
/// line number on malformed input.
AnyField read_csv(std::istream& is);
AnyField read_csv_file(const std::filesystem::path& path);

TimeField read_time_field(const std::filesystem::path& path);
WithCarrier<SpectralField> read_spectral_field(const std::filesystem::path& path);
Interferogram read_interferogram(const std::filesystem::path& path);

/// Spectrum from either a spectrum CSV or a complex spectral-field CSV
/// (intensity = |E|^2).
Spectrum read_spectrum_like(const std::filesystem::path& path);

std::string to_csv_string(const AnyField& v);

}  // namespace fwm::io
