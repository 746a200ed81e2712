#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fwm/lindblad.hpp"
#include "fwm/phase_analysis.hpp"
#include "fwm/retrieval.hpp"

namespace fwmcli {

using nlohmann::json;

/// Built-in configuration. Every key a user file may set appears here.
json default_config();

/// Merges a user config over the defaults. Unknown keys and type mismatches
/// throw Error(kInvalidConfig) naming the dotted path.
json resolve_config(const json& user);

/// Reads and resolves a config file; syntax errors report line and column.
json load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical (sorted, compact) dump.
std::uint64_t config_hash(const json& resolved);
std::string hex64(std::uint64_t v);

// Typed views of a resolved config. Each one validates the fields it reads
// and names the offending path on failure.

struct SynthSetup {
  fwm::TimeGrid grid;
  double ref_wavelength_nm = 800.0, ref_fwhm = 50.0, ref_chirp = 0.0, ref_amplitude = 1.0;
  double sig_wavelength_nm = 800.0, sig_fwhm = 50.0, sig_chirp = 0.0, sig_amplitude = 1.0;
  double gdd = 0.0;  ///< fs^2, spectral phase 0.5 gdd w^2
  double tod = 0.0;  ///< fs^3, spectral phase tod w^3 / 6
  double tau_r = 500.0;
  double noise = 0.0;
  bool noise_relative = true;
};

SynthSetup synth_setup(const json& cfg);
fwm::RetrievalConfig retrieval_setup(const json& cfg);
fwm::PhaseFitOptions fit_setup(const json& cfg);
fwm::ChirpScanOptions chirp_scan_setup(const json& cfg, unsigned threads);

struct SimulationSetup {
  fwm::LevelSystem system;
  fwm::PulseSequence sequence;
  fwm::TimeGrid grid;
  fwm::SimScanOptions options;
  std::vector<double> delays;
};

SimulationSetup simulation_setup(const json& cfg, unsigned threads);

}  // namespace fwmcli
