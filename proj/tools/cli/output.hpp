#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fwm/phase_analysis.hpp"

namespace fwmcli {

/// Output files held in memory until commit(). Each file is written to a
/// temporary name in the target directory and renamed into place, so a run
/// that fails before commit leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(std::string name, std::string content);
  std::vector<std::string> names() const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Throws Error(kIo) if any file cannot be written; temporaries are removed.
  void commit() const;

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string format_double(double v);

/// `tau, b, sigma_b, a, c, d, rms`, one row per delay in ascending order.
/// Dropped delays keep their row with nan entries.
std::string chirp_scan_csv(const fwm::DelayScan<fwm::PhaseFit>& scan);

/// b(tau) with a +-1 sigma band and an optional dashed reference level.
std::string chirp_scan_svg(const fwm::DelayScan<fwm::PhaseFit>& scan, std::optional<double> reference_chirp,
                           const std::string& title);

}  // namespace fwmcli
