#include "output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "fwm/error.hpp"

namespace fwmcli {

void OutputSet::add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

std::vector<std::string> OutputSet::names() const {
  std::vector<std::string> out;
  for (const auto& f : files_) out.push_back(f.first);
  return out;
}

void OutputSet::commit() const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw fwm::Error(fwm::ErrorCode::kIo, "cli", "cannot create output directory '" + dir_.string() + "'");

  const std::string suffix = ".tmp" + std::to_string(::getpid());
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files_) {
    const fs::path tmp = dir_ / ("." + name + suffix);
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) {
      cleanup();
      throw fwm::Error(fwm::ErrorCode::kIo, "cli", "cannot write '" + (dir_ / name).string() + "'");
    }
  }
  for (std::size_t k = 0; k < files_.size(); ++k) {
    fs::rename(temps[k], dir_ / files_[k].first, ec);
    if (ec) {
      cleanup();
      throw fwm::Error(fwm::ErrorCode::kIo, "cli", "cannot rename into '" + (dir_ / files_[k].first).string() + "'");
    }
  }
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string chirp_scan_csv(const fwm::DelayScan<fwm::PhaseFit>& scan) {
  std::map<double, std::string> rows;
  for (std::size_t i = 0; i < scan.delays.size(); ++i) {
    const fwm::PhaseFit& f = scan.payload[i];
    rows[scan.delays[i]] = format_double(scan.delays[i]) + ", " + format_double(f.b) + ", " + format_double(f.sigma[2]) +
                           ", " + format_double(f.a) + ", " + format_double(f.c) + ", " + format_double(f.d) + ", " +
                           format_double(f.rms_residual);
  }
  for (const auto& d : scan.dropped) rows[d.tau] = format_double(d.tau) + ", nan, nan, nan, nan, nan, nan";
  std::string out = "tau, b, sigma_b, a, c, d, rms\n";
  for (const auto& [tau, row] : rows) out += row + "\n";
  return out;
}

namespace {

// Roughly five round tick values covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string chirp_scan_svg(const fwm::DelayScan<fwm::PhaseFit>& scan, std::optional<double> reference_chirp,
                           const std::string& title) {
  constexpr double kW = 640, kH = 420, kL = 80, kR = 20, kT = 40, kB = 50;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  if (scan.delays.empty()) {
    s << "<text x=\"" << kW / 2 << "\" y=\"" << kH / 2 << "\" text-anchor=\"middle\">no delays survived the fit</text>\n</svg>\n";
    return s.str();
  }

  double x0 = scan.delays.front(), x1 = scan.delays.back();
  if (x1 == x0) {
    x0 -= 1.0;
    x1 += 1.0;
  }
  double y0 = 1e300, y1 = -1e300;
  for (std::size_t i = 0; i < scan.delays.size(); ++i) {
    const auto& f = scan.payload[i];
    y0 = std::min(y0, f.b - f.sigma[2]);
    y1 = std::max(y1, f.b + f.sigma[2]);
  }
  if (reference_chirp) {
    y0 = std::min(y0, *reference_chirp);
    y1 = std::max(y1, *reference_chirp);
  }
  y0 = std::min(y0, 0.0);
  const double pad = 0.08 * (y1 - y0 > 0 ? y1 - y0 : 1e-6);
  y1 += pad;
  if (y0 < 0.0) y0 -= pad;

  auto X = [&](double x) { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); };
  auto Y = [&](double y) { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); };

  s << "<g stroke=\"black\" fill=\"none\">\n";
  s << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB << "\"/>\n";
  s << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB << "\"/>\n";
  s << "</g>\n";
  for (double t : ticks(x0, x1)) {
    s << "<line x1=\"" << X(t) << "\" y1=\"" << kH - kB << "\" x2=\"" << X(t) << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>";
    s << "<text x=\"" << X(t) << "\" y=\"" << kH - kB + 18 << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    s << "<line x1=\"" << kL - 5 << "\" y1=\"" << Y(t) << "\" x2=\"" << kL << "\" y2=\"" << Y(t) << "\" stroke=\"black\"/>";
    s << "<text x=\"" << kL - 8 << "\" y=\"" << Y(t) + 4 << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  s << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">delay (fs)</text>\n";
  s << "<text transform=\"translate(18," << (kT + kH - kB) / 2 << ") rotate(-90)\" text-anchor=\"middle\">b (fs^-2)</text>\n";

  s << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < scan.delays.size(); ++i) {
    s << X(scan.delays[i]) << "," << Y(scan.payload[i].b + scan.payload[i].sigma[2]) << " ";
  }
  for (std::size_t i = scan.delays.size(); i-- > 0;) {
    s << X(scan.delays[i]) << "," << Y(scan.payload[i].b - scan.payload[i].sigma[2]) << " ";
  }
  s << "\"/>\n";
  s << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < scan.delays.size(); ++i) s << X(scan.delays[i]) << "," << Y(scan.payload[i].b) << " ";
  s << "\"/>\n";
  for (std::size_t i = 0; i < scan.delays.size(); ++i) {
    s << "<circle cx=\"" << X(scan.delays[i]) << "\" cy=\"" << Y(scan.payload[i].b) << "\" r=\"3\" fill=\"#08519c\"/>\n";
  }
  if (reference_chirp) {
    s << "<line x1=\"" << kL << "\" y1=\"" << Y(*reference_chirp) << "\" x2=\"" << kW - kR << "\" y2=\"" << Y(*reference_chirp)
      << "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
    s << "<text x=\"" << kW - kR - 4 << "\" y=\"" << Y(*reference_chirp) - 6 << "\" text-anchor=\"end\" fill=\"#d62728\">input chirp</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace fwmcli
