#include "fwm/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fwm/error.hpp"

namespace fwm::io {
namespace {

constexpr const char* kModule = "field-core";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, kModule, "line " + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cur.substr(b, e - b + 1));
  }
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) parse_fail(line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(line, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    parse_fail(line, "number out of range: '" + s + "'");
  }
}

std::size_t to_size(const std::string& s, std::size_t line) {
  const double v = to_double(s, line);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) parse_fail(line, "expected a count, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

void write_csv(std::ostream& os, const TimeField& f) {
  os << "# time_field, " << f.grid.n << ", " << num(f.grid.dt) << ", " << num(f.grid.t0) << ", " << num(f.omega0)
     << '\n';
  for (std::size_t k = 0; k < f.samples.size(); ++k) {
    os << k << ", " << num(f.samples[k].real()) << ", " << num(f.samples[k].imag()) << '\n';
  }
}

void write_csv(std::ostream& os, const SpectralField& F, double omega0) {
  os << "# spectral_field, " << F.grid.n << ", " << num(F.grid.dw) << ", " << num(F.grid.w0) << ", " << num(omega0)
     << '\n';
  for (std::size_t k = 0; k < F.samples.size(); ++k) {
    os << k << ", " << num(F.samples[k].real()) << ", " << num(F.samples[k].imag()) << '\n';
  }
}

void write_csv(std::ostream& os, const Spectrum& s, double omega0) {
  os << "# spectrum, " << s.grid.n << ", " << num(s.grid.dw) << ", " << num(s.grid.w0) << ", " << num(omega0) << '\n';
  for (std::size_t k = 0; k < s.intensity.size(); ++k) os << k << ", " << num(s.intensity[k]) << '\n';
}

void write_csv(std::ostream& os, const Interferogram& ig) {
  const auto& g = ig.spectrum.grid;
  os << "# interferogram, " << g.n << ", " << num(g.dw) << ", " << num(g.w0) << ", " << num(ig.tau_r) << '\n';
  for (std::size_t k = 0; k < ig.spectrum.intensity.size(); ++k) {
    os << k << ", " << num(ig.spectrum.intensity[k]) << '\n';
  }
}

AnyField read_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (line.empty() || line[0] != '#') parse_fail(lineno, "missing '# kind, n, ...' header");
  const auto head = split_fields(line.substr(1));
  if (head.size() != 5) parse_fail(lineno, "header must have 5 fields");
  const std::string& kind = head[0];
  const std::size_t n = to_size(head[1], lineno);
  const double step = to_double(head[2], lineno);
  const double origin = to_double(head[3], lineno);
  const double extra = to_double(head[4], lineno);

  const bool complex_rows = kind == "time_field" || kind == "spectral_field";
  if (!complex_rows && kind != "spectrum" && kind != "interferogram") parse_fail(lineno, "unknown kind '" + kind + "'");

  std::vector<cplx> cvals;
  std::vector<double> rvals;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cols = split_fields(line);
    const std::size_t want = complex_rows ? 3 : 2;
    if (cols.size() != want) parse_fail(lineno, "expected " + std::to_string(want) + " columns");
    const std::size_t idx = to_size(cols[0], lineno);
    const std::size_t have = complex_rows ? cvals.size() : rvals.size();
    if (idx != have) parse_fail(lineno, "row index " + std::to_string(idx) + " out of sequence");
    if (complex_rows) {
      cvals.emplace_back(to_double(cols[1], lineno), to_double(cols[2], lineno));
    } else {
      rvals.push_back(to_double(cols[1], lineno));
    }
  }
  const std::size_t count = complex_rows ? cvals.size() : rvals.size();
  if (count != n) parse_fail(lineno, "header declares " + std::to_string(n) + " rows, found " + std::to_string(count));

  if (kind == "time_field") {
    TimeField f{TimeGrid{origin, step, n}, extra, std::move(cvals)};
    f.validate();
    return f;
  }
  if (kind == "spectral_field") {
    SpectralField F{FreqGrid{origin, step, n}, std::move(cvals)};
    F.validate();
    return WithCarrier<SpectralField>{std::move(F), extra};
  }
  if (kind == "spectrum") {
    Spectrum s{FreqGrid{origin, step, n}, std::move(rvals)};
    s.validate();
    return WithCarrier<Spectrum>{std::move(s), extra};
  }
  Interferogram ig{Spectrum{FreqGrid{origin, step, n}, std::move(rvals)}, extra, {}};
  ig.validate();
  return ig;
}

AnyField read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, kModule, "cannot open '" + path.string() + "'");
  try {
    return read_csv(in);
  } catch (const Error& e) {
    throw Error(e.code(), e.module(), path.string() + ": " + e.what());
  }
}

namespace {

template <class T>
T expect(AnyField v, const std::filesystem::path& path, const char* what) {
  if (auto* p = std::get_if<T>(&v)) return std::move(*p);
  throw Error(ErrorCode::kParse, kModule, path.string() + ": expected " + what);
}

}  // namespace

TimeField read_time_field(const std::filesystem::path& path) {
  return expect<TimeField>(read_csv_file(path), path, "a time_field CSV");
}

WithCarrier<SpectralField> read_spectral_field(const std::filesystem::path& path) {
  return expect<WithCarrier<SpectralField>>(read_csv_file(path), path, "a spectral_field CSV");
}

Interferogram read_interferogram(const std::filesystem::path& path) {
  return expect<Interferogram>(read_csv_file(path), path, "an interferogram CSV");
}

Spectrum read_spectrum_like(const std::filesystem::path& path) {
  AnyField v = read_csv_file(path);
  if (auto* s = std::get_if<WithCarrier<Spectrum>>(&v)) return std::move(s->value);
  if (auto* F = std::get_if<WithCarrier<SpectralField>>(&v)) return intensity_of(F->value);
  throw Error(ErrorCode::kParse, kModule, path.string() + ": expected a spectrum or spectral_field CSV");
}

std::string to_csv_string(const AnyField& v) {
  std::ostringstream os;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, TimeField> || std::is_same_v<T, Interferogram>) {
          write_csv(os, x);
        } else {
          write_csv(os, x.value, x.omega0);
        }
      },
      v);
  return os.str();
}

}  // namespace fwm::io
