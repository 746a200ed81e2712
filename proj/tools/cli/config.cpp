#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fwm/error.hpp"

namespace fwmcli {
namespace {

using fwm::Error;
using fwm::ErrorCode;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidConfig, "cli", "config field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const char* type_of(const json& j) {
  if (j.is_null()) return "null";
  if (j.is_boolean()) return "boolean";
  if (j.is_number()) return "number";
  if (j.is_string()) return "string";
  if (j.is_array()) return "array";
  return "object";
}

json pulse_template() {
  return {{"wavelength_nm", 800.0}, {"fwhm", 50.0}, {"chirp", 3e-4}, {"intensity_tw_cm2", 5.0},
          {"field_au", nullptr},    {"delay", 0.0}, {"polarization", {1.0, 0.0, 0.0}}};
}

bool same_kind(const json& def, const json& v) {
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_object()) return v.is_object();
  return true;
}

void merge_into(json& dst, const json& user, const std::string& path) {
  if (!user.is_object()) bad(path.empty() ? "<root>" : path, std::string("expected an object, got ") + type_of(user));
  for (const auto& [key, value] : user.items()) {
    const std::string p = join(path, key);
    if (!dst.contains(key)) bad(p, "unknown key");
    json& slot = dst[key];
    if (p == "simulation.delays" && (value.is_array() || value.is_object())) {
      slot = value;
    } else if (p == "pulses" || p == "model.dipoles") {
      if (!value.is_array() && !value.is_null()) bad(p, std::string("expected an array, got ") + type_of(value));
      slot = value;
    } else if (slot.is_object() && value.is_object()) {
      merge_into(slot, value, p);
    } else if (slot.is_null() || same_kind(slot, value) || value.is_null()) {
      slot = value;
    } else {
      bad(p, std::string("expected ") + type_of(slot) + ", got " + type_of(value));
    }
  }
}

double num(const json& cfg, const std::string& path) {
  const json* j = &cfg;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!j->is_object() || !j->contains(key)) bad(path, "missing");
    j = &(*j)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!j->is_number()) bad(path, std::string("expected a number, got ") + type_of(*j));
  const double v = j->get<double>();
  if (!std::isfinite(v)) bad(path, "must be finite");
  return v;
}

double num_at(const json& j, const std::string& path) {
  if (!j.is_number()) bad(path, std::string("expected a number, got ") + type_of(j));
  return j.get<double>();
}

double positive(const json& cfg, const std::string& path) {
  const double v = num(cfg, path);
  if (!(v > 0.0)) bad(path, "must be > 0");
  return v;
}

const json& at_path(const json& cfg, const std::string& path) {
  const json* j = &cfg;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    j = &j->at(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) return *j;
    start = dot + 1;
  }
}

std::optional<double> optional_num(const json& cfg, const std::string& path) {
  if (at_path(cfg, path).is_null()) return std::nullopt;
  return num(cfg, path);
}

fwm::cplx complex_at(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  bad(path, "expected a number or a [re, im] pair");
}

fwm::CVec3 cvec3_at(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected a 3-vector");
  fwm::CVec3 v;
  for (std::size_t c = 0; c < 3; ++c) v[static_cast<Eigen::Index>(c)] = complex_at(j[c], index(path, c));
  return v;
}

fwm::Vec3 vec3_at(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) bad(path, "expected a 3-vector");
  fwm::Vec3 v;
  for (std::size_t c = 0; c < 3; ++c) v[static_cast<Eigen::Index>(c)] = num_at(j[c], index(path, c));
  return v;
}

json complex_json(fwm::cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

fwm::Scheme scheme_of(const json& cfg) {
  const json& s = cfg.at("scheme");
  if (!s.is_string()) bad("scheme", "expected a string");
  try {
    return fwm::parse_scheme(s.get<std::string>());
  } catch (const Error&) {
    bad("scheme", "unknown scheme '" + s.get<std::string>() + "' (dfwm-45 or magic-angle-54.7)");
  }
}

double gate_angle_deg(fwm::Scheme s) {
  return s == fwm::Scheme::kMagicAngle ? std::acos(1.0 / std::sqrt(3.0)) * 180.0 / std::numbers::pi : 45.0;
}

json resolve_pulses(const json& user_pulses, fwm::Scheme scheme) {
  if (user_pulses.is_null()) {
    const double th = gate_angle_deg(scheme) * std::numbers::pi / 180.0;
    json out = json::array();
    for (int i = 0; i < 3; ++i) {
      json p = pulse_template();
      if (i < 2) p["polarization"] = {std::cos(th), std::sin(th), 0.0};
      out.push_back(p);
    }
    return out;
  }
  if (user_pulses.size() != 3) bad("pulses", "expected three pulses (gate 1, gate 2, probe)");
  json out = json::array();
  for (std::size_t i = 0; i < 3; ++i) {
    json p = pulse_template();
    const json& u = user_pulses[i];
    if (u.contains("field_au") && !u.contains("intensity_tw_cm2")) p["intensity_tw_cm2"] = nullptr;
    merge_into(p, u, index("pulses", i));
    out.push_back(p);
  }
  return out;
}

json resolve_dipoles(const json& user, bool default_energies) {
  json out = json::array();
  if (default_energies) {
    for (const auto& d : fwm::default_co2_dipoles()) {
      json mu = json::array();
      for (int c = 0; c < 3; ++c) mu.push_back(complex_json(d.mu[c]));
      out.push_back({{"i", d.i}, {"j", d.j}, {"mu", mu}});
    }
  }
  if (user.is_null()) return out;
  for (std::size_t k = 0; k < user.size(); ++k) {
    const std::string p = index("model.dipoles", k);
    const json& d = user[k];
    if (!d.is_object() || !d.contains("i") || !d.contains("j") || !d.contains("mu")) {
      bad(p, "expected {\"i\": n, \"j\": m, \"mu\": [x, y, z]}");
    }
    for (const auto& [key, v] : d.items()) {
      if (key != "i" && key != "j" && key != "mu") bad(join(p, key), "unknown key");
    }
    if (!d["i"].is_number_unsigned() || !d["j"].is_number_unsigned()) bad(p, "indices must be non-negative integers");
    cvec3_at(d["mu"], join(p, "mu"));
    const auto key_of = [](const json& e) {
      const auto i = e["i"].get<std::size_t>();
      const auto j = e["j"].get<std::size_t>();
      return std::make_pair(std::min(i, j), std::max(i, j));
    };
    const auto ij = key_of(d);
    bool replaced = false;
    for (auto& e : out) {
      if (key_of(e) == ij) {
        e = d;
        replaced = true;
      }
    }
    if (!replaced) out.push_back(d);
  }
  return out;
}

}  // namespace

json default_config() {
  return {
      {"scheme", "dfwm-45"},
      {"grid", {{"dt", 2.0}, {"n", 2048}}},
      {"reference", {{"wavelength_nm", 800.0}, {"fwhm", 50.0}, {"chirp", 0.0}, {"amplitude", 1.0}}},
      {"signal",
       {{"wavelength_nm", 800.0},
        {"fwhm", 50.0},
        {"chirp", 0.0},
        {"amplitude", 1.0},
        {"gdd", 1000.0},
        {"tod", 0.0}}},
      {"interferogram", {{"tau_r", 500.0}, {"noise", 0.0}, {"noise_relative", true}}},
      {"retrieval",
       {{"filter_order", 6},
        {"filter_width", nullptr},
        {"sideband", "auto"},
        {"min_amplitude_frac", 0.05},
        {"dc_exclusion", nullptr},
        {"refine_linear_phase", false},
        {"subtract_dc", true}}},
      {"fit", {{"min_amplitude_frac", 0.05}, {"window", nullptr}, {"floor", nullptr}, {"floor_factor", 3.0}}},
      {"model", {{"energies", {0.0, 9.058, 10.731, 12.916}}, {"dipoles", nullptr}, {"t1", 300.0}, {"t2", 300.0}}},
      {"pulses", nullptr},
      {"analyzer", {1.0, 0.0, 0.0}},
      {"simulation",
       {{"dt", 0.004},
        {"t_start", -300.0},
        {"span", 600.0},
        {"eps", {0.1, 0.1, 0.1}},
        {"band_width_factor", 6.0},
        {"output_stride", 25},
        {"richardson_check", true},
        {"richardson_tolerance", 0.01},
        {"max_eps_halvings", 2},
        {"delays", {{"start", -100.0}, {"stop", 100.0}, {"step", 10.0}}}}},
  };
}

json resolve_config(const json& user) {
  json cfg = default_config();
  const json default_energies = cfg["model"]["energies"];
  if (!user.is_null()) merge_into(cfg, user, "");
  cfg["pulses"] = resolve_pulses(cfg["pulses"], scheme_of(cfg));
  cfg["model"]["dipoles"] = resolve_dipoles(cfg["model"]["dipoles"], cfg["model"]["energies"] == default_energies);
  return cfg;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cli", "cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::kParse, "cli",
                path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
  return resolve_config(user);
}

std::uint64_t config_hash(const json& resolved) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : resolved.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

SynthSetup synth_setup(const json& cfg) {
  SynthSetup s;
  const double n = positive(cfg, "grid.n");
  if (n != std::floor(n) || n < 8 || std::fmod(n, 2.0) != 0.0) bad("grid.n", "must be an even integer >= 8");
  s.grid = fwm::TimeGrid::centered(positive(cfg, "grid.dt"), static_cast<std::size_t>(n));
  s.ref_wavelength_nm = positive(cfg, "reference.wavelength_nm");
  s.ref_fwhm = positive(cfg, "reference.fwhm");
  s.ref_chirp = num(cfg, "reference.chirp");
  s.ref_amplitude = positive(cfg, "reference.amplitude");
  s.sig_wavelength_nm = positive(cfg, "signal.wavelength_nm");
  s.sig_fwhm = positive(cfg, "signal.fwhm");
  s.sig_chirp = num(cfg, "signal.chirp");
  s.sig_amplitude = positive(cfg, "signal.amplitude");
  s.gdd = num(cfg, "signal.gdd");
  s.tod = num(cfg, "signal.tod");
  s.tau_r = num(cfg, "interferogram.tau_r");
  if (s.tau_r == 0.0) bad("interferogram.tau_r", "must be nonzero (no fringes at zero reference delay)");
  if (std::abs(s.tau_r) >= 0.5 * s.grid.span()) {
    bad("interferogram.tau_r", "must lie inside the pseudo-time half range " + std::to_string(0.5 * s.grid.span()) + " fs");
  }
  s.noise = num(cfg, "interferogram.noise");
  if (s.noise < 0.0) bad("interferogram.noise", "must be >= 0");
  s.noise_relative = cfg["interferogram"]["noise_relative"].get<bool>();
  if (s.sig_wavelength_nm != s.ref_wavelength_nm) {
    bad("signal.wavelength_nm", "must equal reference.wavelength_nm (one shared spectral grid)");
  }
  return s;
}

fwm::RetrievalConfig retrieval_setup(const json& cfg) {
  fwm::RetrievalConfig r;
  const double order = num(cfg, "retrieval.filter_order");
  if (order != std::floor(order) || order < 2 || std::fmod(order, 2.0) != 0.0) {
    bad("retrieval.filter_order", "must be an even integer >= 2");
  }
  r.filter_order = static_cast<int>(order);
  r.filter_width = optional_num(cfg, "retrieval.filter_width");
  if (r.filter_width && !(*r.filter_width > 0.0)) bad("retrieval.filter_width", "must be > 0");
  const json& sb = cfg["retrieval"]["sideband"];
  if (sb.is_number()) {
    r.sideband = fwm::SidebandRule::kExplicit;
    r.sideband_center = sb.get<double>();
    if (r.sideband_center == 0.0) bad("retrieval.sideband", "explicit center must be nonzero");
  } else if (sb == "auto") {
    r.sideband = fwm::SidebandRule::kAuto;
  } else if (sb == "positive") {
    r.sideband = fwm::SidebandRule::kPositive;
  } else if (sb == "negative") {
    r.sideband = fwm::SidebandRule::kNegative;
  } else {
    bad("retrieval.sideband", "expected auto, positive, negative or a center in fs");
  }
  r.min_amplitude_frac = num(cfg, "retrieval.min_amplitude_frac");
  if (!(r.min_amplitude_frac > 0.0 && r.min_amplitude_frac < 1.0)) bad("retrieval.min_amplitude_frac", "must lie in (0, 1)");
  r.dc_exclusion = optional_num(cfg, "retrieval.dc_exclusion");
  if (r.dc_exclusion && *r.dc_exclusion < 0.0) bad("retrieval.dc_exclusion", "must be >= 0");
  r.refine_linear_phase = cfg["retrieval"]["refine_linear_phase"].get<bool>();
  r.subtract_dc = cfg["retrieval"]["subtract_dc"].get<bool>();
  return r;
}

fwm::PhaseFitOptions fit_setup(const json& cfg) {
  fwm::PhaseFitOptions f;
  f.min_amplitude_frac = num(cfg, "fit.min_amplitude_frac");
  if (!(f.min_amplitude_frac > 0.0 && f.min_amplitude_frac < 1.0)) bad("fit.min_amplitude_frac", "must lie in (0, 1)");
  const json& w = cfg["fit"]["window"];
  if (!w.is_null()) {
    if (!w.is_array() || w.size() != 2) bad("fit.window", "expected [t_min, t_max]");
    const double lo = num_at(w[0], "fit.window[0]");
    const double hi = num_at(w[1], "fit.window[1]");
    if (!(hi > lo)) bad("fit.window", "t_max must exceed t_min");
    f.window = std::make_pair(lo, hi);
  }
  return f;
}

fwm::ChirpScanOptions chirp_scan_setup(const json& cfg, unsigned threads) {
  fwm::ChirpScanOptions o;
  o.fit = fit_setup(cfg);
  o.scheme = scheme_of(cfg);
  o.floor = optional_num(cfg, "fit.floor");
  if (o.floor && *o.floor < 0.0) bad("fit.floor", "must be >= 0");
  o.floor_factor = num(cfg, "fit.floor_factor");
  if (o.floor_factor < 0.0) bad("fit.floor_factor", "must be >= 0");
  o.threads = threads;
  return o;
}

SimulationSetup simulation_setup(const json& cfg, unsigned threads) {
  SimulationSetup s;

  const json& energies = cfg["model"]["energies"];
  if (!energies.is_array() || energies.size() < 2 || energies.size() > fwm::kMaxLevels) {
    bad("model.energies", "expected 2 to " + std::to_string(fwm::kMaxLevels) + " levels");
  }
  for (std::size_t k = 0; k < energies.size(); ++k) {
    s.system.energies.push_back(num_at(energies[k], index("model.energies", k)));
  }
  const auto n = static_cast<Eigen::Index>(s.system.size());
  for (auto& d : s.system.dipole) d = Eigen::MatrixXcd::Zero(n, n);
  const json& dipoles = cfg["model"]["dipoles"];
  for (std::size_t k = 0; k < dipoles.size(); ++k) {
    const std::string p = index("model.dipoles", k);
    const std::size_t i = dipoles[k]["i"].get<std::size_t>();
    const std::size_t j = dipoles[k]["j"].get<std::size_t>();
    if (i >= s.system.size() || j >= s.system.size()) bad(p, "level index out of range");
    try {
      s.system.set_dipole(i, j, cvec3_at(dipoles[k]["mu"], join(p, "mu")));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kInvalidConfig) throw;
      bad(p, e.what());
    }
  }
  s.system.relaxation_time = positive(cfg, "model.t1");
  s.system.dephasing_time = positive(cfg, "model.t2");
  try {
    s.system.validate();
  } catch (const Error& e) {
    bad("model", e.what());
  }

  for (std::size_t i = 0; i < 3; ++i) {
    const std::string p = index("pulses", i);
    const json& j = cfg["pulses"][i];
    fwm::Pulse& pulse = s.sequence.pulses[i];
    auto field_of = [&](const char* key) { return num_at(j[key], join(p, key)); };
    auto positive_of = [&](const char* key) {
      const double v = field_of(key);
      if (!(v > 0.0)) bad(join(p, key), "must be > 0");
      return v;
    };
    pulse.wavelength_nm = positive_of("wavelength_nm");
    pulse.fwhm = positive_of("fwhm");
    pulse.chirp = field_of("chirp");
    pulse.arrival = field_of("delay");
    const bool has_i = !j["intensity_tw_cm2"].is_null();
    const bool has_f = !j["field_au"].is_null();
    if (has_i == has_f) bad(p, "give exactly one of intensity_tw_cm2 and field_au");
    if (has_i) {
      const double tw = field_of("intensity_tw_cm2");
      if (tw < 0.0) bad(join(p, "intensity_tw_cm2"), "must be >= 0");
      pulse.field = fwm::field_au_from_intensity(tw);
    } else {
      pulse.field = field_of("field_au");
    }
    pulse.polarization = cvec3_at(j["polarization"], join(p, "polarization"));
  }
  s.sequence.analyzer = vec3_at(cfg["analyzer"], "analyzer");
  try {
    s.sequence.validate();
  } catch (const Error& e) {
    bad("pulses", e.what());
  }

  const double dt = positive(cfg, "simulation.dt");
  const double span = positive(cfg, "simulation.span");
  auto steps = static_cast<std::size_t>(std::llround(span / dt));
  if (steps % 2 != 0) ++steps;
  if (steps < 8) bad("simulation.span", "must cover at least 8 steps");
  s.grid = fwm::TimeGrid{num(cfg, "simulation.t_start"), dt, steps};

  const json& eps = cfg["simulation"]["eps"];
  if (!eps.is_array() || eps.size() != 3) bad("simulation.eps", "expected three fractions");
  for (std::size_t k = 0; k < 3; ++k) {
    const double e = num_at(eps[k], index("simulation.eps", k));
    if (!(e > 0.0 && e <= 1.0)) bad(index("simulation.eps", k), "must lie in (0, 1]");
    s.options.third_order.eps[k] = e;
  }
  s.options.third_order.band_width_factor = positive(cfg, "simulation.band_width_factor");
  const double stride = positive(cfg, "simulation.output_stride");
  if (stride != std::floor(stride)) bad("simulation.output_stride", "must be a positive integer");
  s.options.third_order.output_stride = static_cast<std::size_t>(stride);
  s.options.third_order.richardson_check = cfg["simulation"]["richardson_check"].get<bool>();
  s.options.third_order.richardson_tolerance = positive(cfg, "simulation.richardson_tolerance");
  const double halvings = num(cfg, "simulation.max_eps_halvings");
  if (halvings < 0 || halvings != std::floor(halvings)) bad("simulation.max_eps_halvings", "must be a non-negative integer");
  s.options.max_eps_halvings = static_cast<unsigned>(halvings);
  s.options.analysis = chirp_scan_setup(cfg, threads);
  s.options.threads = threads;

  const json& d = cfg["simulation"]["delays"];
  if (d.is_array()) {
    for (std::size_t k = 0; k < d.size(); ++k) s.delays.push_back(num_at(d[k], index("simulation.delays", k)));
  } else {
    const double a = num(cfg, "simulation.delays.start");
    const double b = num(cfg, "simulation.delays.stop");
    const double h = positive(cfg, "simulation.delays.step");
    if (b < a) bad("simulation.delays.stop", "must be >= start");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) s.delays.push_back(a + static_cast<double>(k) * h);
  }
  if (s.delays.empty()) bad("simulation.delays", "must not be empty");
  for (std::size_t k = 1; k < s.delays.size(); ++k) {
    if (!(s.delays[k] > s.delays[k - 1])) bad("simulation.delays", "must be strictly increasing");
  }
  return s;
}

}  // namespace fwmcli
