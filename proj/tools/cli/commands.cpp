#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "config.hpp"
#include "output.hpp"
#include "fwm/csv_io.hpp"
#include "fwm/error.hpp"
#include "fwm/interferogram.hpp"
#include "fwm/lindblad.hpp"
#include "fwm/phase_analysis.hpp"
#include "fwm/retrieval.hpp"

#ifndef FWM_TOOL_VERSION
#define FWM_TOOL_VERSION "0.0.0"
#endif

namespace fwmcli {
namespace {

using fwm::Error;
using fwm::ErrorCode;

struct Context {
  std::vector<std::string> argv;
  std::string command;
  std::string config_path;
  json config;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  std::vector<std::string> inputs;
  std::chrono::steady_clock::time_point start;
};

template <class T>
std::string csv_of(const T& value) {
  std::ostringstream os;
  fwm::io::write_csv(os, value);
  return os.str();
}

std::string csv_of(const fwm::SpectralField& F, double omega0) {
  std::ostringstream os;
  fwm::io::write_csv(os, F, omega0);
  return os.str();
}

json fit_json(const fwm::PhaseFit& f) {
  json cov = json::array();
  for (int r = 0; r < 5; ++r) {
    json row = json::array();
    for (int c = 0; c < 5; ++c) row.push_back(f.covariance(r, c));
    cov.push_back(row);
  }
  return {{"phi0", f.phi0}, {"a", f.a},           {"b", f.b},
          {"c", f.c},       {"d", f.d},           {"sigma", f.sigma},
          {"origin", f.origin}, {"window", {f.window.first, f.window.second}},
          {"rms_residual", f.rms_residual}, {"bins", f.bins}, {"covariance", cov}};
}

json dropped_json(const std::vector<fwm::DroppedDelay>& dropped) {
  json out = json::array();
  for (const auto& d : dropped) out.push_back({{"tau", d.tau}, {"reason", d.reason}});
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void finish(Context& ctx, OutputSet& outputs) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  std::vector<std::string> names = outputs.names();
  names.push_back("manifest.json");
  const json manifest = {
      {"command", ctx.command},
      {"argv", ctx.argv},
      {"inputs", ctx.inputs},
      {"config_path", ctx.config_path},
      {"config", ctx.config},
      {"config_hash", hex64(config_hash(ctx.config))},
      {"seed", ctx.seed},
      {"threads", ctx.threads},
      {"tool_version", FWM_TOOL_VERSION},
      {"outputs", names},
      {"timing", {{"wall_seconds", wall}}},
  };
  outputs.add("manifest.json", dump(manifest));
  outputs.commit();
}

// --- synth -----------------------------------------------------------------

int cmd_synth(Context& ctx, std::ostream& out) {
  const SynthSetup s = synth_setup(ctx.config);
  const fwm::TimeField ref_t = fwm::make_gaussian_pulse(s.ref_wavelength_nm, s.ref_fwhm, s.ref_chirp, s.ref_amplitude, s.grid);
  const fwm::TimeField sig_t = fwm::make_gaussian_pulse(s.sig_wavelength_nm, s.sig_fwhm, s.sig_chirp, s.sig_amplitude, s.grid);
  const fwm::SpectralField ref = fwm::time_to_freq(ref_t);
  fwm::SpectralField sig = fwm::time_to_freq(sig_t);
  for (std::size_t k = 0; k < sig.grid.n; ++k) {
    const double w = sig.grid.at(k);
    sig.samples[k] *= std::polar(1.0, -(0.5 * s.gdd * w * w + s.tod * w * w * w / 6.0));
  }

  std::optional<fwm::DetectorNoise> noise;
  if (s.noise > 0.0) {
    double rms = s.noise;
    if (s.noise_relative) {
      const fwm::Interferogram clean = fwm::synthesize_interferogram(sig, ref, s.tau_r);
      rms *= *std::max_element(clean.spectrum.intensity.begin(), clean.spectrum.intensity.end());
    }
    noise = fwm::DetectorNoise{rms, ctx.seed};
  }
  const fwm::Interferogram ig = fwm::synthesize_interferogram(sig, ref, s.tau_r, std::nullopt, noise);

  OutputSet outputs(ctx.out_dir);
  outputs.add("pulse.csv", csv_of(sig, ref_t.omega0));
  outputs.add("reference.csv", csv_of(ref, ref_t.omega0));
  outputs.add("interferogram.csv", csv_of(ig));
  finish(ctx, outputs);
  out << "synth: wrote " << outputs.names().size() << " files to " << ctx.out_dir.string() << "\n";
  return 0;
}

// --- retrieve --------------------------------------------------------------

struct RetrieveArgs {
  std::string interferogram, reference, signal_spectrum, truth;
  std::optional<int> filter_order;
  std::optional<double> filter_width;
  std::string sideband;
  std::optional<double> min_amp;
};

int cmd_retrieve(Context& ctx, const RetrieveArgs& a, std::ostream& out) {
  json& r = ctx.config["retrieval"];
  if (a.filter_order) r["filter_order"] = *a.filter_order;
  if (a.filter_width) r["filter_width"] = *a.filter_width;
  if (a.min_amp) r["min_amplitude_frac"] = *a.min_amp;
  if (!a.sideband.empty()) {
    if (a.sideband == "auto" || a.sideband == "positive" || a.sideband == "negative") {
      r["sideband"] = a.sideband;
    } else {
      try {
        std::size_t used = 0;
        r["sideband"] = std::stod(a.sideband, &used);
        if (used != a.sideband.size()) throw std::invalid_argument(a.sideband);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "cli", "--sideband expects auto, positive, negative or a center in fs");
      }
    }
  }
  const fwm::RetrievalConfig cfg = retrieval_setup(ctx.config);

  ctx.inputs = {a.interferogram, a.reference, a.signal_spectrum};
  if (!a.truth.empty()) ctx.inputs.push_back(a.truth);
  const fwm::Interferogram ig = fwm::io::read_interferogram(a.interferogram);
  const auto ref = fwm::io::read_spectral_field(a.reference);
  const fwm::Spectrum ss = fwm::io::read_spectrum_like(a.signal_spectrum);
  std::optional<fwm::io::WithCarrier<fwm::SpectralField>> truth;
  if (!a.truth.empty()) truth = fwm::io::read_spectral_field(a.truth);

  const fwm::RetrievedField res = fwm::retrieve(ig, ref.value, ss, cfg);
  const fwm::TimeField et = fwm::freq_to_time(res.field, ref.omega0);

  std::size_t masked = 0;
  for (bool m : res.phase_mask) masked += m ? 1 : 0;
  const auto& d = res.diagnostics;
  json diag = {
      {"sideband_center", d.sideband_center}, {"filter_width", d.filter_width},
      {"filter_order", d.filter_order},       {"dc_exclusion", d.dc_exclusion},
      {"shift_bins", d.shift_bins},           {"fringe_contrast", d.fringe_contrast},
      {"dc_subtracted", d.dc_subtracted},     {"residual_linear_phase", res.residual_linear_phase},
      {"masked_bins", masked},
  };
  if (truth) {
    if (!fwm::same_grid(truth->value.grid, res.field.grid)) {
      throw Error(ErrorCode::kGridMismatch, "cli", "truth field grid differs from the interferogram grid");
    }
    const std::vector<double> tp = fwm::spectral_phase(truth->value);
    double s2 = 0.0, worst = 0.0;
    for (std::size_t k = 0; k < tp.size(); ++k) {
      if (!res.phase_mask[k]) continue;
      const double e = std::remainder(res.phase[k] - tp[k], fwm::kTwoPi);
      s2 += e * e;
      worst = std::max(worst, std::abs(e));
    }
    diag["phase_rms_vs_truth"] = masked ? std::sqrt(s2 / static_cast<double>(masked)) : 0.0;
    diag["phase_max_vs_truth"] = worst;
  }

  OutputSet outputs(ctx.out_dir);
  outputs.add("retrieved.csv", csv_of(res.field, ref.omega0));
  outputs.add("retrieved_time.csv", csv_of(et));
  outputs.add("diagnostics.json", dump(diag));
  finish(ctx, outputs);
  out << "retrieve: sideband at " << d.sideband_center << " fs, " << masked << " masked bins";
  if (truth) out << ", phase rms vs truth " << diag["phase_rms_vs_truth"].get<double>() << " rad";
  out << "\n";
  return 0;
}

// --- fit-chirp -------------------------------------------------------------

struct FitArgs {
  std::vector<std::string> fields;
  std::vector<double> taus;
  std::string scan_manifest;
  std::string scheme;
  std::optional<double> min_amp;
  std::optional<double> floor;
  std::optional<double> input_chirp;
};

fwm::TimeField load_time_like(const std::string& path) {
  fwm::io::AnyField v = fwm::io::read_csv_file(path);
  if (auto* t = std::get_if<fwm::TimeField>(&v)) return std::move(*t);
  if (auto* f = std::get_if<fwm::io::WithCarrier<fwm::SpectralField>>(&v)) return fwm::freq_to_time(f->value, f->omega0);
  throw Error(ErrorCode::kParse, "cli", path + ": expected a time or spectral field");
}

int cmd_fit_chirp(Context& ctx, FitArgs a, std::ostream& out) {
  std::vector<std::pair<double, std::string>> items;
  if (!a.scan_manifest.empty()) {
    if (!a.fields.empty()) throw Error(ErrorCode::kInvalidArgument, "cli", "give either --scan or --field, not both");
    ctx.inputs.push_back(a.scan_manifest);
    std::ifstream in(a.scan_manifest);
    if (!in) throw Error(ErrorCode::kIo, "cli", "cannot open scan manifest '" + a.scan_manifest + "'");
    json m;
    try {
      in >> m;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "cli", a.scan_manifest + ": invalid JSON");
    }
    if (!m.is_object() || !m.contains("fields") || !m["fields"].is_array()) {
      throw Error(ErrorCode::kParse, "cli", a.scan_manifest + ": expected {\"fields\": [{\"tau\": ..., \"file\": ...}]}");
    }
    const std::filesystem::path base = std::filesystem::path(a.scan_manifest).parent_path();
    for (const auto& e : m["fields"]) {
      if (!e.is_object() || !e.contains("tau") || !e["tau"].is_number() || !e.contains("file") || !e["file"].is_string()) {
        throw Error(ErrorCode::kParse, "cli", a.scan_manifest + ": each field needs a numeric tau and a file");
      }
      std::filesystem::path f = e["file"].get<std::string>();
      if (f.is_relative()) f = base / f;
      items.emplace_back(e["tau"].get<double>(), f.string());
    }
    if (a.scheme.empty() && m.contains("scheme") && m["scheme"].is_string()) a.scheme = m["scheme"].get<std::string>();
    if (!a.input_chirp && m.contains("input_chirp") && m["input_chirp"].is_number()) a.input_chirp = m["input_chirp"].get<double>();
  } else {
    if (a.fields.empty()) throw Error(ErrorCode::kInvalidArgument, "cli", "fit-chirp needs --field or --scan");
    if (a.taus.empty() && a.fields.size() == 1) a.taus.push_back(0.0);
    if (a.taus.size() != a.fields.size()) {
      throw Error(ErrorCode::kInvalidArgument, "cli", "give one --tau per --field");
    }
    for (std::size_t i = 0; i < a.fields.size(); ++i) items.emplace_back(a.taus[i], a.fields[i]);
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].first == items[i - 1].first) {
      throw Error(ErrorCode::kInvalidArgument, "cli", "delay " + format_double(items[i].first) + " appears twice");
    }
  }

  if (!a.scheme.empty()) ctx.config["scheme"] = a.scheme;
  if (a.min_amp) ctx.config["fit"]["min_amplitude_frac"] = *a.min_amp;
  if (a.floor) ctx.config["fit"]["floor"] = *a.floor;
  const fwm::ChirpScanOptions opts = chirp_scan_setup(ctx.config, ctx.threads);

  std::vector<std::pair<double, fwm::TimeField>> fields;
  for (const auto& [tau, path] : items) {
    if (a.scan_manifest.empty()) ctx.inputs.push_back(path);
    fields.emplace_back(tau, load_time_like(path));
  }
  const fwm::DelayScan<fwm::PhaseFit> scan = fwm::chirp_vs_delay(fields, opts);

  json fits = json::array();
  for (std::size_t i = 0; i < scan.delays.size(); ++i) fits.push_back({{"tau", scan.delays[i]}, {"fit", fit_json(scan.payload[i])}});
  const json diag = {{"scheme", std::string(fwm::scheme_label(scan.scheme))},
                     {"fits", fits},
                     {"dropped", dropped_json(scan.dropped)}};

  OutputSet outputs(ctx.out_dir);
  outputs.add("chirp_scan.csv", chirp_scan_csv(scan));
  outputs.add("chirp_scan.svg", chirp_scan_svg(scan, a.input_chirp, "chirp vs delay (" + std::string(fwm::scheme_label(scan.scheme)) + ")"));
  outputs.add("diagnostics.json", dump(diag));
  finish(ctx, outputs);
  out << "fit-chirp: " << scan.delays.size() << " fitted, " << scan.dropped.size() << " dropped\n";
  return 0;
}

// --- simulate / scan -------------------------------------------------------

std::string tau_file_name(double tau) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "signal_tau_%+.2f.csv", tau);
  return buf;
}

int cmd_simulate(Context& ctx, std::optional<double> delay, std::ostream& out) {
  if (delay) ctx.config["pulses"][2]["delay"] = *delay;
  SimulationSetup s = simulation_setup(ctx.config, ctx.threads);
  fwm::ThirdOrderOptions opts = s.options.third_order;
  opts.threads = ctx.threads;

  fwm::ThirdOrderResult r;
  for (unsigned attempt = 0;; ++attempt) {
    try {
      r = fwm::third_order_signal(s.system, s.sequence, s.grid, opts);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRichardsonFailure || attempt >= s.options.max_eps_halvings) throw;
      for (double& v : opts.eps) v *= 0.5;
    }
  }
  json diag = {{"delay", s.sequence.delay()},
               {"richardson_change", r.richardson_change},
               {"eps", opts.eps},
               {"input_chirp", s.sequence.pulses[2].chirp},
               {"scheme", std::string(fwm::scheme_label(s.options.analysis.scheme))}};
  try {
    diag["fit"] = fit_json(fwm::fit_phase_polynomial(r.signal, s.options.analysis.fit));
  } catch (const Error& e) {
    diag["fit_error"] = std::string(fwm::error_name(e.code())) + ": " + e.what();
  }

  OutputSet outputs(ctx.out_dir);
  outputs.add("signal.csv", csv_of(r.signal));
  outputs.add("diagnostics.json", dump(diag));
  finish(ctx, outputs);
  out << "simulate: delay " << s.sequence.delay() << " fs, richardson change " << r.richardson_change;
  if (diag.contains("fit")) out << ", b = " << diag["fit"]["b"].get<double>() << " fs^-2";
  out << "\n";
  return 0;
}

int cmd_scan(Context& ctx, const std::vector<double>& delays, std::ostream& out) {
  if (!delays.empty()) ctx.config["simulation"]["delays"] = delays;
  SimulationSetup s = simulation_setup(ctx.config, ctx.threads);
  const fwm::ChirpScanResult res = fwm::simulate_chirp_scan(s.system, s.sequence, s.delays, s.grid, s.options);
  if (res.scan.delays.empty()) {
    std::string why = res.scan.dropped.empty() ? "" : " (first: " + res.scan.dropped.front().reason + ")";
    throw Error(ErrorCode::kInsufficientSupport, "cli", "no delay produced a fit" + why);
  }

  OutputSet outputs(ctx.out_dir);
  json fields = json::array();
  json per_delay = json::array();
  // Every simulated field is written, so a re-fit with another floor can
  // bring back delays this fit dropped.
  for (const fwm::SimulatedDelay& d : res.simulated) {
    const std::string name = tau_file_name(d.tau);
    outputs.add(name, csv_of(d.signal));
    fields.push_back({{"tau", d.tau}, {"file", name}});
    json row = {{"tau", d.tau}, {"richardson_change", d.richardson_change}, {"eps", d.eps}};
    const auto it = std::find(res.scan.delays.begin(), res.scan.delays.end(), d.tau);
    if (it != res.scan.delays.end()) row["fit"] = fit_json(res.scan.payload[static_cast<std::size_t>(it - res.scan.delays.begin())]);
    per_delay.push_back(row);
  }
  const std::string scheme(fwm::scheme_label(res.scan.scheme));
  const json scan_fields = {{"scheme", scheme}, {"input_chirp", res.input_chirp}, {"fields", fields}};
  const json diag = {{"scheme", scheme},
                     {"input_chirp", res.input_chirp},
                     {"delays", per_delay},
                     {"dropped", dropped_json(res.scan.dropped)}};
  outputs.add("chirp_scan.csv", chirp_scan_csv(res.scan));
  outputs.add("chirp_scan.svg", chirp_scan_svg(res.scan, res.input_chirp, "simulated chirp vs delay (" + scheme + ")"));
  outputs.add("scan_fields.json", dump(scan_fields));
  outputs.add("diagnostics.json", dump(diag));
  finish(ctx, outputs);
  out << "scan: " << res.scan.delays.size() << " delays fitted, " << res.scan.dropped.size() << " dropped\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Field retrieval and third-order response simulation", "fwmtool"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", FWM_TOOL_VERSION);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned threads = 0;
  app.add_option("--config", config_path, "JSON config; omitted keys take their defaults");
  app.add_option("--seed", seed, "seed for synthetic detector noise");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  auto* synth = app.add_subcommand("synth", "synthesize pulse, reference and interferogram");

  RetrieveArgs ra;
  auto* retrieve = app.add_subcommand("retrieve", "retrieve the signal field from an interferogram");
  retrieve->add_option("--interferogram", ra.interferogram, "interferogram CSV")->required();
  retrieve->add_option("--reference", ra.reference, "reference spectral field CSV")->required();
  retrieve->add_option("--signal-spectrum", ra.signal_spectrum, "signal spectrum or spectral field CSV")->required();
  retrieve->add_option("--truth", ra.truth, "true signal spectral field, for the phase error diagnostic");
  retrieve->add_option("--filter-order", ra.filter_order, "super-Gaussian order (even)");
  retrieve->add_option("--filter-width", ra.filter_width, "filter width in fs");
  retrieve->add_option("--sideband", ra.sideband, "auto, positive, negative or a center in fs");
  retrieve->add_option("--min-amp", ra.min_amp, "phase mask threshold as a fraction of the peak amplitude");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit-chirp", "fit the temporal phase polynomial of fields over delay");
  fit->add_option("--field", fa.fields, "time or spectral field CSV (repeatable)");
  fit->add_option("--tau", fa.taus, "delay in fs for each --field, in order");
  fit->add_option("--scan", fa.scan_manifest, "scan manifest JSON listing {tau, file}");
  fit->add_option("--scheme", fa.scheme, "dfwm-45 or magic-angle-54.7");
  fit->add_option("--min-amp", fa.min_amp, "fit mask threshold");
  fit->add_option("--floor", fa.floor, "absolute |E| floor below which a delay is dropped");
  fit->add_option("--input-chirp", fa.input_chirp, "reference chirp drawn on the plot");

  std::optional<double> sim_delay;
  auto* simulate = app.add_subcommand("simulate", "third-order signal at one delay");
  simulate->add_option("--delay", sim_delay, "probe delay in fs (overrides the config)");

  std::vector<double> scan_delays;
  auto* scan = app.add_subcommand("scan", "simulated chirp versus delay");
  scan->add_option("--delays", scan_delays, "comma separated delays in fs (overrides the config)")->delimiter(',');

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  Context ctx;
  ctx.argv = args;
  ctx.start = std::chrono::steady_clock::now();
  ctx.seed = seed;
  ctx.out_dir = out_dir;
  ctx.threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  ctx.config_path = config_path;
  try {
    ctx.config = config_path.empty() ? resolve_config(json()) : load_config(config_path);
    if (synth->parsed()) {
      ctx.command = "synth";
      return cmd_synth(ctx, out);
    }
    if (retrieve->parsed()) {
      ctx.command = "retrieve";
      return cmd_retrieve(ctx, ra, out);
    }
    if (fit->parsed()) {
      ctx.command = "fit-chirp";
      return cmd_fit_chirp(ctx, fa, out);
    }
    if (simulate->parsed()) {
      ctx.command = "simulate";
      return cmd_simulate(ctx, sim_delay, out);
    }
    ctx.command = "scan";
    (void)scan;
    return cmd_scan(ctx, scan_delays, out);
  } catch (const Error& e) {
    err << "fwmtool: " << e.module() << "/" << fwm::error_name(e.code()) << ": " << e.what() << "\n";
    return fwm::is_usage_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "fwmtool: internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fwmcli
