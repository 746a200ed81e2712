#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "cli/commands.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run tool(std::vector<std::string> args) {
  args.insert(args.begin(), "fwmtool");
  std::ostringstream out, err;
  const int code = fwmcli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fwmtool_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Two-level system with weak 30 fs pulses: a full delay scan in a few seconds.
const char* kSmallModel = R"({
  "model": {"energies": [0, 1.8], "dipoles": [{"i": 0, "j": 1, "mu": [1, 0, 0]}], "t1": 400, "t2": 250},
  "pulses": [
    {"fwhm": 30, "chirp": 2e-4, "field_au": 3e-4, "polarization": [0.7071067811865476, 0.7071067811865476, 0]},
    {"fwhm": 30, "chirp": 2e-4, "field_au": 3e-4, "polarization": [0.7071067811865476, 0.7071067811865476, 0]},
    {"fwhm": 30, "chirp": 2e-4, "field_au": 3e-4}
  ],
  "simulation": {"dt": 0.02, "t_start": -200, "span": 400, "delays": {"start": -100, "stop": 100, "step": 10}}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes its outputs and a manifest") {
  const fs::path d = scratch("synth");
  const Run r = tool({"--out", d.string(), "--seed", "7", "synth"});
  REQUIRE(r.code == 0);
  for (const char* f : {"pulse.csv", "reference.csv", "interferogram.csv", "manifest.json"}) CHECK(fs::exists(d / f));
  const json m = json::parse(slurp(d / "manifest.json"));
  CHECK(m["command"] == "synth");
  CHECK(m["seed"] == 7);
  CHECK(m["config"]["interferogram"]["tau_r"] == 500.0);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m.contains("tool_version"));
  CHECK(m["outputs"].size() == 4);
}

TEST_CASE("synth is deterministic for a seed") {
  const fs::path d = scratch("seed");
  write(d / "noisy.json", R"({"interferogram": {"noise": 0.01}})");
  const std::string cfg = (d / "noisy.json").string();
  REQUIRE(tool({"--config", cfg, "--seed", "3", "--out", (d / "a").string(), "synth"}).code == 0);
  REQUIRE(tool({"--config", cfg, "--seed", "3", "--out", (d / "b").string(), "synth"}).code == 0);
  REQUIRE(tool({"--config", cfg, "--seed", "4", "--out", (d / "c").string(), "synth"}).code == 0);
  CHECK(slurp(d / "a" / "interferogram.csv") == slurp(d / "b" / "interferogram.csv"));
  CHECK(slurp(d / "a" / "interferogram.csv") != slurp(d / "c" / "interferogram.csv"));
}

TEST_CASE("synth then retrieve recovers the signal phase") {
  const fs::path d = scratch("chain");
  REQUIRE(tool({"--out", d.string(), "synth"}).code == 0);
  const fs::path r = d / "retrieved";
  const Run run = tool({"--out", r.string(), "retrieve", "--interferogram", (d / "interferogram.csv").string(),
                        "--reference", (d / "reference.csv").string(), "--signal-spectrum", (d / "pulse.csv").string(),
                        "--truth", (d / "pulse.csv").string()});
  REQUIRE(run.code == 0);
  for (const char* f : {"retrieved.csv", "retrieved_time.csv", "diagnostics.json", "manifest.json"}) CHECK(fs::exists(r / f));
  const json diag = json::parse(slurp(r / "diagnostics.json"));
  CHECK(diag["phase_rms_vs_truth"].get<double>() < 1e-3);
}

TEST_CASE("usage and config errors exit with 2") {
  const fs::path d = scratch("usage");
  write(d / "zero.json", R"({"interferogram": {"tau_r": 0}})");
  Run r = tool({"--config", (d / "zero.json").string(), "--out", (d / "o1").string(), "synth"});
  CHECK(r.code == 2);
  CHECK(r.err.find("interferogram.tau_r") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "o1"));

  write(d / "broken.json", "{\n  \"grid\": {\"dt\": 2,,}\n}\n");
  r = tool({"--config", (d / "broken.json").string(), "--out", (d / "o2").string(), "synth"});
  CHECK(r.code == 2);
  CHECK(r.err.find("broken.json:2:") != std::string::npos);

  write(d / "unknown.json", R"({"grid": {"dtt": 2}})");
  r = tool({"--config", (d / "unknown.json").string(), "synth"});
  CHECK(r.code == 2);
  CHECK(r.err.find("grid.dtt") != std::string::npos);

  r = tool({"--out", (d / "o3").string(), "retrieve", "--interferogram", (d / "nothing.csv").string(), "--reference",
            (d / "nothing.csv").string(), "--signal-spectrum", (d / "nothing.csv").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(d / "o3"));

  CHECK(tool({}).code == 2);
  CHECK(tool({"frobnicate"}).code == 2);
  CHECK(tool({"synth", "--no-such-flag"}).code == 2);
}

TEST_CASE("a missing sideband is a computational failure") {
  const fs::path d = scratch("dark");
  write(d / "dark.json", R"({"signal": {"amplitude": 1e-12}})");
  REQUIRE(tool({"--config", (d / "dark.json").string(), "--out", d.string(), "synth"}).code == 0);
  const Run r = tool({"--out", (d / "r").string(), "retrieve", "--interferogram", (d / "interferogram.csv").string(),
                      "--reference", (d / "reference.csv").string(), "--signal-spectrum", (d / "pulse.csv").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("no-sideband") != std::string::npos);
}

TEST_CASE("scan writes one row per delay and fit-chirp reproduces it") {
  const fs::path d = scratch("scan");
  write(d / "small.json", kSmallModel);
  const fs::path a = d / "t1";
  REQUIRE(tool({"--config", (d / "small.json").string(), "--threads", "1", "--out", a.string(), "scan"}).code == 0);
  std::istringstream csv(slurp(a / "chirp_scan.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line.find("tau") != std::string::npos);
  while (std::getline(csv, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 21);
  CHECK(slurp(a / "chirp_scan.svg").find("<svg") != std::string::npos);

  const fs::path b = d / "t2";
  REQUIRE(tool({"--config", (d / "small.json").string(), "--threads", "2", "--out", b.string(), "scan"}).code == 0);
  CHECK(slurp(a / "chirp_scan.csv") == slurp(b / "chirp_scan.csv"));

  const fs::path f = d / "fit";
  REQUIRE(tool({"--out", f.string(), "fit-chirp", "--scan", (a / "scan_fields.json").string()}).code == 0);
  CHECK(slurp(f / "chirp_scan.csv") == slurp(a / "chirp_scan.csv"));
}

}  // TEST_SUITE
