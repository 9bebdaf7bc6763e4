#pragma once

// Configuration-driven experiment runner.  A small self-parsed config file
// (line-oriented `key = value` under `[section]` headers) selects one model
// and one experiment; every experiment maps to exactly one library entry
// point, and this layer only orchestrates and serializes: CSV tables with a
// versioned schema, an optional native SVG polyline chart per sweep, and a
// summary report with PASS/FLAG verdicts.
//
// Determinism contract: identical config text + seed produce byte-identical
// CSV and SVG output.  Wall time appears only in the summary report, which is
// informational and outside that contract.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bernlab/common.hpp"

namespace bernlab::cli {

inline constexpr const char* kToolName = "bernstein-lab";
inline constexpr const char* kToolVersion = "1.0.0";

// One `key = value` line of a config file, with enough position information
// for line-precise rejection of unknown or malformed keys.
struct ConfigEntry {
  int line = 0;
  std::string section;
  std::string key;
  std::string value;
};

struct ParsedConfig {
  std::string text;  // raw bytes, hashed into the run record
  std::vector<ConfigEntry> entries;
};

// Parses the config syntax only (sections, comments, key = value).  Throws
// PreconditionError with a line-precise message on malformed input.
ParsedConfig parse_config_text(const std::string& text);

// Fully validated, typed experiment description.  Unknown keys, missing
// required keys, and out-of-range values are rejected line-precisely.
struct ExperimentConfig {
  // [model]
  std::string model;                 // circle | dirichlet | divergence | oscillator
  int n = 256;                       // grid nodes (grid models)
  int modes = 0;                     // oscillator: retained modes; grid: eigensystem cap (0 = default)
  double x0 = 0.0, x1 = 1.0;         // interval models
  std::string potential = "none";    // none | quadratic | cosine | linear
  std::string coefficient = "one";   // divergence flux coefficient: one | sine

  // [experiment]
  std::string experiment;
  std::vector<int> bands;            // N list
  double p = 2.0, q = 2.0;
  int h_lo = 0, h_hi = 0;            // dyadic sweep exponents, h = 2^h_lo .. 2^h_hi
  int t_lo = 0, t_hi = 0;
  bool has_h = false, has_t = false;
  double c = 0.125;                  // kernel-audit envelope exponent
  double c0 = 0.0625;                // kernel-audit gradient-mass exponent
  int tail_factor = 4;               // reverse: tail spans frequencies [N, K*N]
  double theta = 0.25;               // holomorphic ray angle, in units of pi
  int trials = 64;                   // reverse sweep random witnesses
  std::string profile = "smooth_cutoff";
  std::string profile2 = "bump";
  double center = 1.0, radius = 0.5; // bump parameters
  double beta = 1.0;                 // power_decay exponent
  std::uint64_t seed = 0x5eedULL;

  // resolved by the command line
  std::string out_dir = ".";
  bool svg = true;
  bool strict = false;
  int threads = 0;                   // 0 = auto (env var, then hardware)
  std::uint64_t config_hash = 0;     // fnv1a over config text + effective seed
};

// Applies the validation rules to a parsed config.  Throws PreconditionError
// with `config:<line>: ...` messages.
ExperimentConfig validate_config(const ParsedConfig& parsed);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // measured constant(s) behind the verdict
};

// Everything one invocation produced.  Artifacts are rendered to strings so
// the writers stay pure and testable; run_cli persists them to files.
struct RunRecord {
  std::string experiment;
  std::string model_tag;       // e.g. circle(n=2048)
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int rows = 0;
  double wall_seconds = 0.0;   // summary only, never serialized into the CSV
  std::string csv;
  std::string svg;             // empty when the experiment has no sweep chart
  std::vector<CheckResult> checks;

  bool flagged() const {
    for (const auto& c : checks)
      if (!c.pass) return true;
    return false;
  }
};

// Dispatches to the library and renders the artifacts.  Library errors
// propagate to the caller for exit-code mapping.
RunRecord run_experiment(const ExperimentConfig& cfg);

// 64-bit FNV-1a, the hash used for config identity and witness digests.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Full command-line entry point (subcommands run / list-models /
// list-experiments / selftest).  Returns the process exit code: 0 success,
// 2 config or usage error, 3 numerical failure, 4 FLAG present under
// --strict.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bernlab::cli
