#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fit4control/certification.hpp"
#include "fit4control/galerkin.hpp"
#include "fit4control/report.hpp"

namespace fit4control {

enum ExitCode : int {
  exit_ok = 0,
  exit_io = 1,
  exit_config = 2,
  exit_numerical = 3,
};

// Config readers. Each throws ConfigError with a JSON pointer to the
// offending field.

ComputationalDomain parse_domain(const Json& config, const std::string& pointer = "/domain");
/// A form string, {"form": ...}, or {"values": [...], "label": ...}.
Potential parse_potential(const ComputationalDomain& domain, const Json& config,
                          const std::string& pointer);
/// Default: [0, 1) with anchor 0 and delta 1.
ControlSet parse_controls(const Json& config, const std::string& pointer = "/controls");
/// Reads the resonance, connectivity and spectral sections of the root.
FitCheckOptions parse_fit_options(const Json& root);
CertificationInput parse_certification(const Json& root, std::uint64_t seed);
/// {"drift": [...], "coupling": [[...]]}, or {"levels": n} built from the
/// root's domain, V and W.
TruncatedSystem parse_system(const Json& root, const std::string& pointer = "/system");
ComplexVector parse_state(const Json& config, const std::string& pointer);
ControlSchedule parse_schedule(const Json& config, const std::string& pointer);

/// Parses JSON text; syntax errors become ConfigError at "".
Json parse_config_text(const std::string& text);

struct CommandResult {
  int exit_code = exit_ok;
  Json report;
  std::string csv;
};

/// Runs one subcommand on an already-parsed config. `threads` of 0 means 1.
CommandResult execute(const std::string& command, const Json& config, std::uint64_t seed,
                      unsigned threads, std::ostream* log = nullptr);

/// Full command line: `<command> [--config c.json] [--out r.json|r.csv]
/// [--csv series.csv] [--seed s] [--threads t] [--verbose]`, plus `--d`
/// and `--count` for `snake`. Errors go to `err`; the report goes to `--out`
/// or, without it, to `out`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fit4control
