#pragma once

// Subcommand drivers behind the krflab executable. Each returns a process exit
// code and writes human-readable output to `out` and diagnostics to `err`.

#include "krf/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace krf {

enum ExitCode : int {
  exit_ok = 0,
  exit_checks_failed = 1,
  exit_invalid_input = 2,
  exit_parse_error = 3,
  exit_precondition = 4,
};

inline constexpr const char* kOutputRootEnv = "KRFLAB_OUTPUT_ROOT";

/// Explicit override, else $KRFLAB_OUTPUT_ROOT, else the configured directory.
std::filesystem::path output_root(const RunConfig& config, const std::optional<std::filesystem::path>& override);

struct NefRequest {
  std::string surface;
  std::string ample;  // comma-separated rationals, e.g. "4,-1"
  bool json = false;
};

Json nef_summary(const SurfaceModel& surface, const DivisorClass& ample);

int cmd_nef(const NefRequest& request, std::ostream& out, std::ostream& err);
/// Nef thresholds of the reference catalog (F1/(4H-E), F1/(2H-E), P2/H, T2/Theta).
int cmd_nef_catalog(bool json, std::ostream& out);

struct FlowOutcome {
  int exit_code = exit_ok;
  std::filesystem::path directory;
};

FlowOutcome cmd_flow(const RunConfig& config, const std::filesystem::path& root, std::ostream& out,
                     std::ostream& err);

struct CertifyRequest {
  std::filesystem::path ledger;
  std::optional<std::filesystem::path> refined;
  std::vector<std::string> checks;
  std::vector<std::string> rescale;  // factors K; rescale-covariance alone defaults to {"2"}
  std::optional<std::filesystem::path> report;  // default: certificates.json beside the ledger
};

int cmd_certify(const CertifyRequest& request, std::ostream& out, std::ostream& err);

struct SingularityRequest {
  std::filesystem::path ledger;
  std::optional<std::filesystem::path> refined;
  std::optional<std::filesystem::path> report;  // default: singularity.json beside the ledger
  bool plots = true;
};

SingularityReport analyse_singularity(const RunLedger& run, const RunLedger* refined);
int cmd_singularity(const SingularityRequest& request, std::ostream& out, std::ostream& err);

/// Sweep file: { "base": <config>, "variants": [<merge patch>, ...] }.
std::vector<RunConfig> expand_sweep(const Json& sweep);
int cmd_sweep(const std::filesystem::path& sweep_file, int workers,
              const std::optional<std::filesystem::path>& root_override, std::ostream& out, std::ostream& err);

void print_report(const CertificateReport& report, std::ostream& out);

}  // namespace krf
