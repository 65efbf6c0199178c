#pragma once

// Run configuration file (JSON). Schema, with defaults:
//
//   {
//     "scenario": { "surface": "F1", "ample": ["4", "-1"] },   // or "surface": "F", "k": 1
//     "grid":     { "R": 15, "N": 2048 },                      // torus: R = 8, N = 64
//     "flow":     { "dt_init", "dt_min", "t_end", "newton_tol", "newton_max_iter",
//                   "positivity_floor", "scheme", "max_relative_change",
//                   "volume_drift_limit" },                    // defaults per scenario
//     "checks":   [],                                          // empty: all applicable
//     "rescale":  [],                                          // factors K as "p/q"
//     "outputs":  { "directory": "krflab-runs", "snapshot_every": 0.05,
//                   "csv": true, "plots": true },
//     "seed":     0
//   }
//
// Unknown keys are rejected at every level.

#include "krf/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace krf {

struct OutputOptions {
  std::string directory = "krflab-runs";
  bool csv = true;
  bool plots = true;

  friend bool operator==(const OutputOptions&, const OutputOptions&) = default;
};

struct RunConfig {
  std::string surface = "F1";
  std::vector<std::string> ample{"4", "-1"};
  double half_width = 15.0;
  int nodes = 2048;
  FlowConfig flow;  // snapshot_every lives under "outputs" in the file
  std::vector<std::string> checks;
  std::vector<std::string> rescale;
  OutputOptions outputs;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  Scenario scenario() const;
  /// Hash of the canonical JSON without the output directory; names the run directory.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Fills absent fields with the defaults for the configured scenario and validates.
RunConfig parse_run_config(const Json& j);
Json config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace krf
