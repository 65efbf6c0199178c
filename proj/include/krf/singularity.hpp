#pragma once

// Analysis of the metric at the numerical singular time.

#include "krf/flow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace krf {

enum class LocusKind { empty, lower_end, upper_end, interior, everywhere };
std::string to_string(LocusKind kind);

struct DegeneracyLocus {
  std::vector<int> nodes;
  LocusKind kind = LocusKind::empty;
  double threshold = 0.0;

  friend bool operator==(const DegeneracyLocus&, const DegeneracyLocus&) = default;
};

/// Nodes with det(g/g0) below `threshold` (default 1e-3 times the median of
/// the initial ratio, which is 1). Classified as an end locus when every
/// flagged node lies within the outer third of the grid on that side.
DegeneracyLocus locate_S0(const Snapshot& terminal, const Scenario& scenario,
                          std::optional<double> threshold = std::nullopt);

struct DecayFit {
  double window_lo = -12.0;
  double window_hi = -6.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square
  double predicted_exponent = 1.0;
  bool passed = false;
  std::string warning;

  friend bool operator==(const DecayFit&, const DecayFit&) = default;
};

/// Least-squares line through log det(g/g0) against rho on the window.
/// Requires a divisorial scenario and a window inside [-R, -R/3]; nodes whose
/// determinant is not resolvable (below 1e-14 or non-finite) shrink the window
/// from the left with a warning.
DecayFit fit_decay(const Snapshot& snapshot, const Scenario& scenario, double window_lo = -12.0,
                   double window_hi = -6.0);

struct ProbeSample {
  double t = 0.0;
  double det_min = 0.0;       // global det(g(t)/g0(t))
  double det_max = 0.0;
  double first_sup = 0.0;     // sup of U' on rho >= rho_cut
  double second_sup = 0.0;    // sup of U'' on rho >= rho_cut
  double downstream_min = 0.0;  // det(g(t))/det(eta_L) on rho >= rho_cut
  double downstream_max = 0.0;

  friend bool operator==(const ProbeSample&, const ProbeSample&) = default;
};

struct PushforwardProbe {
  double rho_cut = 0.0;
  std::vector<ProbeSample> samples;
  double B0 = 0.0;
  double B1 = 0.0;
  bool passed = false;
  std::string detail;

  friend bool operator==(const PushforwardProbe&, const PushforwardProbe&) = default;
};

/// Samples the run at T - {0.2, 0.1, 0.05, 0.02}. Throws std::invalid_argument
/// for non-divisorial scenarios. With a run at twice the resolution the bounds
/// and downstream difference quotients must agree to 10%.
PushforwardProbe probe_pushforward(const RunLedger& run, const Scenario& scenario, double rho_cut = 0.0,
                                   const RunLedger* refined = nullptr);

struct PairingTrace {
  std::vector<double> times;
  std::vector<double> contracted;    // <g(t), C> for the contracted ray
  std::vector<double> uncontracted;  // <g(t), C'> for the other basis curve
  double expected_uncontracted = 0.0;  // A(T).C'
};

/// Pairings of the snapshot metrics and the terminal metric with the curve basis.
PairingTrace contracted_pairings(const RunLedger& run, const Scenario& scenario);

}  // namespace krf
