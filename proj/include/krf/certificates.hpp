#pragma once

// Comparison envelopes and a priori bounds monitored along a run.

#include "krf/flow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace krf {

/// Spatially constant super/sub-solutions:
///   u+ = (1 - e^{-t}) K_sup,
///   u- = e^{-t} int_0^t e^s (n log(b(s)/r) + K_inf) ds.
struct Envelope {
  double K_sup = 0.0;
  double K_inf = 0.0;
  int dimension = 2;
  double threshold = 0.0;      // r, +inf when immortal
  double singular_time = 0.0;  // log(r + 1), +inf when immortal
  std::uint64_t scenario_hash = 0;

  double u_plus(double t) const;
  /// Evaluated for t <= T; later times are clamped to T.
  double u_minus(double t) const;
  /// n log(b(t)/r) (n log b(t) on the immortal branch).
  double log_b_term(double t) const;
};

Envelope build_envelope(const Scenario& scenario, int time_samples = 200);

/// int_0^t log(((r+1)e^{-s} - 1)/r) ds by tanh-sinh quadrature (finite up to t = log(r+1)).
double integrate_log_b(double r, double t);

struct CheckRecord {
  std::string name;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double worst_margin = 0.0;  // signed; >= 0 means the bound held
  int witness_node = -1;
  double witness_t = 0.0;
  bool passed = false;
  std::string detail;

  friend bool operator==(const CheckRecord&, const CheckRecord&) = default;
};

struct CertificateReport {
  std::uint64_t scenario_hash = 0;
  std::string surface;
  int nodes = 0;
  std::vector<CheckRecord> checks;

  bool passed() const;
  const CheckRecord& check(const std::string& name) const;
  friend bool operator==(const CertificateReport&, const CertificateReport&) = default;
};

inline constexpr double kSandwichSlack = 1e-6;

/// Worst of (u+ - u) and (u - u-) over accepted steps; throws std::invalid_argument
/// when run and envelope come from different scenarios.
CheckRecord check_sandwich(const RunLedger& run, const Envelope& env);

/// v-upper: max v <= max f + 1e-3. v-lower: min v over [0, T - 0.05] finite and,
/// when a run at twice the resolution is supplied, within 10% of it.
std::vector<CheckRecord> check_v_bounds(const RunLedger& run, const RunLedger* refined = nullptr);

struct EquivalenceBounds {
  double C0 = 1.0;  // min over t <= t0 and nodes of U'/U0', U''/U0''
  double C1 = 1.0;  // max of the same ratios
  double trace_max = 2.0;
  int witness_node = -1;
  double witness_t = 0.0;
};

/// Ratios of g(t) against g0 over the accepted steps with t <= t0.
EquivalenceBounds equivalence_bounds(const RunLedger& run, double t0);

/// Lower bound of the Ricci-eigenvalue proxy of g0(t) over interior nodes and
/// a time sample of [0, t0]; lambda = 1 + max(0, -kappa).
double curvature_floor(const Scenario& scenario, double t0, int time_samples = 20);

/// metric-equivalence and laplacian-upper records. Throws std::invalid_argument
/// when t0 is not below the singular time.
std::vector<CheckRecord> check_metric_equivalence(const RunLedger& run, const Scenario& scenario, double t0,
                                                  const RunLedger* refined = nullptr);

/// Per-coefficient distance of class_of(g(t)) from the class path for t <= t_max.
CheckRecord check_class_tracking(const RunLedger& run, const Scenario& scenario, double t_max);

inline constexpr double kSingularTimeTolerance = 0.05;

/// Defect of every report within `tolerance`, and each rescaled run stopping
/// within kSingularTimeTolerance of its predicted singular time.
CheckRecord check_rescale_covariance(const std::vector<RescaleReport>& reports, double tolerance = 1e-3);

struct CertifyOptions {
  const RunLedger* refined = nullptr;
  std::vector<RescaleReport> rescale;
  /// Defaults to T - 0.05 (finite time) or the last accepted time.
  std::optional<double> equivalence_time;
  std::vector<std::string> enabled;  // empty: every applicable check
};

CertificateReport certify(const RunLedger& run, const Scenario& scenario, const CertifyOptions& options = {});

std::vector<std::string> all_certificate_names();

}  // namespace krf
