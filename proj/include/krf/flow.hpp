#pragma once

// Time integration of the scalar equation
//   du/dt = log det((g0(t) + ddc u) / g0) - u + f,   u(., 0) = 0,
// where g0(t) = g0 + a(t) eta and a(t) = 1 - e^{-t}.

#include "krf/ansatz.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace krf {

enum class Scheme { backward_euler_newton, explicit_rk4 };
std::string to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

struct FlowConfig {
  double dt_init = 1e-4;  // also the largest step the controller grows back to
  double dt_min = 1e-12;
  double t_end = 5.0;
  double newton_tol = 1e-8;
  int newton_max_iter = 25;
  double positivity_floor = 1e-8;  // relative to g0: min(U'/U0', U''/U0'')
  Scheme scheme = Scheme::backward_euler_newton;
  double snapshot_every = 0.05;
  double max_relative_change = 0.05;  // per-step cap on |dU'|/U' and |dU''|/U''
  double volume_drift_limit = 1e-2;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Torus scenarios integrate with RK4 (smooth and far from the stability
  /// limit); Hirzebruch scenarios with implicit Euler up to the singular time.
  static FlowConfig defaults_for(const Scenario& scenario);

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct FlowState {
  double t = 0.0;
  Profile u;
  Profile v;  // right-hand side evaluated at the accepted u
  MetricProfile g;
  double phi_residual = 0.0;
  int step_count = 0;
  bool degenerate = false;
  double dt_next = 0.0;
  int newton_iterations = 0;
};

FlowState initial_state(const Scenario& scenario, const FlowConfig& cfg);

/// Advances by one accepted step of size at most min(state.dt_next, t_limit - t),
/// halving on failure. If the step size drops below dt_min the input state is
/// returned flagged degenerate; if the accepted metric falls below the
/// positivity floor the new state is returned flagged degenerate.
FlowState step(const FlowState& state, const FlowConfig& cfg, const Scenario& scenario, double t_limit);

/// |int exp(v+u-f) dV0 - Vol(g(t))| / Vol0, with Vol(g(t)) from the class path.
double volume_identity_residual(const FlowState& state, const Scenario& scenario);

/// Potential in the gauge (eta - ddc h, f + h): u + a(t) h.
Profile gauge_change(const Profile& u, const Profile& h, double t);

/// Right-hand side log det((g0(t) + ddc u)/g0) - u + f on the flow stencil.
Profile flow_rhs(const Scenario& scenario, const Profile& u, double t);
/// g0(t) + ddc u on the flow stencil (Neumann ends on bounded grids).
MetricProfile evolved_metric(const Scenario& scenario, const Profile& u, double t);

struct StepRecord {
  double t = 0.0;
  double dt = 0.0;
  double u_min = 0.0, u_max = 0.0;
  int u_argmin = 0, u_argmax = 0;
  double v_min = 0.0, v_max = 0.0;
  double det_min = 1.0, det_max = 1.0;            // det(g(t)/g0)
  double det_t_min = 1.0, det_t_max = 1.0;        // det(g(t)/g0(t))
  double slope_ratio_min = 1.0, slope_ratio_max = 1.0;          // U'/U0'
  double curvature_ratio_min = 1.0, curvature_ratio_max = 1.0;  // U''/U0''
  double trace_max = 2.0;                         // tr_{g0(t)} g(t) = n + Laplacian u
  double curvature_max = 0.0;                     // max U''
  std::vector<double> pairings;
  std::vector<double> class_coeffs;
  double phi_residual = 0.0;
  int newton_iterations = 0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Snapshot {
  double t = 0.0;
  Profile u;
  Profile v;
  Profile slope;      // U'
  Profile curvature;  // U''

  MetricProfile metric(int k, Chart chart) const { return MetricProfile(InvariantForm{slope, curvature, k, chart}); }
  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

enum class Termination { reached_t_end, degenerate_margin, newton_failure, volume_drift };
std::string to_string(Termination reason);
Termination parse_termination(std::string_view text);

struct ScenarioInfo {
  std::string surface;
  std::vector<std::string> ample;  // rational coefficients
  double half_width = 0.0;
  int nodes = 0;
  bool periodic = false;
  std::uint64_t hash = 0;
  std::string nef_threshold;  // rational, or "inf"
  double singular_time = 0.0; // +inf when the flow is immortal
  std::string contraction;

  friend bool operator==(const ScenarioInfo&, const ScenarioInfo&) = default;
};

ScenarioInfo describe(const Scenario& scenario);
/// Rebuilds the default scenario a ledger was produced from.
Scenario scenario_from(const ScenarioInfo& info);

struct RunLedger {
  ScenarioInfo scenario;
  FlowConfig config;
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;
  Snapshot terminal;
  Termination termination = Termination::reached_t_end;
  double t_numeric = 0.0;  // time of the last accepted state
  std::string message;

  /// Snapshot at time t (to 1e-12); throws std::out_of_range if absent.
  const Snapshot& snapshot_at(double t) const;
  bool has_snapshot(double t) const;

  friend bool operator==(const RunLedger&, const RunLedger&) = default;
};

/// Times that every finite-time run lands on and snapshots, besides the
/// regular cadence: T/2, 0.5, and T - {0.2, 0.1, 0.05, 0.02}.
std::vector<double> diagnostic_times(const Scenario& scenario);

RunLedger run_flow(const Scenario& scenario, const FlowConfig& cfg, std::vector<double> extra_times = {});

struct RescaleSample {
  double s = 0.0;
  double t = 0.0;       // t(s) = log((e^s + K - 1)/K)
  double factor = 1.0;  // k(s) = (K - 1)e^{-s} + 1
  double defect = 0.0;  // sup over nodes of |k(s) g(t(s)) - g~(s)|

  friend bool operator==(const RescaleSample&, const RescaleSample&) = default;
};

struct RescaleReport {
  Rational factor;
  std::vector<RescaleSample> samples;
  double defect = 0.0;
  double t_numeric_base = 0.0;
  double t_numeric_rescaled = 0.0;
  double singular_time_base = 0.0;
  double singular_time_rescaled = 0.0;

  friend bool operator==(const RescaleReport&, const RescaleReport&) = default;
};

double rescale_time(double K, double s);
double rescale_factor(double K, double s);

/// Runs the flow from K g0 (the scenario built for K A) and compares it with
/// k(s) g(t(s)) at `samples` equally spaced s in [0, s_fraction * T~].
RescaleReport rescaled_run(const Rational& K, const Scenario& scenario, const FlowConfig& cfg, int samples = 10,
                           double s_fraction = 0.9);

}  // namespace krf
