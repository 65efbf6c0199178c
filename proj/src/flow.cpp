#include "krf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace krf {

namespace {

double decay_weight(double t) { return -std::expm1(-t); }

bool is_flat(const Scenario& sc) { return sc.g0.form().chart == Chart::flat; }

// Coefficients of g0(t) + ddc w. On a bounded grid the ends carry the
// Neumann condition w' = 0 (ghost node reflection for w'').
struct Coefficients {
  std::vector<double> p, q;
};

Coefficients coefficients(const Scenario& sc, const InvariantForm& frame, const Profile& w) {
  const int n = w.size();
  const double h = w.grid().spacing();
  const bool periodic = w.grid().periodic();
  const bool flat = is_flat(sc);
  Coefficients c{std::vector<double>(n), std::vector<double>(n)};
  for (int j = 0; j < n; ++j) {
    double first = 0.0, second = 0.0;
    if (periodic) {
      const double left = w[(j - 1 + n) % n], right = w[(j + 1) % n];
      first = (right - left) / (2.0 * h);
      second = (right - 2.0 * w[j] + left) / (h * h);
    } else if (j == 0) {
      second = 2.0 * (w[1] - w[0]) / (h * h);
    } else if (j == n - 1) {
      second = 2.0 * (w[n - 2] - w[n - 1]) / (h * h);
    } else {
      first = (w[j + 1] - w[j - 1]) / (2.0 * h);
      second = (w[j + 1] - 2.0 * w[j] + w[j - 1]) / (h * h);
    }
    c.p[j] = frame.p[j] + (flat ? 0.0 : first);
    c.q[j] = frame.q[j] + second;
  }
  return c;
}

bool admissible(const Coefficients& c) {
  for (std::size_t j = 0; j < c.p.size(); ++j)
    if (!(c.p[j] > 0.0) || !(c.q[j] > 0.0) || !std::isfinite(c.p[j]) || !std::isfinite(c.q[j])) return false;
  return true;
}

// log det((g0(t) + ddc w)/g0) - w + f
std::vector<double> rhs_values(const Scenario& sc, const Coefficients& c, const Profile& w) {
  std::vector<double> out(c.p.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const int i = static_cast<int>(j);
    out[j] = std::log(c.p[j] * c.q[j] / sc.density[i]) - w[i] + sc.f[i];
  }
  return out;
}

double sup(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Thomas algorithm; lower[0] and upper[n-1] are ignored.
std::vector<double> solve_tridiagonal(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                                      std::vector<double> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
  return rhs;
}

// Cyclic system: lower[0] couples row 0 to x[n-1], upper[n-1] couples row n-1
// to x[0]. Sherman-Morrison on top of the Thomas solve.
std::vector<double> solve_cyclic(const std::vector<double>& lower, const std::vector<double>& diag,
                                 const std::vector<double>& upper, const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  const double alpha = upper[n - 1];  // A[n-1][0]
  const double beta = lower[0];       // A[0][n-1]
  const double gamma = -diag[0];
  std::vector<double> d = diag;
  d[0] -= gamma;
  d[n - 1] -= alpha * beta / gamma;
  const auto x = solve_tridiagonal(lower, d, upper, rhs);
  std::vector<double> e(n, 0.0);
  e[0] = gamma;
  e[n - 1] = alpha;
  const auto z = solve_tridiagonal(lower, d, upper, e);
  const double factor = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - factor * z[i];
  return out;
}

struct Attempt {
  bool ok = false;
  Profile u;
  int iterations = 0;
};

// Implicit Euler: w - u - dt * rhs(w, t + dt) = 0 by damped Newton.
Attempt backward_euler(const Scenario& sc, const FlowConfig& cfg, const FlowState& state, double dt, double t1) {
  const InvariantForm frame = sc.reference_form(t1);
  const int n = state.u.size();
  const double h = sc.grid.spacing();
  const bool periodic = sc.grid.periodic();
  const bool flat = is_flat(sc);

  auto residual = [&](const Profile& w, const Coefficients& c) {
    const auto rhs = rhs_values(sc, c, w);
    std::vector<double> r(n);
    for (int j = 0; j < n; ++j) r[j] = w[j] - state.u[j] - dt * rhs[j];
    return r;
  };

  Profile w = state.u;
  Coefficients c = coefficients(sc, frame, w);
  if (!admissible(c)) return {};
  std::vector<double> r = residual(w, c);
  double norm = sup(r);

  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    if (!std::isfinite(norm)) return {};
    if (norm <= cfg.newton_tol) return {true, std::move(w), it};

    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    for (int j = 0; j < n; ++j) {
      const double diffusion = dt / (h * h * c.q[j]);
      const double drift = flat ? 0.0 : dt / (2.0 * h * c.p[j]);
      diag[j] = 1.0 + dt + 2.0 * diffusion;
      if (!periodic && j == 0) {
        lower[j] = 0.0;
        upper[j] = -2.0 * diffusion;
      } else if (!periodic && j == n - 1) {
        lower[j] = -2.0 * diffusion;
        upper[j] = 0.0;
      } else {
        lower[j] = -diffusion + drift;
        upper[j] = -diffusion - drift;
      }
      rhs[j] = -r[j];
    }
    const auto delta = periodic ? solve_cyclic(lower, diag, upper, rhs) : solve_tridiagonal(lower, diag, upper, rhs);

    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, lambda *= 0.5) {
      Profile trial = w;
      for (int j = 0; j < n; ++j) trial[j] += lambda * delta[j];
      Coefficients ct = coefficients(sc, frame, trial);
      if (!admissible(ct)) continue;
      auto rt = residual(trial, ct);
      const double nt = sup(rt);
      if (std::isfinite(nt) && nt < (1.0 - 1e-4 * lambda) * norm) {
        w = std::move(trial);
        c = std::move(ct);
        r = std::move(rt);
        norm = nt;
        accepted = true;
        break;
      }
    }
    if (!accepted) return {};
  }
  if (norm <= cfg.newton_tol) return {true, std::move(w), cfg.newton_max_iter};
  return {};
}

double stability_limit(const Scenario& sc, const Coefficients& c) {
  const double h = sc.grid.spacing();
  return 0.25 * h * h * *std::min_element(c.q.begin(), c.q.end());
}

Attempt runge_kutta(const Scenario& sc, const FlowState& state, double dt, double t0) {
  const int n = state.u.size();
  auto stage = [&](const Profile& w, double t, std::vector<double>& out) {
    const auto c = coefficients(sc, sc.reference_form(t), w);
    if (!admissible(c)) return false;
    out = rhs_values(sc, c, w);
    return true;
  };
  auto shifted = [&](const std::vector<double>& k, double scale) {
    Profile w = state.u;
    for (int j = 0; j < n; ++j) w[j] += scale * k[j];
    return w;
  };
  std::vector<double> k1, k2, k3, k4;
  if (!stage(state.u, t0, k1)) return {};
  if (!stage(shifted(k1, dt / 2), t0 + dt / 2, k2)) return {};
  if (!stage(shifted(k2, dt / 2), t0 + dt / 2, k3)) return {};
  if (!stage(shifted(k3, dt), t0 + dt, k4)) return {};
  Profile w = state.u;
  for (int j = 0; j < n; ++j) w[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  return {true, std::move(w), 0};
}

FlowState accept(const Scenario& sc, const FlowState& prev, Profile u, double t1, int iterations) {
  MetricProfile g = evolved_metric(sc, u, t1);
  Profile v = flow_rhs(sc, u, t1);
  FlowState next{t1, std::move(u), std::move(v), std::move(g), 0.0, prev.step_count + 1, false, prev.dt_next, iterations};
  next.phi_residual = volume_identity_residual(next, sc);
  return next;
}

double relative_change(const MetricProfile& before, const MetricProfile& after) {
  double worst = 0.0;
  for (int j = 0; j < after.grid().size(); ++j) {
    worst = std::max(worst, std::abs(after.slope()[j] - before.slope()[j]) / after.slope()[j]);
    worst = std::max(worst, std::abs(after.curvature()[j] - before.curvature()[j]) / after.curvature()[j]);
  }
  return worst;
}

Snapshot snapshot_of(const FlowState& s) {
  return Snapshot{s.t, s.u, s.v, s.g.slope(), s.g.curvature()};
}

StepRecord record_of(const Scenario& sc, const FlowState& s, double dt) {
  StepRecord r;
  r.t = s.t;
  r.dt = dt;
  r.u_min = s.u.min();
  r.u_max = s.u.max();
  r.u_argmin = s.u.argmin();
  r.u_argmax = s.u.argmax();
  r.v_min = s.v.min();
  r.v_max = s.v.max();
  const InvariantForm frame = sc.reference_form(s.t);
  const Profile& p = s.g.slope();
  const Profile& q = s.g.curvature();
  const Profile& p0 = sc.g0.slope();
  const Profile& q0 = sc.g0.curvature();
  double inf = std::numeric_limits<double>::infinity();
  r.det_min = r.det_t_min = r.slope_ratio_min = r.curvature_ratio_min = inf;
  r.det_max = r.det_t_max = r.slope_ratio_max = r.curvature_ratio_max = r.trace_max = -inf;
  for (int j = 0; j < p.size(); ++j) {
    const double det = p[j] * q[j] / sc.density[j];
    const double det_t = p[j] * q[j] / (frame.p[j] * frame.q[j]);
    r.det_min = std::min(r.det_min, det);
    r.det_max = std::max(r.det_max, det);
    r.det_t_min = std::min(r.det_t_min, det_t);
    r.det_t_max = std::max(r.det_t_max, det_t);
    r.slope_ratio_min = std::min(r.slope_ratio_min, p[j] / p0[j]);
    r.slope_ratio_max = std::max(r.slope_ratio_max, p[j] / p0[j]);
    r.curvature_ratio_min = std::min(r.curvature_ratio_min, q[j] / q0[j]);
    r.curvature_ratio_max = std::max(r.curvature_ratio_max, q[j] / q0[j]);
    r.trace_max = std::max(r.trace_max, p[j] / frame.p[j] + q[j] / frame.q[j]);
  }
  r.curvature_max = q.max();
  r.pairings = pairings_of(s.g.form(), sc.surface);
  r.class_coeffs = class_of(s.g.form(), sc.surface);
  r.phi_residual = s.phi_residual;
  r.newton_iterations = s.newton_iterations;
  return r;
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::backward_euler_newton: return "backward_euler_newton";
    case Scheme::explicit_rk4: return "explicit_rk4";
  }
  return "?";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "backward_euler_newton") return Scheme::backward_euler_newton;
  if (text == "explicit_rk4") return Scheme::explicit_rk4;
  throw std::invalid_argument("unknown scheme '" + std::string(text) + "'");
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::degenerate_margin: return "degenerate_margin";
    case Termination::newton_failure: return "newton_failure";
    case Termination::volume_drift: return "volume_drift";
  }
  return "?";
}

Termination parse_termination(std::string_view text) {
  for (auto r : {Termination::reached_t_end, Termination::degenerate_margin, Termination::newton_failure,
                 Termination::volume_drift})
    if (text == to_string(r)) return r;
  throw std::invalid_argument("unknown termination reason '" + std::string(text) + "'");
}

void FlowConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("flow config: " + what); };
  if (!(dt_min > 0.0)) fail("dt_min must be positive");
  if (!(dt_init >= dt_min)) fail("dt_init must be >= dt_min");
  if (!(t_end > 0.0)) fail("t_end must be positive");
  if (!(newton_tol > 0.0)) fail("newton_tol must be positive");
  if (newton_max_iter < 1) fail("newton_max_iter must be >= 1");
  if (!(positivity_floor > 0.0)) fail("positivity_floor must be positive");
  if (!(snapshot_every > 0.0)) fail("snapshot_every must be positive");
  if (!(max_relative_change > 0.0)) fail("max_relative_change must be positive");
  if (!(volume_drift_limit > 0.0)) fail("volume_drift_limit must be positive");
}

FlowConfig FlowConfig::defaults_for(const Scenario& scenario) {
  FlowConfig cfg;
  if (scenario.finite_time()) {
    cfg.t_end = scenario.singular_time() + 0.5;
  } else {
    cfg.scheme = Scheme::explicit_rk4;
    cfg.t_end = 5.0;
  }
  return cfg;
}

MetricProfile evolved_metric(const Scenario& scenario, const Profile& u, double t) {
  auto c = coefficients(scenario, scenario.reference_form(t), u);
  const auto& g0 = scenario.g0.form();
  return MetricProfile(InvariantForm{Profile(scenario.grid, std::move(c.p)), Profile(scenario.grid, std::move(c.q)),
                                     g0.k, g0.chart});
}

Profile flow_rhs(const Scenario& scenario, const Profile& u, double t) {
  const auto c = coefficients(scenario, scenario.reference_form(t), u);
  return Profile(scenario.grid, rhs_values(scenario, c, u));
}

FlowState initial_state(const Scenario& scenario, const FlowConfig& cfg) {
  cfg.validate();
  FlowState s{0.0, Profile(scenario.grid), Profile(scenario.grid), scenario.g0, 0.0, 0, false, cfg.dt_init, 0};
  s.v = flow_rhs(scenario, s.u, 0.0);
  s.phi_residual = volume_identity_residual(s, scenario);
  return s;
}

FlowState step(const FlowState& state, const FlowConfig& cfg, const Scenario& scenario, double t_limit) {
  if (state.degenerate) throw std::logic_error("step: state is degenerate");
  const double room = t_limit - state.t;
  if (!(room > 0.0)) throw std::invalid_argument("step: t_limit must exceed the current time");

  double dt = std::min(state.dt_next, cfg.dt_init);
  if (cfg.scheme == Scheme::explicit_rk4) {
    const auto c = coefficients(scenario, scenario.reference_form(state.t), state.u);
    dt = std::min(dt, stability_limit(scenario, c));
  }
  bool halved = false;
  while (dt >= cfg.dt_min) {
    const bool lands = dt >= room;
    const double used = lands ? room : dt;
    const double t1 = lands ? t_limit : state.t + dt;
    Attempt a = cfg.scheme == Scheme::backward_euler_newton ? backward_euler(scenario, cfg, state, used, t1)
                                                            : runge_kutta(scenario, state, used, state.t);
    if (a.ok) {
      FlowState next = accept(scenario, state, std::move(a.u), t1, a.iterations);
      const double change = relative_change(state.g, next.g);
      if (change > cfg.max_relative_change && dt * 0.5 >= cfg.dt_min) {
        dt *= 0.5;
        halved = true;
        continue;
      }
      if (halved || change > 0.5 * cfg.max_relative_change)
        next.dt_next = dt;
      else if (lands)
        next.dt_next = state.dt_next;
      else
        next.dt_next = std::min(2.0 * dt, cfg.dt_init);
      if (next.g.positivity_margin(scenario.g0) < cfg.positivity_floor) next.degenerate = true;
      return next;
    }
    dt *= 0.5;
    halved = true;
  }
  FlowState frozen = state;
  frozen.degenerate = true;
  return frozen;
}

double volume_identity_residual(const FlowState& state, const Scenario& scenario) {
  Profile integrand(scenario.grid);
  for (int j = 0; j < integrand.size(); ++j)
    integrand[j] = std::exp(state.v[j] + state.u[j] - scenario.f[j]) * scenario.density[j];
  const double vol0 = scenario.density.integral();
  const auto path = class_path(scenario.ample, scenario.surface, state.t);
  const auto start = scenario.ample.to_doubles();
  const double ratio = intersect(path, path, scenario.surface) / intersect(start, start, scenario.surface);
  return std::abs(integrand.integral() - vol0 * ratio) / vol0;
}

Profile gauge_change(const Profile& u, const Profile& h, double t) { return u + decay_weight(t) * h; }

ScenarioInfo describe(const Scenario& scenario) {
  ScenarioInfo info;
  info.surface = scenario.surface.name();
  for (const auto& c : scenario.ample.coeffs()) info.ample.push_back(to_string(c));
  info.half_width = scenario.grid.half_width();
  info.nodes = scenario.grid.size();
  info.periodic = scenario.grid.periodic();
  info.hash = scenario.hash();
  info.nef_threshold = scenario.finite_time() ? to_string(*scenario.contraction.threshold.value) : "inf";
  info.singular_time = scenario.singular_time();
  info.contraction = to_string(scenario.contraction.kind);
  return info;
}

Scenario scenario_from(const ScenarioInfo& info) {
  const SurfaceModel surface = surface_from_name(info.surface);
  std::vector<Rational> coeffs;
  for (const auto& c : info.ample) coeffs.push_back(parse_rational(c));
  return build_scenario(surface, DivisorClass(coeffs), RhoGrid(info.half_width, info.nodes, info.periodic));
}

bool RunLedger::has_snapshot(double t) const {
  return std::any_of(snapshots.begin(), snapshots.end(), [&](const Snapshot& s) { return std::abs(s.t - t) <= 1e-12; });
}

const Snapshot& RunLedger::snapshot_at(double t) const {
  for (const auto& s : snapshots)
    if (std::abs(s.t - t) <= 1e-12) return s;
  std::ostringstream msg;
  msg << "no snapshot at t = " << t;
  throw std::out_of_range(msg.str());
}

std::vector<double> diagnostic_times(const Scenario& scenario) {
  std::vector<double> times{0.5};
  if (scenario.finite_time()) {
    const double T = scenario.singular_time();
    times.push_back(T / 2);
    for (double gap : {0.2, 0.1, 0.05, 0.02})
      if (T - gap > 0.0) times.push_back(T - gap);
  }
  return times;
}

RunLedger run_flow(const Scenario& scenario, const FlowConfig& cfg, std::vector<double> extra_times) {
  cfg.validate();
  RunLedger ledger;
  ledger.scenario = describe(scenario);
  ledger.config = cfg;

  std::vector<double> targets = std::move(extra_times);
  for (double t : diagnostic_times(scenario)) targets.push_back(t);
  for (int i = 1; i * cfg.snapshot_every < cfg.t_end; ++i) targets.push_back(i * cfg.snapshot_every);
  targets.push_back(cfg.t_end);
  std::erase_if(targets, [&](double t) { return !(t > 0.0) || t > cfg.t_end; });
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end(), [](double a, double b) { return std::abs(a - b) <= 1e-12; }),
                targets.end());

  FlowState state = initial_state(scenario, cfg);
  ledger.steps.push_back(record_of(scenario, state, 0.0));
  ledger.snapshots.push_back(snapshot_of(state));
  ledger.termination = Termination::reached_t_end;

  std::size_t next_target = 0;
  while (next_target < targets.size()) {
    const double target = targets[next_target];
    FlowState next = step(state, cfg, scenario, target);
    if (next.degenerate && next.t == state.t) {
      ledger.termination = Termination::newton_failure;
      ledger.message = "no convergent step above dt_min";
      break;
    }
    const double dt = next.t - state.t;
    state = std::move(next);
    ledger.steps.push_back(record_of(scenario, state, dt));
    if (state.t == target) {
      ledger.snapshots.push_back(snapshot_of(state));
      ++next_target;
    }
    if (state.degenerate) {
      ledger.termination = Termination::degenerate_margin;
      ledger.message = "metric fell below the positivity floor";
      break;
    }
    if (state.phi_residual > cfg.volume_drift_limit) {
      ledger.termination = Termination::volume_drift;
      ledger.message = "volume identity residual exceeded the drift limit";
      break;
    }
  }
  ledger.t_numeric = state.t;
  ledger.terminal = snapshot_of(state);
  return ledger;
}

double rescale_time(double K, double s) { return std::log((std::exp(s) + K - 1.0) / K); }
double rescale_factor(double K, double s) { return (K - 1.0) * std::exp(-s) + 1.0; }

RescaleReport rescaled_run(const Rational& K, const Scenario& scenario, const FlowConfig& cfg, int samples,
                           double s_fraction) {
  if (!(K > 0)) throw std::invalid_argument("rescaled_run: K must be positive");
  if (samples < 1) throw std::invalid_argument("rescaled_run: need at least one sample");
  const double k = to_double(K);
  const Scenario scaled = build_scenario(scenario.surface, K * scenario.ample, scenario.grid);

  RescaleReport report;
  report.factor = K;
  report.singular_time_base = scenario.singular_time();
  report.singular_time_rescaled = scaled.singular_time();
  const double horizon = scaled.finite_time() ? scaled.singular_time() : cfg.t_end;
  const double s_max = s_fraction * horizon;

  std::vector<double> s_values, t_values;
  for (int i = 1; i <= samples; ++i) {
    s_values.push_back(s_max * i / samples);
    t_values.push_back(rescale_time(k, s_values.back()));
  }

  FlowConfig base_cfg = cfg;
  FlowConfig scaled_cfg = cfg;
  if (scenario.finite_time()) {
    base_cfg.t_end = scenario.singular_time() + 0.5;
    scaled_cfg.t_end = scaled.singular_time() + 0.5;
  }
  const RunLedger base = run_flow(scenario, base_cfg, t_values);
  const RunLedger tilde = run_flow(scaled, scaled_cfg, s_values);
  report.t_numeric_base = base.t_numeric;
  report.t_numeric_rescaled = tilde.t_numeric;

  for (int i = 0; i < samples; ++i) {
    RescaleSample sample{s_values[i], t_values[i], rescale_factor(k, s_values[i]), 0.0};
    if (!base.has_snapshot(sample.t) || !tilde.has_snapshot(sample.s)) {
      sample.defect = std::numeric_limits<double>::infinity();
    } else {
      const Snapshot& a = base.snapshot_at(sample.t);
      const Snapshot& b = tilde.snapshot_at(sample.s);
      sample.defect = std::max((sample.factor * a.slope - b.slope).sup_norm(),
                               (sample.factor * a.curvature - b.curvature).sup_norm());
    }
    report.defect = std::max(report.defect, sample.defect);
    report.samples.push_back(sample);
  }
  return report;
}

}  // namespace krf
