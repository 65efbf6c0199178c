#include "krf/certificates.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace krf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeSlack = 1e-12;

// log(b(s)/r) with b = (r+1)e^{-s} - 1 = -(r+1)e^{-s} expm1(s - T), free of
// cancellation near s = T.
double log_b_ratio(double r, double s) {
  const double T = std::log1p(r);
  return std::log(-(r + 1.0) * std::exp(-s) * std::expm1(s - T) / r);
}

// int_0^t e^s g(s) ds for the integrand g = log(b/r).
double weighted_log_b_integral(double r, double t) {
  if (t <= 0.0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate([r](double s) { return std::exp(s) * log_b_ratio(r, s); }, 0.0, t);
}

std::string format(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

bool stable(double a, double b) { return std::abs(a - b) <= 0.1 * std::max(std::abs(a), std::abs(b)); }

double class_window_end(const RunLedger& run) {
  const double T = run.scenario.singular_time;
  return std::isfinite(T) ? std::min(T - 0.05, run.t_numeric) : run.t_numeric;
}

}  // namespace

double Envelope::u_plus(double t) const { return -std::expm1(-t) * K_sup; }

double Envelope::log_b_term(double t) const {
  if (!std::isfinite(threshold)) return -dimension * t;
  return dimension * log_b_ratio(threshold, t);
}

double Envelope::u_minus(double t) const {
  if (t <= 0.0) return 0.0;
  if (!std::isfinite(threshold)) {
    // b = e^{-s}: int_0^t e^s (-n s) ds = -n ((t - 1)e^t + 1)
    const double integral = -dimension * ((t - 1.0) * std::exp(t) + 1.0);
    return std::exp(-t) * integral - std::expm1(-t) * K_inf;
  }
  t = std::min(t, singular_time);
  const double integral = dimension * weighted_log_b_integral(threshold, t);
  return std::exp(-t) * integral - std::expm1(-t) * K_inf;
}

double integrate_log_b(double r, double t) {
  if (!(r > 0.0)) throw std::invalid_argument("integrate_log_b: r must be positive");
  t = std::min(t, std::log1p(r));
  if (t <= 0.0) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate([r](double s) { return log_b_ratio(r, s); }, 0.0, t);
}

Envelope build_envelope(const Scenario& scenario, int time_samples) {
  if (time_samples < 1) throw std::invalid_argument("build_envelope: need a positive time sample");
  Envelope env;
  env.dimension = scenario.dimension;
  env.threshold = scenario.nef_threshold();
  env.singular_time = scenario.singular_time();
  env.scenario_hash = scenario.hash();
  env.K_inf = scenario.f.min();

  const double horizon = scenario.finite_time() ? scenario.singular_time() : 10.0;
  double k_sup = -kInf;
  for (int i = 0; i < time_samples; ++i) {
    const double t = horizon * i / time_samples;
    const InvariantForm frame = scenario.reference_form(t);
    for (int j = 0; j < scenario.grid.size(); ++j) {
      const double det = frame.p[j] * frame.q[j] / scenario.density[j];
      if (det > 0.0) k_sup = std::max(k_sup, std::log(det) + scenario.f[j]);
    }
  }
  env.K_sup = k_sup;
  return env;
}

bool CertificateReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.passed; });
}

const CheckRecord& CertificateReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw std::out_of_range("no check named '" + name + "'");
}

CheckRecord check_sandwich(const RunLedger& run, const Envelope& env) {
  if (run.scenario.hash != env.scenario_hash)
    throw std::invalid_argument("check_sandwich: run and envelope belong to different scenarios");
  CheckRecord rec{"sandwich", 0.0, run.t_numeric, kInf, -1, 0.0, false, ""};
  for (const auto& s : run.steps) {
    const double upper = env.u_plus(s.t) - s.u_max;
    const double lower = s.u_min - env.u_minus(s.t);
    if (upper < rec.worst_margin) {
      rec.worst_margin = upper;
      rec.witness_node = s.u_argmax;
      rec.witness_t = s.t;
    }
    if (lower < rec.worst_margin) {
      rec.worst_margin = lower;
      rec.witness_node = s.u_argmin;
      rec.witness_t = s.t;
    }
  }
  rec.passed = rec.worst_margin >= -kSandwichSlack;
  rec.detail = "K_sup=" + format(env.K_sup) + " K_inf=" + format(env.K_inf);
  return rec;
}

std::vector<CheckRecord> check_v_bounds(const RunLedger& run, const RunLedger* refined) {
  if (run.steps.empty()) throw std::invalid_argument("check_v_bounds: empty run");
  const double f_max = run.steps.front().v_max;  // v(0) = f
  CheckRecord upper{"v-upper", 0.0, run.t_numeric, kInf, -1, 0.0, false, ""};
  for (const auto& s : run.steps) {
    const double margin = f_max + 1e-3 - s.v_max;
    if (margin < upper.worst_margin) {
      upper.worst_margin = margin;
      upper.witness_t = s.t;
    }
  }
  upper.passed = upper.worst_margin >= 0.0;
  upper.detail = "max f=" + format(f_max);

  auto min_v = [](const RunLedger& r, double t_hi, double& when) {
    double m = kInf;
    for (const auto& s : r.steps)
      if (s.t <= t_hi + kTimeSlack && s.v_min < m) {
        m = s.v_min;
        when = s.t;
      }
    return m;
  };
  const double t_hi = class_window_end(run);
  CheckRecord lower{"v-lower", 0.0, t_hi, 0.0, -1, 0.0, false, ""};
  const double v_lo = min_v(run, t_hi, lower.witness_t);
  // no a priori constant: the margin is 0 for a finite minimum, or the slack
  // left in the 10% agreement with a refined run
  lower.worst_margin = std::isfinite(v_lo) ? 0.0 : -kInf;
  lower.detail = "min v=" + format(v_lo);
  if (refined) {
    double when = 0.0;
    const double v_fine = min_v(*refined, t_hi, when);
    lower.worst_margin = std::isfinite(v_lo) && std::isfinite(v_fine)
                             ? 0.1 * std::max(std::abs(v_lo), std::abs(v_fine)) - std::abs(v_lo - v_fine)
                             : -kInf;
    lower.detail += " refined=" + format(v_fine);
  }
  lower.passed = lower.worst_margin >= 0.0;
  return {upper, lower};
}

EquivalenceBounds equivalence_bounds(const RunLedger& run, double t0) {
  EquivalenceBounds b{kInf, -kInf, -kInf, -1, 0.0};
  for (const auto& s : run.steps) {
    if (s.t > t0 + kTimeSlack) break;
    const double lo = std::min(s.slope_ratio_min, s.curvature_ratio_min);
    if (lo < b.C0) {
      b.C0 = lo;
      b.witness_t = s.t;
    }
    b.C1 = std::max({b.C1, s.slope_ratio_max, s.curvature_ratio_max});
    b.trace_max = std::max(b.trace_max, s.trace_max);
  }
  return b;
}

double curvature_floor(const Scenario& scenario, double t0, int time_samples) {
  const double R = scenario.grid.half_width();
  double kappa = kInf;
  for (int i = 0; i <= time_samples; ++i) {
    const double t = t0 * i / time_samples;
    const MetricProfile g(scenario.reference_form(t));
    if (!g.positive()) continue;
    const InvariantForm ric = ricci_form(g);
    for (int j = 0; j < scenario.grid.size(); ++j) {
      if (std::abs(scenario.grid.node(j)) > R / 2) continue;
      kappa = std::min({kappa, ric.p[j] / g.slope()[j], ric.q[j] / g.curvature()[j]});
    }
  }
  return kappa;
}

std::vector<CheckRecord> check_metric_equivalence(const RunLedger& run, const Scenario& scenario, double t0,
                                                  const RunLedger* refined) {
  if (scenario.finite_time() && !(t0 < scenario.singular_time()))
    throw std::invalid_argument("check_metric_equivalence: t0 must be below the singular time");
  if (run.scenario.hash != scenario.hash())
    throw std::invalid_argument("check_metric_equivalence: run belongs to a different scenario");
  t0 = std::min(t0, run.t_numeric);
  const EquivalenceBounds b = equivalence_bounds(run, t0);

  CheckRecord eq{"metric-equivalence", 0.0, t0, b.C0, -1, b.witness_t, false, ""};
  // locate the witness node on the latest snapshot inside the window
  for (auto it = run.snapshots.rbegin(); it != run.snapshots.rend(); ++it) {
    if (it->t > t0 + kTimeSlack) continue;
    double worst = kInf;
    for (int j = 0; j < it->slope.size(); ++j) {
      const double r = std::min(it->slope[j] / scenario.g0.slope()[j], it->curvature[j] / scenario.g0.curvature()[j]);
      if (r < worst) {
        worst = r;
        eq.witness_node = j;
      }
    }
    break;
  }
  eq.passed = b.C0 > 0.0 && std::isfinite(b.C1);
  eq.detail = "C0=" + format(b.C0) + " C1=" + format(b.C1);
  if (refined) {
    const EquivalenceBounds r = equivalence_bounds(*refined, t0);
    eq.passed = eq.passed && stable(b.C0, r.C0) && stable(b.C1, r.C1);
    eq.detail += " refined C0=" + format(r.C0) + " C1=" + format(r.C1);
  }

  const double kappa = curvature_floor(scenario, t0);
  const double lambda = 1.0 + std::max(0.0, -kappa);
  double z_max = -kInf;
  for (const auto& snap : run.snapshots) {
    if (snap.t > t0 + kTimeSlack) continue;
    const InvariantForm frame = scenario.reference_form(snap.t);
    for (int j = 0; j < snap.u.size(); ++j) {
      const double trace = snap.slope[j] / frame.p[j] + snap.curvature[j] / frame.q[j];
      z_max = std::max(z_max, std::exp(-lambda * snap.u[j]) * trace);
    }
  }
  CheckRecord lap{"laplacian-upper", 0.0, t0, b.trace_max, -1, 0.0, false, ""};
  lap.passed = std::isfinite(b.trace_max) && b.trace_max > 0.0 && std::isfinite(z_max);
  lap.detail = "sup(n+Laplacian u)=" + format(b.trace_max) + " lambda=" + format(lambda) + " sup z=" + format(z_max);
  return {eq, lap};
}

CheckRecord check_class_tracking(const RunLedger& run, const Scenario& scenario, double t_max) {
  CheckRecord rec{"class-tracking", 0.0, t_max, kInf, -1, 0.0, false, ""};
  double worst = 0.0;
  for (const auto& s : run.steps) {
    if (s.t > t_max + kTimeSlack) break;
    const auto expected = class_path(scenario.ample, scenario.surface, s.t);
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const double err = std::abs(s.class_coeffs.at(i) - expected[i]);
      if (err > worst) {
        worst = err;
        rec.witness_t = s.t;
      }
    }
  }
  rec.worst_margin = 1e-3 - worst;
  rec.passed = worst <= 1e-3;
  rec.detail = "max coefficient error=" + format(worst);
  return rec;
}

CheckRecord check_rescale_covariance(const std::vector<RescaleReport>& reports, double tolerance) {
  CheckRecord rec{"rescale-covariance", 0.0, 0.0, kInf, -1, 0.0, false, ""};
  if (reports.empty()) {
    rec.worst_margin = -kInf;
    rec.detail = "no rescaled runs";
    return rec;
  }
  std::ostringstream detail;
  bool times_match = true;
  for (const auto& r : reports) {
    rec.worst_margin = std::min(rec.worst_margin, tolerance - r.defect);
    if (!r.samples.empty()) rec.t_hi = std::max(rec.t_hi, r.samples.back().s);
    detail << "K=" << to_string(r.factor) << " defect=" << format(r.defect);
    if (std::isfinite(r.singular_time_rescaled)) {
      const double gap = r.t_numeric_rescaled - r.singular_time_rescaled;
      times_match = times_match && std::abs(gap) <= kSingularTimeTolerance;
      detail << " T~numeric-T~=" << format(gap);
    }
    detail << "; ";
  }
  rec.passed = rec.worst_margin >= 0.0 && times_match;
  rec.detail = detail.str();
  return rec;
}

std::vector<std::string> all_certificate_names() {
  return {"sandwich",        "v-upper",        "v-lower",           "laplacian-upper",
          "metric-equivalence", "class-tracking", "rescale-covariance"};
}

CertificateReport certify(const RunLedger& run, const Scenario& scenario, const CertifyOptions& options) {
  if (run.scenario.hash != scenario.hash()) throw std::invalid_argument("certify: ledger does not match the scenario");
  for (const auto& name : options.enabled) {
    const auto names = all_certificate_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw std::invalid_argument("unknown certificate '" + name + "'");
  }
  auto wanted = [&](const std::string& name) {
    if (options.enabled.empty()) return name != "rescale-covariance" || !options.rescale.empty();
    return std::find(options.enabled.begin(), options.enabled.end(), name) != options.enabled.end();
  };

  CertificateReport report;
  report.scenario_hash = run.scenario.hash;
  report.surface = run.scenario.surface;
  report.nodes = run.scenario.nodes;

  if (wanted("sandwich")) report.checks.push_back(check_sandwich(run, build_envelope(scenario)));
  if (wanted("v-upper") || wanted("v-lower"))
    for (auto& rec : check_v_bounds(run, options.refined))
      if (wanted(rec.name)) report.checks.push_back(std::move(rec));
  if (wanted("metric-equivalence") || wanted("laplacian-upper")) {
    const double t0 = options.equivalence_time.value_or(class_window_end(run));
    for (auto& rec : check_metric_equivalence(run, scenario, t0, options.refined))
      if (wanted(rec.name)) report.checks.push_back(std::move(rec));
  }
  if (wanted("class-tracking")) report.checks.push_back(check_class_tracking(run, scenario, class_window_end(run)));
  if (wanted("rescale-covariance")) report.checks.push_back(check_rescale_covariance(options.rescale));
  return report;
}

}  // namespace krf
