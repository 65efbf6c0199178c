#include "krf/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace krf {

namespace {

constexpr double kUnresolved = 1e-14;

Profile det_against_initial(const Snapshot& s, const Scenario& sc) {
  return quotient(hadamard(s.slope, s.curvature), sc.density);
}

void require_divisorial(const Scenario& sc, const char* what) {
  if (sc.contraction.kind != ContractionKind::divisorial)
    throw std::invalid_argument(std::string(what) + ": scenario contraction is " + to_string(sc.contraction.kind) +
                                ", not divisorial");
}

bool within10(double a, double b) { return std::abs(a - b) <= 0.1 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

std::string to_string(LocusKind kind) {
  switch (kind) {
    case LocusKind::empty: return "empty";
    case LocusKind::lower_end: return "lower_end";
    case LocusKind::upper_end: return "upper_end";
    case LocusKind::interior: return "interior";
    case LocusKind::everywhere: return "everywhere";
  }
  return "?";
}

DegeneracyLocus locate_S0(const Snapshot& terminal, const Scenario& scenario, std::optional<double> threshold) {
  const Profile det = det_against_initial(terminal, scenario);
  DegeneracyLocus locus;
  locus.threshold = threshold.value_or(1e-3);  // the initial ratio is identically 1
  for (int j = 0; j < det.size(); ++j)
    if (!(det[j] >= locus.threshold)) locus.nodes.push_back(j);

  const int n = det.size();
  const double R = scenario.grid.half_width();
  if (locus.nodes.empty()) {
    locus.kind = LocusKind::empty;
  } else if (static_cast<int>(locus.nodes.size()) == n) {
    locus.kind = LocusKind::everywhere;
  } else if (std::all_of(locus.nodes.begin(), locus.nodes.end(),
                         [&](int j) { return scenario.grid.node(j) <= -R / 3; })) {
    locus.kind = LocusKind::lower_end;
  } else if (std::all_of(locus.nodes.begin(), locus.nodes.end(),
                         [&](int j) { return scenario.grid.node(j) >= R / 3; })) {
    locus.kind = LocusKind::upper_end;
  } else {
    locus.kind = LocusKind::interior;
  }
  return locus;
}

DecayFit fit_decay(const Snapshot& snapshot, const Scenario& scenario, double window_lo, double window_hi) {
  require_divisorial(scenario, "fit_decay");
  const double R = scenario.grid.half_width();
  if (!(window_lo >= -R && window_hi <= -R / 3 && window_lo < window_hi))
    throw std::invalid_argument("fit_decay: window must lie inside [-R, -R/3]");

  DecayFit fit;
  fit.window_lo = window_lo;
  fit.window_hi = window_hi;
  fit.predicted_exponent = to_double(scenario.contraction.discrepancy.value_or(Rational(1)));

  const Profile det = det_against_initial(snapshot, scenario);
  std::vector<int> nodes;
  for (int j = 0; j < det.size(); ++j) {
    const double x = scenario.grid.node(j);
    if (x >= window_lo && x <= window_hi) nodes.push_back(j);
  }
  // shrink from the degenerate side until every node is resolvable
  auto bad = [&](int j) { return !(det[j] > kUnresolved) || !std::isfinite(det[j]); };
  const auto last_bad = std::find_if(nodes.rbegin(), nodes.rend(), bad);
  if (last_bad != nodes.rend()) {
    const std::size_t keep_from = nodes.size() - static_cast<std::size_t>(last_bad - nodes.rbegin());
    nodes.erase(nodes.begin(), nodes.begin() + static_cast<long>(keep_from));
    std::ostringstream msg;
    msg << "window shrunk to start at rho = " << (nodes.empty() ? window_hi : scenario.grid.node(nodes.front()))
        << " to skip unresolved determinants";
    fit.warning = msg.str();
    if (!nodes.empty()) fit.window_lo = scenario.grid.node(nodes.front());
  }
  if (nodes.size() < 3) {
    fit.warning += fit.warning.empty() ? "too few nodes to fit" : "; too few nodes to fit";
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    fit.residual = std::numeric_limits<double>::infinity();
    return fit;
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(nodes.size());
  for (int j : nodes) {
    const double x = scenario.grid.node(j), y = std::log(det[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss = 0.0;
  for (int j : nodes) {
    const double e = std::log(det[j]) - (fit.intercept + fit.slope * scenario.grid.node(j));
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / m);
  fit.passed = std::abs(fit.slope - fit.predicted_exponent) <= 0.2 && fit.residual <= 0.05;
  return fit;
}

namespace {

std::vector<ProbeSample> probe_samples(const RunLedger& run, const Scenario& sc, double rho_cut) {
  const double T = sc.singular_time();
  std::vector<ProbeSample> out;
  for (double gap : {0.2, 0.1, 0.05, 0.02}) {
    const double t = T - gap;
    if (!run.has_snapshot(t)) continue;
    const Snapshot& s = run.snapshot_at(t);
    const InvariantForm frame = sc.reference_form(t);
    ProbeSample p;
    p.t = t;
    p.det_min = p.downstream_min = std::numeric_limits<double>::infinity();
    p.det_max = p.downstream_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < s.slope.size(); ++j) {
      const double det = s.slope[j] * s.curvature[j];
      const double ratio = det / (frame.p[j] * frame.q[j]);
      p.det_min = std::min(p.det_min, ratio);
      p.det_max = std::max(p.det_max, ratio);
      if (sc.grid.node(j) < rho_cut) continue;
      p.first_sup = std::max(p.first_sup, std::abs(s.slope[j]));
      p.second_sup = std::max(p.second_sup, std::abs(s.curvature[j]));
      const double model = sc.eta_L.p[j] * sc.eta_L.q[j];
      p.downstream_min = std::min(p.downstream_min, det / model);
      p.downstream_max = std::max(p.downstream_max, det / model);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

PushforwardProbe probe_pushforward(const RunLedger& run, const Scenario& scenario, double rho_cut,
                                   const RunLedger* refined) {
  require_divisorial(scenario, "probe_pushforward");
  PushforwardProbe probe;
  probe.rho_cut = rho_cut;
  probe.samples = probe_samples(run, scenario, rho_cut);
  if (probe.samples.empty()) {
    probe.detail = "run has no snapshots approaching the singular time";
    return probe;
  }
  probe.B0 = std::numeric_limits<double>::infinity();
  probe.B1 = -std::numeric_limits<double>::infinity();
  double first = 0, second = 0;
  for (const auto& s : probe.samples) {
    probe.B0 = std::min(probe.B0, s.det_min);
    probe.B1 = std::max(probe.B1, s.det_max);
    first = std::max(first, s.first_sup);
    second = std::max(second, s.second_sup);
  }
  probe.passed = probe.B0 > 0.0 && std::isfinite(probe.B1);
  std::ostringstream detail;
  detail << "B0=" << probe.B0 << " B1=" << probe.B1 << " sup U'=" << first << " sup U''=" << second;
  if (refined) {
    const auto fine = probe_samples(*refined, scenario_from(refined->scenario), rho_cut);
    double B0 = std::numeric_limits<double>::infinity(), B1 = -B0, f1 = 0, f2 = 0;
    for (const auto& s : fine) {
      B0 = std::min(B0, s.det_min);
      B1 = std::max(B1, s.det_max);
      f1 = std::max(f1, s.first_sup);
      f2 = std::max(f2, s.second_sup);
    }
    probe.passed = probe.passed && fine.size() == probe.samples.size() && within10(probe.B0, B0) &&
                   within10(probe.B1, B1) && within10(first, f1) && within10(second, f2);
    detail << "; refined B0=" << B0 << " B1=" << B1 << " sup U'=" << f1 << " sup U''=" << f2;
  }
  probe.detail = detail.str();
  return probe;
}

PairingTrace contracted_pairings(const RunLedger& run, const Scenario& scenario) {
  if (!scenario.contraction.contracted_ray) throw std::invalid_argument("contracted_pairings: no contracted ray");
  const auto& ray = scenario.contraction.contracted_ray->cls;
  const CurveClass* other = nullptr;
  for (const auto& c : scenario.surface.curve_basis)
    if (!(c.cls == ray)) other = &c;
  PairingTrace trace;
  auto add = [&](const Snapshot& s) {
    const auto cls = class_of(s.metric(scenario.g0.k(), scenario.g0.form().chart).form(), scenario.surface);
    trace.times.push_back(s.t);
    trace.contracted.push_back(intersect(cls, ray.to_doubles(), scenario.surface));
    trace.uncontracted.push_back(other ? intersect(cls, other->cls.to_doubles(), scenario.surface) : 0.0);
  };
  for (const auto& s : run.snapshots)
    if (s.t < run.terminal.t) add(s);
  add(run.terminal);
  if (other)
    trace.expected_uncontracted =
        intersect(class_path(scenario.ample, scenario.surface, scenario.singular_time()), other->cls.to_doubles(),
                  scenario.surface);
  return trace;
}

}  // namespace krf
