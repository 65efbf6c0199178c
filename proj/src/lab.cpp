#include "krf/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

namespace krf {

namespace {

std::string fixed(double x, int digits = 6) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  std::ostringstream out;
  out << std::setprecision(digits) << x;
  return out.str();
}

Json rational_or_null(const std::optional<Rational>& r) { return r ? Json(to_string(*r)) : Json(); }

std::string pairing_table(const SurfaceModel& surface, const DivisorClass& A) {
  std::ostringstream out;
  for (const auto& c : surface.curve_basis) out << "A." << c.label << " = " << to_string(intersect(A, c.cls, surface)) << "  ";
  out << "A^2 = " << to_string(intersect(A, A, surface));
  return out.str();
}

void row(std::ostream& out, const std::string& key, const std::string& value) {
  out << "  " << std::left << std::setw(18) << key << value << '\n';
}

Profile det_profile(const Snapshot& s, const Scenario& sc) {
  return det_ratio(s.metric(sc.g0.k(), sc.g0.form().chart), sc.g0);
}

Profile log_profile(const Profile& p) {
  return p.map([](double x) { return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity(); });
}

std::vector<const Snapshot*> frames_of(const RunLedger& run) {
  std::vector<const Snapshot*> frames;
  for (const auto& s : run.snapshots)
    if (s.t < run.terminal.t) frames.push_back(&s);
  frames.push_back(&run.terminal);
  return frames;
}

void write_series(const std::filesystem::path& dir, const std::string& name, const std::vector<const Snapshot*>& frames,
                  const std::function<Profile(const Snapshot&)>& value, bool csv, bool plot,
                  const std::string& y_label) {
  ProfileSeries series;
  for (const auto* s : frames) {
    series.times.push_back(s->t);
    series.profiles.push_back(value(*s));
  }
  if (csv) {
    std::ostringstream table;
    write_csv(table, series);
    write_text(dir / (name + ".csv"), table.str());
  }
  if (plot) {
    Plot p{name + " over time", "rho", y_label, {}};
    // at most a dozen curves keep the legend readable
    const std::size_t n = series.times.size(), stride = std::max<std::size_t>(1, (n + 11) / 12);
    for (std::size_t i = 0; i < n; i += stride) {
      if (i + stride >= n) i = n - 1;
      const auto nodes = series.profiles[i].grid().nodes();
      const auto v = series.profiles[i].values();
      p.curves.push_back(Curve{nodes, {v.begin(), v.end()}, "t=" + fixed(series.times[i], 4), ramp_colour(i, n)});
    }
    write_text(dir / (name + ".svg"), render_svg(p));
  }
}

std::vector<RescaleReport> rescale_reports(std::vector<std::string> factors, const std::vector<std::string>& checks,
                                           const Scenario& sc, const FlowConfig& cfg) {
  if (factors.empty() && std::find(checks.begin(), checks.end(), "rescale-covariance") != checks.end())
    factors = {"2"};
  std::vector<RescaleReport> reports;
  for (const auto& k : factors) reports.push_back(rescaled_run(parse_rational(k), sc, cfg));
  return reports;
}

int report_exit(const CertificateReport& report) { return report.passed() ? exit_ok : exit_checks_failed; }

std::filesystem::path beside(const std::filesystem::path& ledger, const char* name) {
  return ledger.has_parent_path() ? ledger.parent_path() / name : std::filesystem::path(name);
}

}  // namespace

std::filesystem::path output_root(const RunConfig& config, const std::optional<std::filesystem::path>& override) {
  if (override) return *override;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) return env;
  return config.outputs.directory;
}

Json nef_summary(const SurfaceModel& surface, const DivisorClass& A) {
  const auto info = classify_contraction(A, surface);
  Json pairings = Json::object();
  for (const auto& c : surface.curve_basis) pairings[c.label] = to_string(intersect(A, c.cls, surface));
  Json discrepancies = Json::array();
  if (info.kind == ContractionKind::divisorial)
    for (const auto& e : surface.exceptional_data)
      discrepancies.push_back({{"divisor", e.label}, {"alpha", to_string(e.discrepancy)}});
  Json L = Json();
  if (info.semiample) {
    L = Json::array();
    for (const auto& c : info.semiample->coeffs()) L.push_back(to_string(c));
  }
  Json A_coeffs = Json::array();
  for (const auto& c : A.coeffs()) A_coeffs.push_back(to_string(c));
  return Json{{"surface", surface.name()},
              {"ample", std::move(A_coeffs)},
              {"ample_text", format_class(A, surface.basis_labels)},
              {"pairings", std::move(pairings)},
              {"nef_threshold", info.threshold.value ? Json(to_string(*info.threshold.value)) : Json("inf")},
              {"singular_time", real_to_json(info.threshold.singular_time())},
              {"semiample", std::move(L)},
              {"semiample_text", info.semiample ? Json(format_class(*info.semiample, surface.basis_labels)) : Json()},
              {"contraction", to_string(info.kind)},
              {"contracted_ray", info.contracted_ray ? Json(info.contracted_ray->label) : Json()},
              {"discrepancy", rational_or_null(info.discrepancy)},
              {"discrepancies", std::move(discrepancies)}};
}

namespace {

void print_nef(const Json& s, std::ostream& out) {
  row(out, "surface", s["surface"].get<std::string>());
  row(out, "ample class", s["ample_text"].get<std::string>());
  std::string pairs;
  for (const auto& [k, v] : s["pairings"].items()) pairs += "A." + k + " = " + v.get<std::string>() + "  ";
  row(out, "pairings", pairs);
  row(out, "nef threshold r", s["nef_threshold"].get<std::string>());
  const double T = real_from_json(s["singular_time"]);
  row(out, "singular time T", std::isfinite(T) ? fixed(T) + "  (log(r+1))" : "inf (immortal)");
  row(out, "L = A + rK", s["semiample_text"].is_null() ? "-" : s["semiample_text"].get<std::string>());
  row(out, "contraction", s["contraction"].get<std::string>());
  row(out, "contracted ray", s["contracted_ray"].is_null() ? "-" : s["contracted_ray"].get<std::string>());
  std::string alphas;
  for (const auto& d : s["discrepancies"]) alphas += d["divisor"].get<std::string>() + ": " + d["alpha"].get<std::string>() + " ";
  row(out, "discrepancies", alphas.empty() ? "-" : alphas);
}

}  // namespace

int cmd_nef(const NefRequest& request, std::ostream& out, std::ostream& err) {
  SurfaceModel surface;
  DivisorClass A;
  try {
    surface = surface_from_name(request.surface);
    A = parse_class(request.ample, surface);
  } catch (const std::exception& e) {
    err << "nef: " << e.what() << '\n';
    return exit_invalid_input;
  }
  if (!is_ample(A, surface)) {
    err << "nef: " << format_class(A, surface.basis_labels) << " is not ample on " << surface.name() << ": "
        << pairing_table(surface, A) << '\n';
    return exit_invalid_input;
  }
  const Json summary = nef_summary(surface, A);
  if (request.json)
    out << summary.dump(2) << '\n';
  else
    print_nef(summary, out);
  return exit_ok;
}

int cmd_nef_catalog(bool json, std::ostream& out) {
  const std::vector<std::pair<std::string, std::string>> catalog{{"F1", "4,-1"}, {"F1", "2,-1"}, {"P2", "1"}, {"T2", "1"}};
  Json all = Json::array();
  for (const auto& [name, ample] : catalog) {
    const auto surface = surface_from_name(name);
    all.push_back(nef_summary(surface, parse_class(ample, surface)));
  }
  if (json) {
    out << all.dump(2) << '\n';
    return exit_ok;
  }
  out << std::left << std::setw(8) << "surface" << std::setw(12) << "ample" << std::setw(8) << "r" << std::setw(14)
      << "T" << "contraction\n";
  for (const auto& s : all) {
    const double T = real_from_json(s["singular_time"]);
    out << std::left << std::setw(8) << s["surface"].get<std::string>() << std::setw(12)
        << s["ample_text"].get<std::string>() << std::setw(8) << s["nef_threshold"].get<std::string>() << std::setw(14)
        << (std::isfinite(T) ? fixed(T) : "inf") << s["contraction"].get<std::string>() << '\n';
  }
  return exit_ok;
}

void print_report(const CertificateReport& report, std::ostream& out) {
  out << "  " << std::left << std::setw(20) << "check" << std::setw(7) << "result" << std::setw(14) << "margin"
      << std::setw(22) << "window" << "detail\n";
  for (const auto& c : report.checks) {
    out << "  " << std::left << std::setw(20) << c.name << std::setw(7) << (c.passed ? "PASS" : "FAIL")
        << std::setw(14) << fixed(c.worst_margin, 4) << std::setw(22)
        << ("[" + fixed(c.t_lo, 4) + ", " + fixed(c.t_hi, 4) + "]") << c.detail << '\n';
  }
  out << "  overall: " << (report.passed() ? "PASS" : "FAIL") << '\n';
}

FlowOutcome cmd_flow(const RunConfig& config, const std::filesystem::path& root, std::ostream& out,
                     std::ostream& err) {
  FlowOutcome outcome;
  std::optional<Scenario> scenario;
  try {
    config.validate();
    scenario = config.scenario();
  } catch (const std::exception& e) {
    err << "flow: " << e.what() << '\n';
    outcome.exit_code = exit_invalid_input;
    return outcome;
  }

  const Scenario& sc = *scenario;
  outcome.directory = root / config.hash_hex();
  const auto& dir = outcome.directory;
  std::filesystem::create_directories(dir);
  write_json(dir / "config.json", config_to_json(config));

  const RunLedger run = run_flow(sc, config.flow);
  write_ledger(dir / "ledger.json", run);
  out << "run " << dir.string() << '\n';
  row(out, "scenario", run.scenario.surface + " A=(" + run.scenario.ample.front() +
                           (run.scenario.ample.size() > 1 ? "," + run.scenario.ample[1] : "") + ") N=" +
                           std::to_string(run.scenario.nodes));
  row(out, "termination", to_string(run.termination) + (run.message.empty() ? "" : " (" + run.message + ")"));
  row(out, "T numeric", fixed(run.t_numeric, 10));
  row(out, "T predicted", fixed(run.scenario.singular_time, 10));
  row(out, "accepted steps", std::to_string(run.steps.size()));

  const auto frames = frames_of(run);
  const bool csv = config.outputs.csv, plots = config.outputs.plots;
  if (csv || plots) {
    write_series(dir, "u", frames, [](const Snapshot& s) { return s.u; }, csv, plots, "u");
    write_series(dir, "v", frames, [](const Snapshot& s) { return s.v; }, csv, plots, "v = du/dt");
    write_series(dir, "det", frames, [&](const Snapshot& s) { return log_profile(det_profile(s, sc)); }, csv, plots,
                 "log det(g/g0)");
  }

  try {
    CertifyOptions options;
    options.enabled = config.checks;
    options.rescale = rescale_reports(config.rescale, config.checks, sc, config.flow);
    if (!options.rescale.empty()) write_json(dir / "rescale.json", Json(options.rescale));
    const CertificateReport report = certify(run, sc, options);
    write_json(dir / "certificates.json", Json(report));
    print_report(report, out);
    outcome.exit_code = report_exit(report);
  } catch (const std::exception& e) {
    err << "flow: certificates unavailable: " << e.what() << '\n';
    outcome.exit_code = exit_checks_failed;
  }
  return outcome;
}

int cmd_certify(const CertifyRequest& request, std::ostream& out, std::ostream& err) {
  RunLedger run, refined;
  try {
    run = read_ledger(request.ledger);
    if (request.refined) refined = read_ledger(*request.refined);
  } catch (const ArtifactError& e) {
    err << "certify: " << e.what() << '\n';
    return exit_parse_error;
  }
  try {
    if (request.refined && (refined.scenario.surface != run.scenario.surface ||
                            refined.scenario.ample != run.scenario.ample))
      throw std::invalid_argument("refined ledger belongs to a different scenario");
    const Scenario sc = scenario_from(run.scenario);
    CertifyOptions options;
    options.enabled = request.checks;
    options.refined = request.refined ? &refined : nullptr;
    options.rescale = rescale_reports(request.rescale, request.checks, sc, run.config);
    const CertificateReport report = certify(run, sc, options);
    write_json(request.report.value_or(beside(request.ledger, "certificates.json")), Json(report));
    print_report(report, out);
    return report_exit(report);
  } catch (const std::invalid_argument& e) {
    err << "certify: " << e.what() << '\n';
    return exit_precondition;
  }
}

SingularityReport analyse_singularity(const RunLedger& run, const RunLedger* refined) {
  const Scenario sc = scenario_from(run.scenario);
  SingularityReport report;
  report.scenario_hash = run.scenario.hash;
  report.contraction = run.scenario.contraction;
  report.locus = locate_S0(run.terminal, sc);
  try {
    report.decay = fit_decay(run.terminal, sc);
  } catch (const std::invalid_argument& e) {
    report.rejected.push_back(std::string("decay fit: ") + e.what());
  }
  try {
    report.probe = probe_pushforward(run, sc, 0.0, refined);
  } catch (const std::invalid_argument& e) {
    report.rejected.push_back(std::string("pushforward probe: ") + e.what());
  }
  return report;
}

int cmd_singularity(const SingularityRequest& request, std::ostream& out, std::ostream& err) {
  RunLedger run, refined;
  try {
    run = read_ledger(request.ledger);
    if (request.refined) refined = read_ledger(*request.refined);
  } catch (const ArtifactError& e) {
    err << "singularity: " << e.what() << '\n';
    return exit_parse_error;
  }
  SingularityReport report;
  try {
    report = analyse_singularity(run, request.refined ? &refined : nullptr);
  } catch (const std::invalid_argument& e) {
    err << "singularity: " << e.what() << '\n';
    return exit_precondition;
  }
  const auto path = request.report.value_or(beside(request.ledger, "singularity.json"));
  write_json(path, Json(report));

  const Scenario sc = scenario_from(run.scenario);
  const Profile logdet = log_profile(det_profile(run.terminal, sc));
  {
    std::ostringstream table;
    write_csv(table, ProfileSeries{{run.terminal.t}, {logdet}});
    write_text(path.parent_path() / "logdet.csv", table.str());
  }
  if (request.plots) {
    Plot plot{"log det(g/g0) at t = " + fixed(run.terminal.t, 8), "rho", "log det", {}};
    const auto nodes = sc.grid.nodes();
    plot.curves.push_back(Curve{nodes, {logdet.values().begin(), logdet.values().end()}, "terminal", "#1f77b4"});
    if (report.decay && std::isfinite(report.decay->slope)) {
      const auto& d = *report.decay;
      plot.curves.push_back(Curve{{d.window_lo, d.window_hi},
                                  {d.intercept + d.slope * d.window_lo, d.intercept + d.slope * d.window_hi},
                                  "fit slope " + fixed(d.slope, 4), "#d62728", true});
    }
    write_text(path.parent_path() / "decay.svg", render_svg(plot));
  }

  row(out, "contraction", report.contraction);
  row(out, "degeneracy locus", to_string(report.locus.kind) + " (" + std::to_string(report.locus.nodes.size()) +
                                   " nodes below " + fixed(report.locus.threshold, 3) + ")");
  if (report.decay) {
    const auto& d = *report.decay;
    row(out, "decay fit", std::string(d.passed ? "PASS" : "FAIL") + " slope " + fixed(d.slope) + " (predicted " +
                              fixed(d.predicted_exponent) + ") residual " + fixed(d.residual, 3) +
                              (d.warning.empty() ? "" : "; " + d.warning));
  }
  if (report.probe)
    row(out, "pushforward probe", std::string(report.probe->passed ? "PASS " : "FAIL ") + report.probe->detail);
  for (const auto& r : report.rejected) row(out, "rejected", r);

  if (!report.rejected.empty()) return exit_precondition;
  const bool passed = report.decay && report.decay->passed && report.probe && report.probe->passed;
  return passed ? exit_ok : exit_checks_failed;
}

std::vector<RunConfig> expand_sweep(const Json& sweep) {
  if (!sweep.is_object() || !sweep.contains("base") || !sweep.contains("variants") || sweep.size() != 2)
    throw std::invalid_argument("sweep file must be an object with exactly \"base\" and \"variants\"");
  const Json& variants = sweep["variants"];
  if (!variants.is_array() || variants.empty()) throw std::invalid_argument("sweep: variants must be a non-empty array");
  std::vector<RunConfig> configs;
  for (const auto& patch : variants) {
    Json merged = sweep["base"];
    merged.merge_patch(patch);
    configs.push_back(parse_run_config(merged));
  }
  return configs;
}

int cmd_sweep(const std::filesystem::path& sweep_file, int workers,
              const std::optional<std::filesystem::path>& root_override, std::ostream& out, std::ostream& err) {
  std::vector<RunConfig> configs;
  try {
    configs = expand_sweep(read_json(sweep_file));
  } catch (const ArtifactError& e) {
    err << "sweep: " << e.what() << '\n';
    return exit_parse_error;
  } catch (const std::exception& e) {
    err << "sweep: " << e.what() << '\n';
    return exit_invalid_input;
  }
  if (workers < 1) {
    err << "sweep: --workers must be >= 1\n";
    return exit_invalid_input;
  }

  struct Slot {
    std::ostringstream out, err;
    FlowOutcome outcome;
  };
  std::vector<Slot> slots(configs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        slots[i].outcome = cmd_flow(configs[i], output_root(configs[i], root_override), slots[i].out, slots[i].err);
      } catch (const std::exception& e) {
        slots[i].err << "flow: " << e.what() << '\n';
        slots[i].outcome.exit_code = exit_checks_failed;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(workers), configs.size());
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(work);
  }

  int code = exit_ok;
  Json index = Json::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    out << slots[i].out.str();
    err << slots[i].err.str();
    code = std::max(code, slots[i].outcome.exit_code);
    index.push_back({{"hash", configs[i].hash_hex()},
                     {"directory", slots[i].outcome.directory.string()},
                     {"exit_code", slots[i].outcome.exit_code}});
  }
  out << "sweep: " << configs.size() << " runs, exit " << code << '\n';
  const auto root = output_root(configs.front(), root_override);
  write_json(root / ("sweep-" + std::to_string(fnv1a64(index.dump())) + ".json"), index);
  return code;
}

}  // namespace krf
