#include "krf/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace krf {

namespace {

Json reals(std::span<const double> xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(real_to_json(x));
  return out;
}

std::vector<double> reals_from(const Json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(real_from_json(x));
  return out;
}

double real_at(const Json& j, const char* key) { return real_from_json(j.at(key)); }

Json profile_values(const Profile& p) { return reals(p.values()); }

Profile profile_from(const Json& j, const RhoGrid& grid) {
  auto values = reals_from(j);
  if (static_cast<int>(values.size()) != grid.size())
    throw ArtifactError("profile has " + std::to_string(values.size()) + " values, grid has " +
                        std::to_string(grid.size()) + " nodes");
  return Profile(grid, std::move(values));
}

Json snapshot_to_json(const Snapshot& s) {
  return Json{{"t", real_to_json(s.t)},
              {"u", profile_values(s.u)},
              {"v", profile_values(s.v)},
              {"slope", profile_values(s.slope)},
              {"curvature", profile_values(s.curvature)}};
}

Snapshot snapshot_from(const Json& j, const RhoGrid& grid) {
  return Snapshot{real_at(j, "t"), profile_from(j.at("u"), grid), profile_from(j.at("v"), grid),
                  profile_from(j.at("slope"), grid), profile_from(j.at("curvature"), grid)};
}

LocusKind parse_locus_kind(const std::string& text) {
  for (auto kind : {LocusKind::empty, LocusKind::lower_end, LocusKind::upper_end, LocusKind::interior,
                    LocusKind::everywhere})
    if (to_string(kind) == text) return kind;
  throw ArtifactError("unknown locus kind '" + text + "'");
}

}  // namespace

Json real_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ArtifactError("expected a real number, got " + j.dump());
}

void to_json(Json& j, const FlowConfig& cfg) {
  j = Json{{"dt_init", cfg.dt_init},
           {"dt_min", cfg.dt_min},
           {"t_end", real_to_json(cfg.t_end)},
           {"newton_tol", cfg.newton_tol},
           {"newton_max_iter", cfg.newton_max_iter},
           {"positivity_floor", cfg.positivity_floor},
           {"scheme", to_string(cfg.scheme)},
           {"snapshot_every", cfg.snapshot_every},
           {"max_relative_change", cfg.max_relative_change},
           {"volume_drift_limit", cfg.volume_drift_limit}};
}

void from_json(const Json& j, FlowConfig& cfg) {
  cfg.dt_init = real_at(j, "dt_init");
  cfg.dt_min = real_at(j, "dt_min");
  cfg.t_end = real_at(j, "t_end");
  cfg.newton_tol = real_at(j, "newton_tol");
  cfg.newton_max_iter = j.at("newton_max_iter").get<int>();
  cfg.positivity_floor = real_at(j, "positivity_floor");
  cfg.scheme = parse_scheme(j.at("scheme").get<std::string>());
  cfg.snapshot_every = real_at(j, "snapshot_every");
  cfg.max_relative_change = real_at(j, "max_relative_change");
  cfg.volume_drift_limit = real_at(j, "volume_drift_limit");
}

void to_json(Json& j, const StepRecord& r) {
  j = Json{{"t", r.t},
           {"dt", r.dt},
           {"u", Json::array({real_to_json(r.u_min), real_to_json(r.u_max)})},
           {"u_arg", Json::array({r.u_argmin, r.u_argmax})},
           {"v", Json::array({real_to_json(r.v_min), real_to_json(r.v_max)})},
           {"det", Json::array({real_to_json(r.det_min), real_to_json(r.det_max)})},
           {"det_t", Json::array({real_to_json(r.det_t_min), real_to_json(r.det_t_max)})},
           {"slope_ratio", Json::array({real_to_json(r.slope_ratio_min), real_to_json(r.slope_ratio_max)})},
           {"curvature_ratio", Json::array({real_to_json(r.curvature_ratio_min), real_to_json(r.curvature_ratio_max)})},
           {"trace_max", real_to_json(r.trace_max)},
           {"curvature_max", real_to_json(r.curvature_max)},
           {"pairings", reals(r.pairings)},
           {"class", reals(r.class_coeffs)},
           {"phi_residual", real_to_json(r.phi_residual)},
           {"newton_iterations", r.newton_iterations}};
}

void from_json(const Json& j, StepRecord& r) {
  auto pair = [&](const char* key, double& lo, double& hi) {
    const auto& a = j.at(key);
    lo = real_from_json(a.at(0));
    hi = real_from_json(a.at(1));
  };
  r.t = real_at(j, "t");
  r.dt = real_at(j, "dt");
  pair("u", r.u_min, r.u_max);
  r.u_argmin = j.at("u_arg").at(0).get<int>();
  r.u_argmax = j.at("u_arg").at(1).get<int>();
  pair("v", r.v_min, r.v_max);
  pair("det", r.det_min, r.det_max);
  pair("det_t", r.det_t_min, r.det_t_max);
  pair("slope_ratio", r.slope_ratio_min, r.slope_ratio_max);
  pair("curvature_ratio", r.curvature_ratio_min, r.curvature_ratio_max);
  r.trace_max = real_at(j, "trace_max");
  r.curvature_max = real_at(j, "curvature_max");
  r.pairings = reals_from(j.at("pairings"));
  r.class_coeffs = reals_from(j.at("class"));
  r.phi_residual = real_at(j, "phi_residual");
  r.newton_iterations = j.at("newton_iterations").get<int>();
}

void to_json(Json& j, const ScenarioInfo& info) {
  j = Json{{"surface", info.surface},
           {"ample", info.ample},
           {"half_width", info.half_width},
           {"nodes", info.nodes},
           {"periodic", info.periodic},
           {"hash", info.hash},
           {"nef_threshold", info.nef_threshold},
           {"singular_time", real_to_json(info.singular_time)},
           {"contraction", info.contraction}};
}

void from_json(const Json& j, ScenarioInfo& info) {
  info.surface = j.at("surface").get<std::string>();
  info.ample = j.at("ample").get<std::vector<std::string>>();
  info.half_width = real_at(j, "half_width");
  info.nodes = j.at("nodes").get<int>();
  info.periodic = j.at("periodic").get<bool>();
  info.hash = j.at("hash").get<std::uint64_t>();
  info.nef_threshold = j.at("nef_threshold").get<std::string>();
  info.singular_time = real_at(j, "singular_time");
  info.contraction = j.at("contraction").get<std::string>();
}

void to_json(Json& j, const CheckRecord& r) {
  j = Json{{"name", r.name},
           {"t_lo", real_to_json(r.t_lo)},
           {"t_hi", real_to_json(r.t_hi)},
           {"worst_margin", real_to_json(r.worst_margin)},
           {"witness_node", r.witness_node},
           {"witness_t", real_to_json(r.witness_t)},
           {"passed", r.passed},
           {"detail", r.detail}};
}

void from_json(const Json& j, CheckRecord& r) {
  r.name = j.at("name").get<std::string>();
  r.t_lo = real_at(j, "t_lo");
  r.t_hi = real_at(j, "t_hi");
  r.worst_margin = real_at(j, "worst_margin");
  r.witness_node = j.at("witness_node").get<int>();
  r.witness_t = real_at(j, "witness_t");
  r.passed = j.at("passed").get<bool>();
  r.detail = j.at("detail").get<std::string>();
}

void to_json(Json& j, const CertificateReport& report) {
  j = Json{{"scenario_hash", report.scenario_hash},
           {"surface", report.surface},
           {"nodes", report.nodes},
           {"passed", report.passed()},
           {"checks", report.checks}};
}

void from_json(const Json& j, CertificateReport& report) {
  report.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
  report.surface = j.at("surface").get<std::string>();
  report.nodes = j.at("nodes").get<int>();
  report.checks = j.at("checks").get<std::vector<CheckRecord>>();
}

void to_json(Json& j, const DecayFit& fit) {
  j = Json{{"window", Json::array({real_to_json(fit.window_lo), real_to_json(fit.window_hi)})},
           {"slope", real_to_json(fit.slope)},
           {"intercept", real_to_json(fit.intercept)},
           {"residual", real_to_json(fit.residual)},
           {"predicted_exponent", real_to_json(fit.predicted_exponent)},
           {"passed", fit.passed},
           {"warning", fit.warning}};
}

void from_json(const Json& j, DecayFit& fit) {
  fit.window_lo = real_from_json(j.at("window").at(0));
  fit.window_hi = real_from_json(j.at("window").at(1));
  fit.slope = real_at(j, "slope");
  fit.intercept = real_at(j, "intercept");
  fit.residual = real_at(j, "residual");
  fit.predicted_exponent = real_at(j, "predicted_exponent");
  fit.passed = j.at("passed").get<bool>();
  fit.warning = j.at("warning").get<std::string>();
}

void to_json(Json& j, const ProbeSample& s) {
  j = Json{{"t", real_to_json(s.t)},
           {"det", Json::array({real_to_json(s.det_min), real_to_json(s.det_max)})},
           {"first_sup", real_to_json(s.first_sup)},
           {"second_sup", real_to_json(s.second_sup)},
           {"downstream", Json::array({real_to_json(s.downstream_min), real_to_json(s.downstream_max)})}};
}

void from_json(const Json& j, ProbeSample& s) {
  s.t = real_at(j, "t");
  s.det_min = real_from_json(j.at("det").at(0));
  s.det_max = real_from_json(j.at("det").at(1));
  s.first_sup = real_at(j, "first_sup");
  s.second_sup = real_at(j, "second_sup");
  s.downstream_min = real_from_json(j.at("downstream").at(0));
  s.downstream_max = real_from_json(j.at("downstream").at(1));
}

void to_json(Json& j, const PushforwardProbe& p) {
  j = Json{{"rho_cut", real_to_json(p.rho_cut)},
           {"samples", p.samples},
           {"B0", real_to_json(p.B0)},
           {"B1", real_to_json(p.B1)},
           {"passed", p.passed},
           {"detail", p.detail}};
}

void from_json(const Json& j, PushforwardProbe& p) {
  p.rho_cut = real_at(j, "rho_cut");
  p.samples = j.at("samples").get<std::vector<ProbeSample>>();
  p.B0 = real_at(j, "B0");
  p.B1 = real_at(j, "B1");
  p.passed = j.at("passed").get<bool>();
  p.detail = j.at("detail").get<std::string>();
}

void to_json(Json& j, const RescaleSample& s) {
  j = Json{{"s", real_to_json(s.s)},
           {"t", real_to_json(s.t)},
           {"factor", real_to_json(s.factor)},
           {"defect", real_to_json(s.defect)}};
}

void from_json(const Json& j, RescaleSample& s) {
  s.s = real_at(j, "s");
  s.t = real_at(j, "t");
  s.factor = real_at(j, "factor");
  s.defect = real_at(j, "defect");
}

void to_json(Json& j, const RescaleReport& r) {
  j = Json{{"factor", to_string(r.factor)},
           {"samples", r.samples},
           {"defect", real_to_json(r.defect)},
           {"t_numeric", Json::array({real_to_json(r.t_numeric_base), real_to_json(r.t_numeric_rescaled)})},
           {"singular_time", Json::array({real_to_json(r.singular_time_base), real_to_json(r.singular_time_rescaled)})}};
}

void from_json(const Json& j, RescaleReport& r) {
  r.factor = parse_rational(j.at("factor").get<std::string>());
  r.samples = j.at("samples").get<std::vector<RescaleSample>>();
  r.defect = real_at(j, "defect");
  r.t_numeric_base = real_from_json(j.at("t_numeric").at(0));
  r.t_numeric_rescaled = real_from_json(j.at("t_numeric").at(1));
  r.singular_time_base = real_from_json(j.at("singular_time").at(0));
  r.singular_time_rescaled = real_from_json(j.at("singular_time").at(1));
}

void to_json(Json& j, const DegeneracyLocus& locus) {
  j = Json{{"kind", to_string(locus.kind)}, {"threshold", real_to_json(locus.threshold)}, {"nodes", locus.nodes}};
}

void from_json(const Json& j, DegeneracyLocus& locus) {
  locus.kind = parse_locus_kind(j.at("kind").get<std::string>());
  locus.threshold = real_at(j, "threshold");
  locus.nodes = j.at("nodes").get<std::vector<int>>();
}

void to_json(Json& j, const SingularityReport& r) {
  j = Json{{"scenario_hash", r.scenario_hash},
           {"contraction", r.contraction},
           {"locus", r.locus},
           {"decay", r.decay ? Json(*r.decay) : Json()},
           {"probe", r.probe ? Json(*r.probe) : Json()},
           {"rejected", r.rejected}};
}

void from_json(const Json& j, SingularityReport& r) {
  r.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
  r.contraction = j.at("contraction").get<std::string>();
  r.locus = j.at("locus").get<DegeneracyLocus>();
  r.decay.reset();
  r.probe.reset();
  if (!j.at("decay").is_null()) r.decay = j.at("decay").get<DecayFit>();
  if (!j.at("probe").is_null()) r.probe = j.at("probe").get<PushforwardProbe>();
  r.rejected = j.at("rejected").get<std::vector<std::string>>();
}

Json ledger_to_json(const RunLedger& ledger) {
  Json snapshots = Json::array();
  for (const auto& s : ledger.snapshots) snapshots.push_back(snapshot_to_json(s));
  return Json{{"scenario", ledger.scenario},
              {"config", ledger.config},
              {"termination", to_string(ledger.termination)},
              {"t_numeric", real_to_json(ledger.t_numeric)},
              {"message", ledger.message},
              {"steps", ledger.steps},
              {"snapshots", std::move(snapshots)},
              {"terminal", snapshot_to_json(ledger.terminal)}};
}

RunLedger ledger_from_json(const Json& j) {
  try {
    RunLedger ledger;
    ledger.scenario = j.at("scenario").get<ScenarioInfo>();
    ledger.config = j.at("config").get<FlowConfig>();
    ledger.termination = parse_termination(j.at("termination").get<std::string>());
    ledger.t_numeric = real_at(j, "t_numeric");
    ledger.message = j.at("message").get<std::string>();
    ledger.steps = j.at("steps").get<std::vector<StepRecord>>();
    const RhoGrid grid(ledger.scenario.half_width, ledger.scenario.nodes, ledger.scenario.periodic);
    for (const auto& s : j.at("snapshots")) ledger.snapshots.push_back(snapshot_from(s, grid));
    ledger.terminal = snapshot_from(j.at("terminal"), grid);
    return ledger;
  } catch (const ArtifactError&) {
    throw;
  } catch (const std::exception& e) {
    throw ArtifactError(std::string("malformed ledger: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ArtifactError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ArtifactError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(1) + "\n"); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ArtifactError(path.string() + ": " + e.what());
  }
}

void write_ledger(const std::filesystem::path& path, const RunLedger& ledger) {
  write_json(path, ledger_to_json(ledger));
}

RunLedger read_ledger(const std::filesystem::path& path) { return ledger_from_json(read_json(path)); }

void write_csv(std::ostream& out, const ProfileSeries& series) {
  if (series.times.size() != series.profiles.size())
    throw std::invalid_argument("write_csv: times and profiles differ in length");
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17) << "t,rho,value\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const Profile& p = series.profiles[i];
    for (int j = 0; j < p.size(); ++j) out << series.times[i] << ',' << p.grid().node(j) << ',' << p[j] << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

std::string ramp_colour(std::size_t i, std::size_t n) {
  const double s = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  const int r = static_cast<int>(std::lround(31 + s * (214 - 31)));
  const int g = static_cast<int>(std::lround(119 + s * (39 - 119)));
  const int b = static_cast<int>(std::lround(180 + s * (40 - 180)));
  std::ostringstream out;
  out << '#' << std::hex << std::setfill('0') << std::setw(2) << r << std::setw(2) << g << std::setw(2) << b;
  return out.str();
}

namespace {

std::string escape_xml(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double x) {
    if (!std::isfinite(x)) return;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(1e-6, 0.05 * std::abs(hi));
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const Plot& plot) {
  constexpr double left = 70, right = 150, top = 40, bottom = 50;
  const double w = plot.width - left - right, h = plot.height - top - bottom;
  Range xr, yr;
  for (const auto& c : plot.curves) {
    for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      xr.include(c.x[i]);
      yr.include(c.y[i]);
    }
  }
  xr.settle();
  yr.settle();
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * h; };

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(plot.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0, fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    svg << "<text x=\"" << px(fx) << "\" y=\"" << top + h + 16 << "\" text-anchor=\"middle\">" << fx << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << fy << "</text>\n";
  }
  svg << "<text x=\"" << left + w / 2 << "\" y=\"" << plot.height - 10 << "\" text-anchor=\"middle\">"
      << escape_xml(plot.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << top + h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.curves.size(); ++k) {
    const auto& c = plot.curves[k];
    std::vector<std::string> runs(1);
    for (std::size_t i = 0; i < c.x.size() && i < c.y.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) {
        if (!runs.back().empty()) runs.emplace_back();
        continue;
      }
      std::ostringstream pt;
      pt << std::setprecision(6) << px(c.x[i]) << ',' << py(c.y[i]) << ' ';
      runs.back() += pt.str();
    }
    for (const auto& points : runs) {
      if (points.empty()) continue;
      svg << "<polyline fill=\"none\" stroke=\"" << c.stroke << "\" stroke-width=\"1.5\""
          << (c.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << points << "\"/>\n";
    }
    const double ly = top + 14.0 * static_cast<double>(k) + 8;
    svg << "<line x1=\"" << left + w + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + w + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << c.stroke << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + w + 34 << "\" y=\"" << ly + 4 << "\">" << escape_xml(c.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace krf
