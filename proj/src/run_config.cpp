#include "krf/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace krf {

namespace {

void reject_unknown(const Json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
  }
}

std::string rational_text(const Json& j, const char* where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw std::invalid_argument(std::string(where) + ": expected a rational as \"p/q\" or an integer");
}

template <class T>
T field(const Json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string(where) + "." + key + ": " + e.what());
  }
}

double real_field(const Json& j, const char* key, const char* where) {
  try {
    return real_from_json(j.at(key));
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string(where) + "." + key + ": " + e.what());
  }
}

bool hirzebruch_name(const std::string& surface) {
  return surface.starts_with("F") || surface.starts_with("Hirzebruch");
}

FlowConfig default_flow(const RunConfig& c) {
  try {
    const SurfaceModel surface = surface_from_name(c.surface);
    const RhoGrid probe(std::max(c.half_width, RhoGrid::kMinHalfWidth), RhoGrid::kMinNodes,
                        surface.kind == SurfaceKind::torus);
    std::vector<Rational> coeffs;
    for (const auto& a : c.ample) coeffs.push_back(parse_rational(a));
    return FlowConfig::defaults_for(build_scenario(surface, DivisorClass(coeffs), probe));
  } catch (const std::exception&) {
    return FlowConfig{};  // surfaces without a flow model; validate() reports the cause
  }
}

}  // namespace

void RunConfig::validate() const {
  const SurfaceModel model = surface_from_name(surface);
  std::vector<Rational> coeffs;
  for (const auto& a : ample) coeffs.push_back(parse_rational(a));
  const DivisorClass A(coeffs);
  if (A.rank() != model.picard_rank())
    throw std::invalid_argument("scenario.ample: expected " + std::to_string(model.picard_rank()) + " coefficients");
  if (nodes < RhoGrid::kMinNodes)
    throw std::invalid_argument("grid.N must be >= " + std::to_string(RhoGrid::kMinNodes) + ", got " +
                                std::to_string(nodes));
  if (!(half_width >= RhoGrid::kMinHalfWidth))
    throw std::invalid_argument("grid.R must be >= " + std::to_string(RhoGrid::kMinHalfWidth));
  flow.validate();
  const auto names = all_certificate_names();
  for (const auto& c : checks)
    if (std::find(names.begin(), names.end(), c) == names.end())
      throw std::invalid_argument("checks: unknown certificate '" + c + "'");
  for (const auto& k : rescale)
    if (!(parse_rational(k) > 0)) throw std::invalid_argument("rescale: factor " + k + " must be positive");
}

Scenario RunConfig::scenario() const {
  const SurfaceModel model = surface_from_name(surface);
  std::vector<Rational> coeffs;
  for (const auto& a : ample) coeffs.push_back(parse_rational(a));
  return build_scenario(model, DivisorClass(coeffs), RhoGrid(half_width, nodes, model.kind == SurfaceKind::torus));
}

Json config_to_json(const RunConfig& c) {
  Json flow = c.flow;
  flow.erase("snapshot_every");
  return Json{{"scenario", {{"surface", c.surface}, {"ample", c.ample}}},
              {"grid", {{"R", c.half_width}, {"N", c.nodes}}},
              {"flow", std::move(flow)},
              {"checks", c.checks},
              {"rescale", c.rescale},
              {"outputs",
               {{"directory", c.outputs.directory},
                {"snapshot_every", c.flow.snapshot_every},
                {"csv", c.outputs.csv},
                {"plots", c.outputs.plots}}},
              {"seed", c.seed}};
}

std::uint64_t RunConfig::hash() const {
  Json j = config_to_json(*this);
  j["outputs"].erase("directory");
  return fnv1a64(j.dump());
}

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

RunConfig parse_run_config(const Json& j) {
  reject_unknown(j, "config", {"scenario", "grid", "flow", "checks", "rescale", "outputs", "seed"});
  RunConfig c;

  if (j.contains("scenario")) {
    const Json& s = j["scenario"];
    reject_unknown(s, "scenario", {"surface", "ample", "k"});
    if (s.contains("surface")) c.surface = field<std::string>(s, "surface", "scenario");
    if (s.contains("k")) {
      if (s.contains("surface") && c.surface != "F" && c.surface != "Hirzebruch")
        throw std::invalid_argument("scenario.k applies only to Hirzebruch surfaces (surface \"F\")");
      c.surface = "F" + std::to_string(field<int>(s, "k", "scenario"));
    }
    if (s.contains("ample")) {
      const Json& a = s["ample"];
      if (!a.is_array()) throw std::invalid_argument("scenario.ample: expected an array");
      c.ample.clear();
      for (const auto& x : a) c.ample.push_back(rational_text(x, "scenario.ample"));
    } else if (!hirzebruch_name(c.surface)) {
      c.ample = {"1"};
    }
  }
  const bool torus_like = c.surface.starts_with("T");
  if (torus_like) {
    c.half_width = 8.0;
    c.nodes = 64;
  }

  if (j.contains("grid")) {
    const Json& g = j["grid"];
    reject_unknown(g, "grid", {"R", "N"});
    if (g.contains("R")) c.half_width = real_field(g, "R", "grid");
    if (g.contains("N")) c.nodes = field<int>(g, "N", "grid");
  }

  c.flow = default_flow(c);
  if (j.contains("flow")) {
    const Json& f = j["flow"];
    reject_unknown(f, "flow",
                   {"dt_init", "dt_min", "t_end", "newton_tol", "newton_max_iter", "positivity_floor", "scheme",
                    "max_relative_change", "volume_drift_limit"});
    if (f.contains("dt_init")) c.flow.dt_init = real_field(f, "dt_init", "flow");
    if (f.contains("dt_min")) c.flow.dt_min = real_field(f, "dt_min", "flow");
    if (f.contains("t_end")) c.flow.t_end = real_field(f, "t_end", "flow");
    if (f.contains("newton_tol")) c.flow.newton_tol = real_field(f, "newton_tol", "flow");
    if (f.contains("newton_max_iter")) c.flow.newton_max_iter = field<int>(f, "newton_max_iter", "flow");
    if (f.contains("positivity_floor")) c.flow.positivity_floor = real_field(f, "positivity_floor", "flow");
    if (f.contains("scheme")) c.flow.scheme = parse_scheme(field<std::string>(f, "scheme", "flow"));
    if (f.contains("max_relative_change"))
      c.flow.max_relative_change = real_field(f, "max_relative_change", "flow");
    if (f.contains("volume_drift_limit")) c.flow.volume_drift_limit = real_field(f, "volume_drift_limit", "flow");
  }

  if (j.contains("checks")) c.checks = field<std::vector<std::string>>(j, "checks", "config");
  if (j.contains("rescale")) {
    const Json& r = j["rescale"];
    if (!r.is_array()) throw std::invalid_argument("rescale: expected an array");
    for (const auto& x : r) c.rescale.push_back(to_string(parse_rational(rational_text(x, "rescale"))));
  }

  if (j.contains("outputs")) {
    const Json& o = j["outputs"];
    reject_unknown(o, "outputs", {"directory", "snapshot_every", "csv", "plots"});
    if (o.contains("directory")) c.outputs.directory = field<std::string>(o, "directory", "outputs");
    if (o.contains("snapshot_every")) c.flow.snapshot_every = real_field(o, "snapshot_every", "outputs");
    if (o.contains("csv")) c.outputs.csv = field<bool>(o, "csv", "outputs");
    if (o.contains("plots")) c.outputs.plots = field<bool>(o, "plots", "outputs");
  }

  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", "config");

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_json(path)); }

}  // namespace krf
