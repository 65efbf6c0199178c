#pragma once

// JSON persistence for run artifacts, CSV profile tables and SVG line plots.
//
// Non-finite reals are written as the strings "inf", "-inf" and "nan" so that
// every artifact re-parses to an equal value.

#include "krf/certificates.hpp"
#include "krf/flow.hpp"
#include "krf/singularity.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace krf {

using Json = nlohmann::json;

/// Raised when an artifact on disk is missing, truncated or malformed.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json real_to_json(double x);
double real_from_json(const Json& j);

void to_json(Json& j, const FlowConfig& cfg);
void from_json(const Json& j, FlowConfig& cfg);
void to_json(Json& j, const StepRecord& rec);
void from_json(const Json& j, StepRecord& rec);
void to_json(Json& j, const ScenarioInfo& info);
void from_json(const Json& j, ScenarioInfo& info);
void to_json(Json& j, const CheckRecord& rec);
void from_json(const Json& j, CheckRecord& rec);
void to_json(Json& j, const CertificateReport& report);
void from_json(const Json& j, CertificateReport& report);
void to_json(Json& j, const DecayFit& fit);
void from_json(const Json& j, DecayFit& fit);
void to_json(Json& j, const ProbeSample& sample);
void from_json(const Json& j, ProbeSample& sample);
void to_json(Json& j, const PushforwardProbe& probe);
void from_json(const Json& j, PushforwardProbe& probe);
void to_json(Json& j, const RescaleSample& sample);
void from_json(const Json& j, RescaleSample& sample);
void to_json(Json& j, const RescaleReport& report);
void from_json(const Json& j, RescaleReport& report);
void to_json(Json& j, const DegeneracyLocus& locus);
void from_json(const Json& j, DegeneracyLocus& locus);

/// Snapshots carry bare value arrays; their grid comes from the scenario block.
Json ledger_to_json(const RunLedger& ledger);
RunLedger ledger_from_json(const Json& j);

/// Output of the singularity analysis of one ledger.
struct SingularityReport {
  std::uint64_t scenario_hash = 0;
  std::string contraction;
  DegeneracyLocus locus;
  std::optional<DecayFit> decay;
  std::optional<PushforwardProbe> probe;
  std::vector<std::string> rejected;  // analyses whose preconditions failed, with reasons

  friend bool operator==(const SingularityReport&, const SingularityReport&) = default;
};
void to_json(Json& j, const SingularityReport& report);
void from_json(const Json& j, SingularityReport& report);

/// Writes atomically-enough for a single writer: temp file then rename.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);
/// Throws ArtifactError on I/O or parse failure.
Json read_json(const std::filesystem::path& path);

void write_ledger(const std::filesystem::path& path, const RunLedger& ledger);
RunLedger read_ledger(const std::filesystem::path& path);

/// Long-format table with header "t,rho,value": one row per (time, node).
struct ProfileSeries {
  std::vector<double> times;
  std::vector<Profile> profiles;
};
void write_csv(std::ostream& out, const ProfileSeries& series);

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string stroke = "#1f77b4";
  bool dashed = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Curve> curves;
  int width = 720;
  int height = 440;
};

/// Polyline rendering with linear axes; non-finite points break the line.
std::string render_svg(const Plot& plot);

/// Colour for the i-th of n curves, from blue (early) to red (late).
std::string ramp_colour(std::size_t i, std::size_t n);

}  // namespace krf
