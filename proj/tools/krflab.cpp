// krflab: command-line front end for the Kähler-Ricci flow laboratory.

#include "krf/lab.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace krf;
  CLI::App app{"Numerical laboratory for the normalized Kähler-Ricci flow on symmetry-reduced surfaces"};
  app.require_subcommand(1);

  std::optional<std::filesystem::path> output_override;
  app.add_option("--output-root", output_override,
                 std::string("Root directory for run outputs (overrides $") + kOutputRootEnv + " and the config)");

  auto* nef = app.add_subcommand("nef", "Nef threshold, singular time and contraction of an ample class");
  NefRequest nef_request{"F1", "4,-1", false};
  std::optional<std::filesystem::path> nef_config;
  bool catalog = false;
  nef->add_option("--surface", nef_request.surface, "Surface: P2, F<k> or T2")->capture_default_str();
  nef->add_option("--ample", nef_request.ample, "Ample class coefficients, comma separated rationals")
      ->capture_default_str();
  nef->add_option("--config", nef_config, "Take surface and ample class from a run configuration")
      ->check(CLI::ExistingFile);
  nef->add_flag("--json", nef_request.json, "Print JSON instead of a table");
  nef->add_flag("--catalog", catalog, "Print the reference catalog table");

  auto* flow = app.add_subcommand("flow", "Integrate the flow, certify it and write the run directory");
  std::filesystem::path flow_config;
  flow->add_option("config", flow_config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  auto* certify = app.add_subcommand("certify", "Re-run the certificate checks on a stored ledger");
  CertifyRequest certify_request;
  certify->add_option("ledger", certify_request.ledger, "ledger.json of a run")->required();
  certify->add_option("--refined", certify_request.refined, "Ledger of the same scenario at twice the resolution");
  certify->add_option("--check", certify_request.checks, "Restrict to these checks (repeatable)");
  certify->add_option("--rescale", certify_request.rescale, "Rescale factors K for rescale-covariance (repeatable)");
  certify->add_option("--report", certify_request.report, "Where to write the report JSON");

  auto* singularity = app.add_subcommand("singularity", "Analyse the metric at the numerical singular time");
  SingularityRequest singularity_request;
  bool no_plots = false;
  singularity->add_option("ledger", singularity_request.ledger, "ledger.json of a run")->required();
  singularity->add_option("--refined", singularity_request.refined,
                          "Ledger of the same scenario at twice the resolution");
  singularity->add_option("--report", singularity_request.report, "Where to write the report JSON");
  singularity->add_flag("--no-plots", no_plots, "Skip the SVG plot");

  auto* sweep = app.add_subcommand("sweep", "Run a family of configurations, optionally in parallel");
  std::filesystem::path sweep_file;
  int workers = 1;
  sweep->add_option("sweep", sweep_file, "Sweep file: {\"base\": config, \"variants\": [patch, ...]}")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--workers", workers, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_invalid_input;
  }

  try {
    if (*nef) {
      if (catalog) return cmd_nef_catalog(nef_request.json, std::cout);
      if (nef_config) {
        const RunConfig config = load_run_config(*nef_config);
        nef_request.surface = config.surface;
        nef_request.ample.clear();
        for (const auto& a : config.ample) nef_request.ample += (nef_request.ample.empty() ? "" : ",") + a;
      }
      return cmd_nef(nef_request, std::cout, std::cerr);
    }
    if (*flow) {
      RunConfig config;
      try {
        config = load_run_config(flow_config);
      } catch (const ArtifactError& e) {
        std::cerr << "flow: " << e.what() << '\n';
        return exit_parse_error;
      }
      return cmd_flow(config, output_root(config, output_override), std::cout, std::cerr).exit_code;
    }
    if (*certify) return cmd_certify(certify_request, std::cout, std::cerr);
    if (*singularity) {
      singularity_request.plots = !no_plots;
      return cmd_singularity(singularity_request, std::cout, std::cerr);
    }
    if (*sweep) return cmd_sweep(sweep_file, workers, output_override, std::cout, std::cerr);
  } catch (const ArtifactError& e) {
    std::cerr << "krflab: " << e.what() << '\n';
    return exit_parse_error;
  } catch (const std::invalid_argument& e) {
    std::cerr << "krflab: " << e.what() << '\n';
    return exit_invalid_input;
  }
  return exit_invalid_input;
}
