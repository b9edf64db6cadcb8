// Command-line front end: netlist extraction, single-solver runs and
// FIT/MNA comparisons for built-in or file-based scenarios.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fitnet/compare.hpp"
#include "fitnet/error.hpp"
#include "fitnet/netlist.hpp"
#include "fitnet/scenario.hpp"

namespace {

struct Overrides {
  std::optional<double> dt;
  std::optional<double> tstop;
  std::optional<std::string> mode;
  std::optional<std::string> integrator;
  std::optional<double> newton_tol;
  std::optional<int> max_iter;

  void attach(CLI::App* app) {
    app->add_option("--dt", dt, "time step in s");
    app->add_option("--tstop", tstop, "stop time in s");
    app->add_option("--mode", mode, "FIT coupling: lagged or monolithic")
        ->check(CLI::IsMember({"lagged", "monolithic"}));
    app->add_option("--integrator", integrator, "MNA integrator: be or trap")
        ->check(CLI::IsMember({"be", "trap"}));
    app->add_option("--newton-tol", newton_tol, "scaled Newton residual tolerance");
    app->add_option("--max-iter", max_iter, "Newton iteration limit");
  }

  fitnet::Scenario apply(fitnet::Scenario s) const {
    if (dt) s.solver.dt = *dt;
    if (tstop) s.solver.tstop = *tstop;
    if (mode) s.solver.mode = fitnet::parse_mode(*mode);
    if (integrator) s.solver.integrator = fitnet::parse_integrator(*integrator);
    if (newton_tol) s.solver.newton.tol = *newton_tol;
    if (max_iter) s.solver.newton.max_iter = *max_iter;
    s.validate();
    return s;
  }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw fitnet::Error(fitnet::ErrorCode::invalid_input, "cannot write " + path);
  return out;
}

int exit_code(const fitnet::Error& e) {
  return e.code() == fitnet::ErrorCode::no_convergence ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fitnet: electrothermal netlist extraction from FIT models"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::string output;
  Overrides overrides;

  auto* extract = app.add_subcommand("extract", "write the electrothermal netlist of a scenario");
  extract->add_option("scenario", scenario_arg, "built-in name or scenario file")->required();
  extract->add_option("-o,--output", output, "netlist file (default: stdout)");
  overrides.attach(extract);

  std::string solver_kind;
  auto* simulate = app.add_subcommand("simulate", "run one solver and write its trace as CSV");
  simulate->add_option("solver", solver_kind, "fit or mna")
      ->required()
      ->check(CLI::IsMember({"fit", "mna"}));
  simulate->add_option("scenario", scenario_arg, "built-in name or scenario file")->required();
  simulate->add_option("-o,--output", output, "trace CSV (default: stdout)");
  overrides.attach(simulate);

  auto* compare = app.add_subcommand("compare", "run FIT and the netlist pipeline and compare");
  compare->add_option("scenario", scenario_arg, "built-in name or scenario file")->required();
  compare->add_option("-o,--output", output, "directory for report, traces and netlist");
  overrides.attach(compare);

  auto* scenario_cmd = app.add_subcommand("scenario", "inspect built-in scenarios");
  scenario_cmd->require_subcommand(1);
  scenario_cmd->add_subcommand("list", "list built-in scenario names");
  std::string show_name;
  auto* show = scenario_cmd->add_subcommand("show", "print a built-in scenario as JSON");
  show->add_option("name", show_name, "built-in scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (scenario_cmd->parsed()) {
      if (show->parsed()) {
        std::cout << fitnet::scenario_to_json(fitnet::builtin_scenario(show_name));
      } else {
        for (const auto& s : fitnet::builtin_scenarios()) {
          std::cout << s.name << "  " << s.description << '\n';
        }
      }
      return 0;
    }

    const fitnet::Scenario scenario = overrides.apply(fitnet::resolve_scenario(scenario_arg));

    if (extract->parsed()) {
      const auto model = fitnet::build_model(scenario);
      const std::string text = fitnet::emit(fitnet::scenario_netlist(scenario, model));
      if (output.empty()) {
        std::cout << text;
      } else {
        open_output(output) << text;
      }
      return 0;
    }

    if (simulate->parsed()) {
      const auto model = fitnet::build_model(scenario);
      fitnet::TransientTrace trace;
      if (solver_kind == "fit") {
        trace = fitnet::run_fit(scenario, model);
      } else {
        std::vector<std::string> warnings;
        const std::string text = fitnet::emit(fitnet::scenario_netlist(scenario, model));
        trace = fitnet::run_mna(scenario, text, model.grid.node_count(), &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      }
      if (output.empty()) {
        fitnet::write_trace_csv(std::cout, trace, scenario.T0);
      } else {
        auto out = open_output(output);
        fitnet::write_trace_csv(out, trace, scenario.T0);
      }
      return 0;
    }

    const fitnet::CompareReport report = fitnet::run_compare(scenario);
    fitnet::write_report(std::cout, report);
    if (!output.empty()) fitnet::write_artifacts(output, report);
    return 0;
  } catch (const fitnet::Error& e) {
    std::cerr << "error [" << fitnet::to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
