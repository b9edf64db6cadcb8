#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fitnet/error.hpp"
#include "fitnet/mna.hpp"
#include "fitnet/netlist.hpp"
#include "fitnet/scenario.hpp"
#include "fitnet/trace.hpp"

namespace fitnet {

/// Error raised inside one stage of a pipeline; keeps the original code.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Netlist of a realised scenario with its .TRAN directive.
Netlist scenario_netlist(const Scenario& scenario, const ScenarioModel& model);

TransientTrace run_fit(const Scenario& scenario, const ScenarioModel& model);

/// Parses, assembles and solves netlist text; `grid_nodes` sizes the trace.
TransientTrace run_mna(const Scenario& scenario, const std::string& netlist_text,
                       std::size_t grid_nodes, std::vector<std::string>* warnings = nullptr);

struct CompareOptions {
  bool parallel = true;  // FIT and MNA pipelines on separate threads
};

struct CompareReport {
  Scenario scenario;
  std::vector<Probe> probes;
  std::size_t grid_nodes = 0;
  std::size_t card_count = 0;
  std::size_t mna_dimension = 0;
  double temperature_error = 0.0;  // max_k ||T_mna - T_fit|| / max_k ||T_fit||
  double potential_error = 0.0;    // same norm for the potentials
  std::vector<StageTiming> timings;
  std::map<int, std::size_t> fit_iterations;  // Newton iterations per step -> step count
  std::map<int, std::size_t> mna_iterations;
  std::vector<std::string> warnings;
  std::string netlist_text;
  TransientTrace fit;
  TransientTrace mna;
};

/// FIT in the scenario's coupling mode against generate -> emit -> parse ->
/// MNA on the same time grid. Throws StageError.
CompareReport run_compare(const Scenario& scenario, const CompareOptions& options = {});

void write_report(std::ostream& out, const CompareReport& report);

/// report.txt, netlist.cir, fit_trace.csv, mna_trace.csv and, with probes,
/// fit_probes.csv and mna_probes.csv in `dir`.
void write_artifacts(const std::filesystem::path& dir, const CompareReport& report);

}  // namespace fitnet
