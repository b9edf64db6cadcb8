#include "fitnet/compare.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>

namespace fitnet {

namespace {

using Clock = std::chrono::steady_clock;

// Runs `f` as pipeline stage `name`, recording its wall time.
template <typename F>
auto stage(const char* name, std::vector<StageTiming>& timings, F&& f) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
    } else {
      auto result = f();
      timings.push_back({name, std::chrono::duration<double>(Clock::now() - start).count()});
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

std::map<int, std::size_t> histogram(const TransientTrace& trace) {
  std::map<int, std::size_t> h;
  for (const auto& s : trace.steps) ++h[s.iterations];
  return h;
}

std::string format_histogram(const std::map<int, std::size_t>& h) {
  std::string out;
  for (const auto& [iters, count] : h) {
    if (!out.empty()) out += ", ";
    out += std::to_string(iters) + " it: " + std::to_string(count);
  }
  return out.empty() ? "(no steps)" : out;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

}  // namespace

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}

Netlist scenario_netlist(const Scenario& scenario, const ScenarioModel& model) {
  const MaterialMatrices matrices = assemble_material_matrices(model.grid, model.materials);
  GenerateOptions opts;
  opts.title = "fitnet electrothermal netlist: " + scenario.name;
  opts.tran = TranDirective{scenario.solver.dt, scenario.solver.tstop};
  return generate_netlist(model.grid, model.materials, matrices, model.bcs, opts);
}

TransientTrace run_fit(const Scenario& scenario, const ScenarioModel& model) {
  const FieldSolver solver(model.grid, model.materials, model.bcs);
  return solver.run(scenario.solver.dt, scenario.solver.tstop, scenario.solver.mode,
                    scenario.solver.newton);
}

TransientTrace run_mna(const Scenario& scenario, const std::string& netlist_text,
                       std::size_t grid_nodes, std::vector<std::string>* warnings) {
  const Netlist parsed = parse_netlist(netlist_text);
  const MnaSystem system = MnaSystem::assemble(parsed);
  if (warnings) *warnings = system.warnings();
  MnaOptions opts;
  opts.integrator = scenario.solver.integrator;
  opts.newton = scenario.solver.newton;
  return solve_transient(system, scenario.solver.dt, scenario.solver.tstop, opts, grid_nodes);
}

CompareReport run_compare(const Scenario& scenario, const CompareOptions& options) {
  CompareReport report;
  report.scenario = scenario;

  std::vector<StageTiming> timings;
  const ScenarioModel model = stage("build model", timings, [&] { return build_model(scenario); });
  report.probes = model.probes;
  report.grid_nodes = model.grid.node_count();

  std::vector<StageTiming> fit_timings;
  auto fit_job = [&] { return stage("fit solve", fit_timings, [&] { return run_fit(scenario, model); }); };
  std::future<TransientTrace> fit_future;
  if (options.parallel) fit_future = std::async(std::launch::async, fit_job);

  std::vector<StageTiming> mna_timings;
  try {
    const Netlist netlist =
        stage("generate netlist", mna_timings, [&] { return scenario_netlist(scenario, model); });
    report.netlist_text = stage("emit netlist", mna_timings, [&] { return emit(netlist); });
    const Netlist parsed =
        stage("parse netlist", mna_timings, [&] { return parse_netlist(report.netlist_text); });
    report.card_count = parsed.elements.size();
    const MnaSystem system =
        stage("assemble mna", mna_timings, [&] { return MnaSystem::assemble(parsed); });
    report.mna_dimension = system.dimension();
    report.warnings = system.warnings();
    MnaOptions opts;
    opts.integrator = scenario.solver.integrator;
    opts.newton = scenario.solver.newton;
    report.mna = stage("mna solve", mna_timings, [&] {
      return solve_transient(system, scenario.solver.dt, scenario.solver.tstop, opts,
                             report.grid_nodes);
    });
  } catch (...) {
    if (fit_future.valid()) fit_future.wait();
    throw;
  }
  report.fit = options.parallel ? fit_future.get() : fit_job();

  timings.insert(timings.end(), fit_timings.begin(), fit_timings.end());
  timings.insert(timings.end(), mna_timings.begin(), mna_timings.end());
  report.timings = std::move(timings);

  report.temperature_error = relative_error_norm(report.fit.T, report.mna.T);
  report.potential_error = relative_error_norm(report.fit.phi, report.mna.phi);
  report.fit_iterations = histogram(report.fit);
  report.mna_iterations = histogram(report.mna);
  return report;
}

void write_report(std::ostream& out, const CompareReport& r) {
  const auto& s = r.scenario;
  out << "scenario: " << s.name << '\n';
  if (!s.description.empty()) out << "description: " << s.description << '\n';
  out << "grid: " << s.counts[0] << " x " << s.counts[1] << " x " << s.counts[2] << " nodes ("
      << r.grid_nodes << ")\n";
  out << "time grid: dt = " << sci(s.solver.dt) << " s, tstop = " << sci(s.solver.tstop) << " s, "
      << (r.fit.steps.size()) << " steps\n";
  out << "fit coupling: " << to_string(s.solver.mode)
      << ", mna integrator: " << to_string(s.solver.integrator) << '\n';
  out << "netlist cards: " << r.card_count << ", mna unknowns: " << r.mna_dimension << '\n';
  out << '\n';
  out << "temperature error (max_k ||T_mna - T_fit||_2 / max_k ||T_fit||_2): "
      << sci(r.temperature_error) << '\n';
  out << "potential error   (max_k ||phi_mna - phi_fit||_2 / max_k ||phi_fit||_2): "
      << sci(r.potential_error) << '\n';
  out << '\n';
  out << "wall time per stage:\n";
  for (const auto& t : r.timings) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-18s %10.4f s\n", t.stage.c_str(), t.seconds);
    out << buf;
  }
  out << '\n';
  out << "newton iterations per step (fit): " << format_histogram(r.fit_iterations) << '\n';
  out << "newton iterations per step (mna): " << format_histogram(r.mna_iterations) << '\n';
  if (!r.probes.empty() && r.fit.size() > 0) {
    out << '\n' << "probes at t = " << sci(r.fit.times.back()) << " s:\n";
    const std::size_t last = r.fit.size() - 1;
    for (const auto& p : r.probes) {
      const auto i = static_cast<Eigen::Index>(p.node);
      out << "  " << p.name << " (node " << p.node << "): phi fit " << sci(r.fit.phi[last][i])
          << " V, mna " << sci(r.mna.phi[last][i]) << " V; T fit " << sci(r.fit.T[last][i] + s.T0)
          << " K, mna " << sci(r.mna.T[last][i] + s.T0) << " K\n";
    }
  }
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
}

void write_artifacts(const std::filesystem::path& dir, const CompareReport& r) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw Error(ErrorCode::invalid_input, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("report.txt");
    write_report(f, r);
  }
  {
    auto f = open("netlist.cir");
    f << r.netlist_text;
  }
  {
    auto f = open("fit_trace.csv");
    write_trace_csv(f, r.fit, r.scenario.T0);
  }
  {
    auto f = open("mna_trace.csv");
    write_trace_csv(f, r.mna, r.scenario.T0);
  }
  if (!r.probes.empty()) {
    auto f = open("fit_probes.csv");
    write_probe_csv(f, r.fit, r.probes, r.scenario.T0);
    auto g = open("mna_probes.csv");
    write_probe_csv(g, r.mna, r.probes, r.scenario.T0);
  }
}

}  // namespace fitnet
