#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fitnet/field_solver.hpp"
#include "fitnet/grid.hpp"
#include "fitnet/materials.hpp"
#include "fitnet/mna.hpp"
#include "fitnet/trace.hpp"
#include "fitnet/waveform.hpp"

namespace fitnet {

using Point = std::array<double, 3>;

/// Closed axis-aligned box in meters.
struct Box {
  Point min{};
  Point max{};
};

/// Properties of the primary cells whose centre lies in `box`. Later regions
/// override earlier ones.
struct MaterialRegion {
  std::string name;
  Box box;
  double sigma = 0.0;   // S/m at T0
  double eps_r = 1.0;
  double lambda = 0.0;  // W/K/m
  double rho_c = 0.0;   // J/K/m^3
  double alpha = 0.0;   // 1/K
};

/// Every grid node inside `box` is held at `waveform` (V, or K above T0).
struct DirichletRegion {
  Box box;
  Waveform waveform;
};

/// Lumped branch between the grid nodes nearest to `a` and `b`.
struct BranchSpec {
  Point a{};
  Point b{};
  double g_el = 0.0;
  double g_th = 0.0;
};

struct ProbeSpec {
  std::string name;
  Point at{};
};

struct SolverSettings {
  double dt = 1e-7;
  double tstop = 1.2e-4;
  CouplingMode mode = CouplingMode::lagged;
  Integrator integrator = Integrator::backward_euler;
  NewtonOptions newton;
};

struct Scenario {
  std::string name;
  std::string description;
  NodeCounts counts{};
  AxisSpacings spacings;
  double T0 = 293.15;
  std::vector<MaterialRegion> regions;
  std::vector<DirichletRegion> electric_dirichlet;
  std::vector<DirichletRegion> thermal_dirichlet;
  std::vector<BranchSpec> branches;
  SolverSettings solver;
  std::vector<ProbeSpec> probes;

  /// Throws Error{invalid_input} when a region leaves the domain, a cell is
  /// left uncovered, or a Dirichlet box selects no node.
  void validate() const;
};

/// Grid, materials, boundary conditions and probes realised from a scenario.
struct ScenarioModel {
  StaggeredGrid grid;
  MaterialModel materials;
  BoundaryConditions bcs;
  std::vector<Probe> probes;
};

ScenarioModel build_model(const Scenario& scenario);

/// Grid nodes inside `box` (with a small relative tolerance).
std::vector<std::size_t> nodes_in_box(const StaggeredGrid& grid, const Box& box);

/// Grid node closest to `p`.
std::size_t nearest_node(const StaggeredGrid& grid, const Point& p);

/// Scenario files are JSON; see README.md for the schema.
Scenario parse_scenario(std::string_view json_text);
std::string scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);

/// Built-in name or path to a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

/// Cuboid with a resistive bar (x < 3 mm) in series with a dielectric slab,
/// driven by 1 kV at 76.9 kHz on x = 0 with x = 4 mm at 0 V.
Scenario benchmark_scenario();

/// Benchmark with a temperature-dependent resistive bar.
Scenario benchmark_nonlinear_scenario(double alpha = 4e-3);

/// Insulating substrate carrying a copper contact pad and a resistive chip,
/// joined by one bonding wire and driven by 10 V (1 - exp(-t)).
Scenario chip_surrogate_scenario();

std::vector<std::string> builtin_scenario_names();
std::vector<Scenario> builtin_scenarios();
/// Throws Error{invalid_input} for an unknown name.
Scenario builtin_scenario(const std::string& name);

std::string to_string(CouplingMode mode);
std::string to_string(Integrator integrator);
CouplingMode parse_mode(const std::string& text);
Integrator parse_integrator(const std::string& text);

}  // namespace fitnet
