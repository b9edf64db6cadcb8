#include "fitnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fitnet/error.hpp"

namespace fitnet {

namespace {

using nlohmann::json;

double geometric_tolerance(const StaggeredGrid& grid) {
  double ext = 0.0;
  for (const Axis a : kAxes) ext = std::max(ext, grid.extent(a));
  return 1e-9 * ext;
}

bool inside(const Box& box, const Point& p, double tol) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < box.min[a] - tol || p[a] > box.max[a] + tol) return false;
  }
  return true;
}

Point node_position(const StaggeredGrid& grid, std::size_t node) {
  const Index3 ijk = grid.node_ijk(node);
  return {grid.position(Axis::x, ijk[0]), grid.position(Axis::y, ijk[1]),
          grid.position(Axis::z, ijk[2])};
}

Point cell_centre(const StaggeredGrid& grid, std::size_t cell) {
  const Index3 ijk = grid.cell_ijk(cell);
  Point c{};
  for (int a = 0; a < 3; ++a) {
    const auto axis = static_cast<Axis>(a);
    c[a] = 0.5 * (grid.position(axis, ijk[a]) + grid.position(axis, ijk[a] + 1));
  }
  return c;
}

StaggeredGrid make_grid(const Scenario& s) { return StaggeredGrid(s.counts, s.spacings); }

void set_uniform(Scenario& s, const NodeCounts& counts, const Point& extent) {
  s.counts = counts;
  for (int a = 0; a < 3; ++a) {
    s.spacings[a].assign(counts[a] - 1, extent[a] / static_cast<double>(counts[a] - 1));
  }
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::invalid_input, msg); }

// --- JSON helpers ---------------------------------------------------------

Point point_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) bad(std::string(what) + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Box box_from(const json& j) {
  if (!j.is_object() || !j.contains("min") || !j.contains("max")) bad("box needs min and max");
  return {point_from(j.at("min"), "box.min"), point_from(j.at("max"), "box.max")};
}

json box_to(const Box& b) { return {{"min", b.min}, {"max", b.max}}; }

Waveform waveform_from(const json& j) {
  if (j.is_number()) return DcWave{j.get<double>()};
  if (!j.is_string()) bad("waveform must be a number or a string such as \"SIN(0 1 1e3)\"");
  try {
    return parse_waveform(j.get<std::string>());
  } catch (const ParseError& e) {
    bad(std::string("waveform: ") + e.what());
  }
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<DirichletRegion> dirichlet_from(const json& j) {
  std::vector<DirichletRegion> out;
  for (const auto& d : j) out.push_back({box_from(d.at("box")), waveform_from(d.at("waveform"))});
  return out;
}

json dirichlet_to(const std::vector<DirichletRegion>& v) {
  json out = json::array();
  for (const auto& d : v) out.push_back({{"box", box_to(d.box)}, {"waveform", to_netlist_string(d.waveform)}});
  return out;
}

bool is_uniform(const std::vector<double>& h) {
  return std::all_of(h.begin(), h.end(), [&](double v) { return std::abs(v - h.front()) <= 1e-12 * h.front(); });
}

}  // namespace

std::string to_string(CouplingMode mode) {
  return mode == CouplingMode::lagged ? "lagged" : "monolithic";
}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::backward_euler ? "be" : "trap";
}

CouplingMode parse_mode(const std::string& text) {
  if (text == "lagged") return CouplingMode::lagged;
  if (text == "monolithic") return CouplingMode::monolithic;
  bad("unknown coupling mode '" + text + "' (expected lagged or monolithic)");
}

Integrator parse_integrator(const std::string& text) {
  if (text == "be") return Integrator::backward_euler;
  if (text == "trap") return Integrator::trapezoidal;
  bad("unknown integrator '" + text + "' (expected be or trap)");
}

std::vector<std::size_t> nodes_in_box(const StaggeredGrid& grid, const Box& box) {
  const double tol = geometric_tolerance(grid);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    if (inside(box, node_position(grid, i), tol)) out.push_back(i);
  }
  return out;
}

std::size_t nearest_node(const StaggeredGrid& grid, const Point& p) {
  Index3 ijk{};
  for (int a = 0; a < 3; ++a) {
    const auto axis = static_cast<Axis>(a);
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.count(axis); ++i) {
      if (std::abs(grid.position(axis, i) - p[a]) < std::abs(grid.position(axis, best) - p[a])) best = i;
    }
    ijk[a] = best;
  }
  return grid.node_index(ijk);
}

void Scenario::validate() const {
  const StaggeredGrid grid = make_grid(*this);
  if (regions.empty()) bad("scenario '" + name + "' has no material regions");
  const double tol = geometric_tolerance(grid);
  const Box domain{{0, 0, 0}, {grid.extent(Axis::x), grid.extent(Axis::y), grid.extent(Axis::z)}};
  for (const auto& r : regions) {
    if (!inside(domain, r.box.min, tol) || !inside(domain, r.box.max, tol)) {
      bad("region '" + r.name + "' leaves the domain");
    }
    if (r.sigma < 0 || r.eps_r <= 0 || r.lambda < 0 || r.rho_c < 0) {
      bad("region '" + r.name + "' has non-physical properties");
    }
  }
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const Point p = cell_centre(grid, c);
    if (std::none_of(regions.begin(), regions.end(), [&](const auto& r) { return inside(r.box, p, tol); })) {
      bad("cell " + std::to_string(c) + " is not covered by any region");
    }
  }
  for (const auto* list : {&electric_dirichlet, &thermal_dirichlet}) {
    for (const auto& d : *list) {
      if (nodes_in_box(grid, d.box).empty()) bad("a Dirichlet box selects no grid node");
    }
  }
  if (electric_dirichlet.empty()) bad("scenario '" + name + "' has no electrical Dirichlet region");
  if (!(solver.dt > 0.0) || !(solver.tstop >= solver.dt)) bad("solver needs dt > 0 and tstop >= dt");
}

ScenarioModel build_model(const Scenario& s) {
  s.validate();
  StaggeredGrid grid = make_grid(s);
  const double tol = geometric_tolerance(grid);
  const std::size_t cells = grid.cell_count();

  MaterialModel m = MaterialModel::uniform(cells, 0.0, 1.0, 0.0, 0.0, 0.0);
  m.T0 = s.T0;
  for (std::size_t c = 0; c < cells; ++c) {
    const Point p = cell_centre(grid, c);
    const auto k = static_cast<Eigen::Index>(c);
    for (const auto& r : s.regions) {
      if (!inside(r.box, p, tol)) continue;
      m.sigma_ref[k] = r.sigma;
      m.eps[k] = kVacuumPermittivity * r.eps_r;
      m.lambda_th[k] = r.lambda;
      m.rho_c[k] = r.rho_c;
      m.alpha[k] = r.alpha;
    }
  }

  BoundaryConditions bcs;
  for (const auto& d : s.electric_dirichlet) {
    for (const auto node : nodes_in_box(grid, d.box)) bcs.electric_dirichlet[node] = d.waveform;
  }
  for (const auto& d : s.thermal_dirichlet) {
    for (const auto node : nodes_in_box(grid, d.box)) bcs.thermal_dirichlet[node] = d.waveform;
  }
  for (const auto& b : s.branches) {
    bcs.extra_branches.push_back({nearest_node(grid, b.a), nearest_node(grid, b.b), b.g_el, b.g_th});
  }

  std::vector<Probe> probes;
  for (const auto& p : s.probes) probes.push_back({p.name, nearest_node(grid, p.at)});
  return {std::move(grid), std::move(m), std::move(bcs), std::move(probes)};
}

Scenario parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("scenario JSON: ") + e.what());
  }
  try {
    Scenario s;
    s.name = value_or<std::string>(j, "name", "scenario");
    s.description = value_or<std::string>(j, "description", "");
    s.T0 = value_or(j, "T0", 293.15);

    const json& g = j.at("grid");
    if (g.contains("spacings")) {
      const auto& sp = g.at("spacings");
      if (!sp.is_array() || sp.size() != 3) bad("grid.spacings needs one array per axis");
      for (int a = 0; a < 3; ++a) {
        s.spacings[a] = sp[a].get<std::vector<double>>();
        s.counts[a] = s.spacings[a].size() + 1;
      }
    } else {
      const auto counts = g.at("counts").get<std::vector<std::size_t>>();
      if (counts.size() != 3) bad("grid.counts needs 3 entries");
      for (const auto c : counts) {
        if (c < 2) bad("grid.counts entries must be at least 2");
      }
      set_uniform(s, {counts[0], counts[1], counts[2]}, point_from(g.at("extent"), "grid.extent"));
    }

    for (const auto& r : j.at("regions")) {
      MaterialRegion m;
      m.name = value_or<std::string>(r, "name", "");
      m.box = box_from(r.at("box"));
      m.sigma = value_or(r, "sigma", 0.0);
      m.eps_r = value_or(r, "eps_r", 1.0);
      m.lambda = value_or(r, "lambda", 0.0);
      m.rho_c = value_or(r, "rho_c", 0.0);
      m.alpha = value_or(r, "alpha", 0.0);
      s.regions.push_back(m);
    }
    if (j.contains("electric_dirichlet")) s.electric_dirichlet = dirichlet_from(j.at("electric_dirichlet"));
    if (j.contains("thermal_dirichlet")) s.thermal_dirichlet = dirichlet_from(j.at("thermal_dirichlet"));
    if (j.contains("branches")) {
      for (const auto& b : j.at("branches")) {
        s.branches.push_back({point_from(b.at("a"), "branch.a"), point_from(b.at("b"), "branch.b"),
                              value_or(b, "g_el", 0.0), value_or(b, "g_th", 0.0)});
      }
    }
    if (j.contains("solver")) {
      const json& sv = j.at("solver");
      s.solver.dt = value_or(sv, "dt", s.solver.dt);
      s.solver.tstop = value_or(sv, "tstop", s.solver.tstop);
      s.solver.mode = parse_mode(value_or<std::string>(sv, "mode", "lagged"));
      s.solver.integrator = parse_integrator(value_or<std::string>(sv, "integrator", "be"));
      s.solver.newton.tol = value_or(sv, "newton_tol", s.solver.newton.tol);
      s.solver.newton.max_iter = value_or(sv, "max_iter", s.solver.newton.max_iter);
    }
    if (j.contains("probes")) {
      for (const auto& p : j.at("probes")) {
        s.probes.push_back({p.at("name").get<std::string>(), point_from(p.at("at"), "probe.at")});
      }
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    bad(std::string("scenario JSON: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  bool uniform = true;
  for (const auto& h : s.spacings) uniform = uniform && is_uniform(h);
  if (uniform) {
    Point extent{};
    for (int a = 0; a < 3; ++a) extent[a] = s.spacings[a].front() * static_cast<double>(s.spacings[a].size());
    j["grid"] = {{"counts", s.counts}, {"extent", extent}};
  } else {
    j["grid"] = {{"spacings", s.spacings}};
  }
  j["T0"] = s.T0;
  j["regions"] = json::array();
  for (const auto& r : s.regions) {
    j["regions"].push_back({{"name", r.name},       {"box", box_to(r.box)}, {"sigma", r.sigma},
                            {"eps_r", r.eps_r},     {"lambda", r.lambda},   {"rho_c", r.rho_c},
                            {"alpha", r.alpha}});
  }
  j["electric_dirichlet"] = dirichlet_to(s.electric_dirichlet);
  j["thermal_dirichlet"] = dirichlet_to(s.thermal_dirichlet);
  j["branches"] = json::array();
  for (const auto& b : s.branches) {
    j["branches"].push_back({{"a", b.a}, {"b", b.b}, {"g_el", b.g_el}, {"g_th", b.g_th}});
  }
  j["solver"] = {{"dt", s.solver.dt},
                 {"tstop", s.solver.tstop},
                 {"mode", to_string(s.solver.mode)},
                 {"integrator", to_string(s.solver.integrator)},
                 {"newton_tol", s.solver.newton.tol},
                 {"max_iter", s.solver.newton.max_iter}};
  j["probes"] = json::array();
  for (const auto& p : s.probes) j["probes"].push_back({{"name", p.name}, {"at", p.at}});
  return j.dump(2) + "\n";
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario resolve_scenario(const std::string& name_or_path) {
  const auto names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_scenario(name_or_path);
  }
  return load_scenario(name_or_path);
}

Scenario benchmark_scenario() {
  Scenario s;
  s.name = "benchmark";
  s.description = "4 x 1 x 1 mm cuboid: 3 mm resistive bar in series with a 1 mm dielectric slab";
  set_uniform(s, {5, 3, 3}, {4e-3, 1e-3, 1e-3});
  s.regions = {
      {"resistive", {{0, 0, 0}, {3e-3, 1e-3, 1e-3}}, 3.0, 1.0, 400.0, 8000.0, 0.0},
      {"capacitive", {{3e-3, 0, 0}, {4e-3, 1e-3, 1e-3}}, 0.0, 1.13e5, 400.0, 8000.0, 0.0},
  };
  s.electric_dirichlet = {
      {{{0, 0, 0}, {0, 1e-3, 1e-3}}, SinWave{0.0, 1000.0, 76.9e3}},
      {{{4e-3, 0, 0}, {4e-3, 1e-3, 1e-3}}, DcWave{0.0}},
  };
  s.solver.dt = 1e-7;
  s.solver.tstop = 1.2e-4;
  s.solver.mode = CouplingMode::lagged;
  s.probes = {
      {"interface", {3e-3, 0.5e-3, 0.5e-3}},
      {"bar_mid", {2e-3, 0.5e-3, 0.5e-3}},
  };
  return s;
}

Scenario benchmark_nonlinear_scenario(double alpha) {
  Scenario s = benchmark_scenario();
  s.name = "benchmark_nonlinear";
  s.description = "benchmark with a temperature-dependent resistive bar";
  s.regions[0].alpha = alpha;
  return s;
}

Scenario chip_surrogate_scenario() {
  Scenario s;
  s.name = "chip_surrogate";
  s.description =
      "insulating substrate with a copper contact pad and a resistive chip joined by one bonding wire";
  set_uniform(s, {13, 9, 5}, {6e-3, 4e-3, 2e-3});
  s.regions = {
      {"substrate", {{0, 0, 0}, {6e-3, 4e-3, 2e-3}}, 0.0, 1.0, 20.0, 2.0e6, 0.0},
      {"pad", {{0, 1.5e-3, 1.5e-3}, {2e-3, 2.5e-3, 2e-3}}, 5.8e7, 1.0, 400.0, 3.45e6, 3.9e-3},
      {"chip", {{3e-3, 1e-3, 1e-3}, {5.5e-3, 3e-3, 2e-3}}, 2e5, 1.0, 150.0, 1.6e6, 2e-3},
  };
  s.electric_dirichlet = {
      {{{0, 1.5e-3, 1.5e-3}, {0, 2.5e-3, 2e-3}}, ExpWave{0.0, 10.0, 1.0}},
      {{{5.5e-3, 1e-3, 1e-3}, {5.5e-3, 3e-3, 2e-3}}, DcWave{0.0}},
  };
  s.branches = {{{2e-3, 2e-3, 2e-3}, {3e-3, 2e-3, 2e-3}, 1.0, 1000.0}};
  s.solver.dt = 1e-2;
  s.solver.tstop = 10.0;
  s.solver.mode = CouplingMode::lagged;
  s.probes = {
      {"wire_pad", {2e-3, 2e-3, 2e-3}},
      {"wire_chip", {3e-3, 2e-3, 2e-3}},
      {"chip_hotspot", {3.5e-3, 2e-3, 2e-3}},
  };
  return s;
}

std::vector<std::string> builtin_scenario_names() {
  return {"benchmark", "benchmark_nonlinear", "chip_surrogate"};
}

std::vector<Scenario> builtin_scenarios() {
  return {benchmark_scenario(), benchmark_nonlinear_scenario(), chip_surrogate_scenario()};
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "benchmark") return benchmark_scenario();
  if (name == "benchmark_nonlinear") return benchmark_nonlinear_scenario();
  if (name == "chip_surrogate") return chip_surrogate_scenario();
  bad("unknown built-in scenario '" + name + "'");
}

}  // namespace fitnet
