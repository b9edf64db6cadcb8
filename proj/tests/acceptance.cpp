// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance is
// pinned below. argv[1] is the path of the fitnet_tests binary (criterion 6).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "fitnet/compare.hpp"
#include "fitnet/field_solver.hpp"
#include "fitnet/mna.hpp"
#include "fitnet/netlist.hpp"
#include "fitnet/scenario.hpp"

using namespace fitnet;

namespace {

// criterion 1
constexpr double kMatrixRelTol = 1e-12;
constexpr double kMatrixSeconds = 1.0;
// Emitted numbers carry 9 significant digits, so the parsed text can differ
// by half a unit in the last printed place.
constexpr double kPrintedRelTol = 5e-9;
// criterion 2
constexpr double kOracleTol = 1e-8;
constexpr double kOracleSeconds = 30.0;
// criterion 3
constexpr double kLaggedTol = 1e-2;
constexpr double kHalvingRatio = 1.9;
// criterion 4
constexpr double kRcTol = 5e-3;
constexpr double kRcDt = 10e-9;
// criterion 5
constexpr double kChipTol = 2e-3;
constexpr double kChipR2 = 0.999;
// criterion 6
constexpr double kPropertySeconds = 10.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Largest entry-wise relative mismatch; infinity when the sparsity differs.
double matrix_mismatch(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if ((a(r, c) == 0.0) != (b(r, c) == 0.0)) return INFINITY;
      if (b(r, c) != 0.0) worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / std::abs(b(r, c)));
    }
  }
  return worst;
}

// Max relative mismatch between the netlist's C and G (at x = 0) and the FIT
// matrices, both restricted to the free unknowns.
double extraction_mismatch(const ScenarioModel& model, const FieldSolver& fit, const Netlist& netlist) {
  const auto sys = MnaSystem::assemble(netlist);

  // Free unknowns: non-Dirichlet electrical nodes, then non-Dirichlet thermal nodes.
  const std::size_t n = model.grid.node_count();
  std::vector<std::size_t> free_el, free_th;
  for (std::size_t i = 0; i < n; ++i) {
    if (!model.bcs.electric_dirichlet.count(i)) free_el.push_back(i);
    if (!model.bcs.thermal_dirichlet.count(i)) free_th.push_back(i);
  }
  const auto m_el = static_cast<Eigen::Index>(free_el.size());
  const auto m = m_el + static_cast<Eigen::Index>(free_th.size());
  std::vector<Eigen::Index> mna_index;
  for (const auto i : free_el) mna_index.push_back(static_cast<Eigen::Index>(sys.node_index().at(electrical_node_name(i))));
  for (const auto i : free_th) mna_index.push_back(static_cast<Eigen::Index>(sys.node_index().at(thermal_node_name(i))));

  const Eigen::MatrixXd Ke(fit.electric_capacitance()), Ks(fit.electric_conductance(Vector::Zero(static_cast<Eigen::Index>(n))));
  const Eigen::MatrixXd Mr(fit.thermal_capacitance()), Kl(fit.thermal_conductance());
  Eigen::MatrixXd fit_C = Eigen::MatrixXd::Zero(m, m), fit_G = fit_C;
  const auto fill = [&](const std::vector<std::size_t>& nodes, Eigen::Index offset, const Eigen::MatrixXd& cap,
                        const Eigen::MatrixXd& cond) {
    for (std::size_t r = 0; r < nodes.size(); ++r) {
      for (std::size_t c = 0; c < nodes.size(); ++c) {
        const auto fr = static_cast<Eigen::Index>(nodes[r]), fc = static_cast<Eigen::Index>(nodes[c]);
        fit_C(offset + static_cast<Eigen::Index>(r), offset + static_cast<Eigen::Index>(c)) = cap(fr, fc);
        fit_G(offset + static_cast<Eigen::Index>(r), offset + static_cast<Eigen::Index>(c)) = cond(fr, fc);
      }
    }
  };
  fill(free_el, 0, Ke, Ks);
  fill(free_th, m_el, Mr, Kl);

  const Eigen::MatrixXd C(sys.capacitance_matrix());
  const Eigen::MatrixXd G(sys.conductance_matrix(Vector::Zero(static_cast<Eigen::Index>(sys.dimension()))));
  Eigen::MatrixXd mna_C(m, m), mna_G(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      mna_C(r, c) = C(mna_index[static_cast<std::size_t>(r)], mna_index[static_cast<std::size_t>(c)]);
      mna_G(r, c) = G(mna_index[static_cast<std::size_t>(r)], mna_index[static_cast<std::size_t>(c)]);
    }
  }
  return std::max(matrix_mismatch(mna_C, fit_C), matrix_mismatch(mna_G, fit_G));
}

void criterion_1() {
  const auto start = Clock::now();
  const auto scenario = benchmark_scenario();
  const auto model = build_model(scenario);
  const FieldSolver fit(model.grid, model.materials, model.bcs);
  const Netlist generated = scenario_netlist(scenario, model);
  const double err = extraction_mismatch(model, fit, generated);
  const double printed = extraction_mismatch(model, fit, parse_netlist(emit(generated)));
  const double elapsed = seconds_since(start);
  verdict(1, err <= kMatrixRelTol && printed <= kPrintedRelTol && elapsed < kMatrixSeconds,
          "generated netlist C and G equal the eliminated FIT matrices (max rel " + fmt("%.2e", err) + " <= " +
              fmt("%.0e", kMatrixRelTol) + ", same sparsity; after emit and parse " + fmt("%.2e", printed) +
              " <= " + fmt("%.0e", kPrintedRelTol) + "; " + fmt("%.3f", elapsed) + " s < " +
              fmt("%.0f", kMatrixSeconds) + " s)");
}

void criterion_2() {
  const auto start = Clock::now();
  auto s = benchmark_scenario();
  s.solver.mode = CouplingMode::monolithic;
  const auto report = run_compare(s);
  const double err = std::max(report.temperature_error, report.potential_error);
  const double elapsed = seconds_since(start);
  verdict(2, err < kOracleTol && elapsed < kOracleSeconds,
          "monolithic FIT vs MNA on the benchmark: T " + fmt("%.2e", report.temperature_error) + ", phi " +
              fmt("%.2e", report.potential_error) + " < " + fmt("%.0e", kOracleTol) + " (" +
              fmt("%.1f", elapsed) + " s < " + fmt("%.0f", kOracleSeconds) + " s)");
}

void criterion_3() {
  // With alpha = 0 lagged coupling is exact, so the temperature-dependent bar is used.
  std::vector<double> errors;
  for (const double dt : {1e-7, 5e-8, 2.5e-8}) {
    auto s = benchmark_nonlinear_scenario();
    s.solver.dt = dt;
    errors.push_back(run_compare(s).temperature_error);
  }
  auto linear = benchmark_scenario();
  const double linear_err = run_compare(linear).temperature_error;
  const double r1 = errors[0] / errors[1];
  const double r2 = errors[1] / errors[2];
  const bool pass = errors[0] <= kLaggedTol && r1 >= kHalvingRatio && r2 >= kHalvingRatio;
  verdict(3, pass,
          "lagged FIT vs MNA temperature error " + fmt("%.3e", errors[0]) + " <= " + fmt("%.0e", kLaggedTol) +
              " at dt 1e-7; halving ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2) + " >= " +
              fmt("%.1f", kHalvingRatio) + " (alpha = 0 bar: " + fmt("%.1e", linear_err) + ")");
}

void criterion_4() {
  auto s = benchmark_scenario();
  const double f = 76.9e3;
  s.solver.dt = kRcDt;
  s.solver.tstop = std::round(3.0 / f / kRcDt) * kRcDt;
  const auto model = build_model(s);
  const auto fit = run_fit(s, model);
  const auto mna = run_mna(s, emit(scenario_netlist(s, model)), model.grid.node_count());

  const auto probe = std::find_if(model.probes.begin(), model.probes.end(),
                                  [](const Probe& p) { return p.name == "interface"; });
  const auto node = static_cast<Eigen::Index>(probe->node);
  const double R = 1000.0, C = kVacuumPermittivity * 1.13e5 * 1e-6 / 1e-3, A = 1000.0;
  const double w = 2.0 * std::numbers::pi * f, wt = w * R * C;
  const auto exact = [&](double t) {
    return A / (1.0 + wt * wt) * (std::sin(w * t) - wt * std::cos(w * t) + wt * std::exp(-t / (R * C)));
  };
  const auto error = [&](const TransientTrace& tr) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      num = std::max(num, std::abs(tr.phi[k][node] - exact(tr.times[k])));
      den = std::max(den, std::abs(exact(tr.times[k])));
    }
    return num / den;
  };
  const double e_fit = error(fit), e_mna = error(mna);
  verdict(4, std::max(e_fit, e_mna) <= kRcTol,
          "interface potential vs series-RC response over 3 periods at dt 10 ns: FIT " + fmt("%.3e", e_fit) +
              ", MNA " + fmt("%.3e", e_mna) + " <= " + fmt("%.0e", kRcTol));
}

void criterion_5() {
  const auto start = Clock::now();
  const auto s = chip_surrogate_scenario();
  const auto report = run_compare(s);

  // Hottest node at the end of the run.
  const Vector& last = report.fit.T.back();
  Eigen::Index hot = 0;
  last.maxCoeff(&hot);
  bool monotone = true;
  for (std::size_t k = 1; k < report.fit.size(); ++k) {
    monotone = monotone && report.fit.T[k][hot] > report.fit.T[k - 1][hot] &&
               report.mna.T[k][hot] > report.mna.T[k - 1][hot];
  }
  // Least-squares line over the final quarter.
  const std::size_t first = report.fit.size() * 3 / 4;
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  const auto cnt = static_cast<double>(report.fit.size() - first);
  for (std::size_t k = first; k < report.fit.size(); ++k) {
    const double t = report.fit.times[k], y = report.fit.T[k][hot];
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    syy += y * y;
  }
  const double cov = sty - st * sy / cnt, vt = stt - st * st / cnt, vy = syy - sy * sy / cnt;
  const double r2 = cov * cov / (vt * vy);
  const double elapsed = seconds_since(start);
  verdict(5, report.temperature_error <= kChipTol && monotone && r2 > kChipR2,
          "chip surrogate temperature error " + fmt("%.3e", report.temperature_error) + " <= " +
              fmt("%.0e", kChipTol) + "; hottest node " + std::to_string(hot) +
              (monotone ? " monotone" : " NOT monotone") + ", final-quarter R^2 " + fmt("%.6f", r2) + " > " +
              fmt("%.3f", kChipR2) + " (" + fmt("%.1f", elapsed) + " s)");
}

void criterion_6(const std::string& tests) {
  struct Suite {
    const char* label;
    const char* suite;
    const char* test_case;
  };
  const Suite suites[] = {
      {"incidence on randomized grids", "grid", "incidence properties on randomized grids"},
      {"averaging weights", "materials", "averaging weights on randomized grids"},
      {"interior Joule-loss conservation", "field_solver", "interior power balance*"},
      {"adiabatic energy conservation", "field_solver", "adiabatic diffusion*"},
      {"behavioral Jacobian", "mna", "analytic Jacobian matches central differences"},
      {"netlist round trip", "netlist", "randomized round trip"},
  };
  bool all = true;
  std::string detail;
  for (const auto& s : suites) {
    const std::string cmd = "\"" + tests + "\" --test-suite=" + s.suite + " \"--test-case=" + s.test_case +
                            "\" --no-intro=true --no-version=true > /dev/null 2>&1";
    const auto start = Clock::now();
    const int rc = std::system(cmd.c_str());
    const double elapsed = seconds_since(start);
    const bool ok = rc == 0 && elapsed < kPropertySeconds;
    all = all && ok;
    if (!detail.empty()) detail += "; ";
    detail += std::string(s.label) + (ok ? " ok " : " FAILED ") + fmt("%.2f", elapsed) + " s";
  }
  verdict(6, all, "property suites each < " + fmt("%.0f", kPropertySeconds) + " s: " + detail);
}

template <typename F>
void guarded(int id, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    verdict(id, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string tests = argc > 1 ? argv[1] : "fitnet_tests";
  guarded(1, criterion_1);
  guarded(2, criterion_2);
  guarded(3, criterion_3);
  guarded(4, criterion_4);
  guarded(5, criterion_5);
  guarded(6, [&] { criterion_6(tests); });
  std::printf("%d of 6 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
