#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SparseLU>

#include "fitnet/error.hpp"
#include "fitnet/mna.hpp"
#include "fitnet/netlist.hpp"
#include "fitnet/scenario.hpp"
#include "generators.hpp"

using namespace fitnet;

namespace {

MnaSystem system_of(const std::string& text) { return MnaSystem::assemble(parse_netlist(text)); }

double node_value(const MnaSystem& s, const Vector& x, const std::string& name) {
  return x[static_cast<Eigen::Index>(s.node_index().at(name))];
}

// Steady operating point of a resistive netlist.
Vector operating_point(const MnaSystem& s) {
  Vector x = s.initial_state(), f;
  SparseMatrix J;
  for (int k = 0; k < 3; ++k) {
    s.static_residual(x, 0.0, f, &J);
    Eigen::SparseLU<SparseMatrix> lu(J);
    x -= lu.solve(f);
  }
  return x;
}

// Capacitor voltage of the RC series circuit driven by a 1 V step.
const char* const kRc =
    "rc\n"
    "V1 in 0 DC 1\n"
    "R1 in out 1k\n"
    "C1 out 0 1n\n"
    ".END\n";

double rc_error(Integrator integrator, double dt) {
  const auto sys = system_of(kRc);
  const auto out = static_cast<Eigen::Index>(sys.node_index().at("out"));
  // The trace keeps grid nodes only, so step through the unknowns by hand.
  const double tau = 1e-6, tstop = 5e-6;
  const auto steps = static_cast<long>(std::llround(tstop / dt));
  const SparseMatrix C = sys.capacitance_matrix();
  Vector x = sys.initial_state(), qdot = Vector::Zero(x.size());
  double err = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool trap = integrator == Integrator::trapezoidal && k > 1;
    const double c = (trap ? 2.0 : 1.0) / dt;
    const Vector xp = x;
    Vector f;
    SparseMatrix J;
    sys.static_residual(x, t, f, &J);
    Vector F = f + c * (C * (x - xp)) - (trap ? qdot : Vector::Zero(x.size()));
    Eigen::SparseLU<SparseMatrix> lu(SparseMatrix(J + c * C));
    x -= lu.solve(F);
    qdot = c * (C * (x - xp)) - (trap ? qdot : Vector::Zero(x.size()));
    err = std::max(err, std::abs(x[out] - (1.0 - std::exp(-t / tau))));
  }
  return err;
}

Netlist random_behavioral_netlist(testgen::Rng& rng) {
  const std::vector<std::string> nodes{"a", "b", "c", "d"};
  const auto pick = [&] { return nodes[static_cast<std::size_t>(rng.integer(0, 3))]; };
  const auto pick_or_ground = [&] { return rng.coin(0.2) ? std::string("0") : pick(); };
  Netlist n;
  n.title = "random";
  for (const auto& node : nodes) {
    n.elements.push_back(Resistor{"RG" + node, node, "0", rng.log_uniform(10, 1e4)});
  }
  n.elements.push_back(VoltageSource{"V1", "a", "0", DcWave{rng.uniform(-2, 2)}});
  for (int k = 0; k < 6; ++k) {
    const std::string id = std::to_string(k);
    std::string p = pick(), q = pick_or_ground();
    if (p == q) q = "0";
    // Strictly positive resistance depending on a node voltage.
    const Expression v = Expression::voltage(pick());
    const Expression r = Expression::number(rng.log_uniform(10, 1e3)) +
                         Expression::number(rng.uniform(1, 100)) * v * v;
    n.elements.push_back(BehavioralResistor{"BR" + id, p, q, r * r / (r + Expression::number(1.0))});
    const Expression u = Expression::voltage(pick(), pick_or_ground());
    n.elements.push_back(BehavioralCurrent{"BI" + id, pick_or_ground(), pick(),
                                           u * u / (Expression::number(rng.log_uniform(2, 1e3)) +
                                                    Expression::voltage(pick()) * Expression::voltage(pick()))});
  }
  rebuild_node_table(n);
  return n;
}

}  // namespace

TEST_SUITE("mna") {

TEST_CASE("source and resistor") {
  const auto s = system_of("t\nV1 a 0 DC 1\nR1 a 0 1e3\n.END\n");
  CHECK(s.dimension() == 2);
  const Vector x = operating_point(s);
  CHECK(node_value(s, x, "a") == doctest::Approx(1.0));
  CHECK(x[static_cast<Eigen::Index>(s.vsrc_index().at("V1"))] == doctest::Approx(-1e-3));
}

TEST_CASE("series divider") {
  const auto s = system_of("t\nV1 a 0 DC 1\nR1 a m 1k\nR2 m 0 1k\n.END\n");
  CHECK(node_value(s, operating_point(s), "m") == doctest::Approx(0.5));
}

TEST_CASE("RC step response with backward Euler") {
  // max |v - v_exact| against the 1 V amplitude.
  CHECK(rc_error(Integrator::backward_euler, 10e-9) <= 2e-3);
  // The library integrator agrees with the hand-rolled loop above.
  Netlist n = parse_netlist(kRc);
  n.elements[1] = Resistor{"R1", "in", "E000001", 1e3};
  n.elements[2] = Capacitor{"C1", "E000001", "0", 1e-9};
  rebuild_node_table(n);
  const auto trace = solve_transient(MnaSystem::assemble(n), 10e-9, 5e-6);
  double err = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    err = std::max(err, std::abs(trace.phi[k][0] - (1.0 - std::exp(-trace.times[k] / 1e-6))));
  }
  CHECK(err == doctest::Approx(rc_error(Integrator::backward_euler, 10e-9)).epsilon(1e-9));
  for (const auto& info : trace.steps) CHECK(info.iterations == 1);
}

TEST_CASE("trapezoidal integrator is second order") {
  const double be = rc_error(Integrator::backward_euler, 20e-9);
  const double trap = rc_error(Integrator::trapezoidal, 20e-9);
  const double trap_half = rc_error(Integrator::trapezoidal, 10e-9);
  CHECK(trap < be / 10.0);
  CHECK(trap / trap_half >= 3.5);
}

TEST_CASE("analytic Jacobian matches central differences") {
  testgen::Rng rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = MnaSystem::assemble(random_behavioral_netlist(rng));
    Vector x(static_cast<Eigen::Index>(s.dimension()));
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = rng.uniform(-1.0, 1.0);
    Vector f;
    SparseMatrix J;
    s.static_residual(x, 0.0, f, &J);
    const Eigen::MatrixXd Jd(J);
    for (Eigen::Index c = 0; c < x.size(); ++c) {
      const double h = 1e-6;
      Vector xp = x, xm = x, fp, fm;
      xp[c] += h;
      xm[c] -= h;
      s.static_residual(xp, 0.0, fp, nullptr);
      s.static_residual(xm, 0.0, fm, nullptr);
      const Vector fd = (fp - fm) / (2 * h);
      for (Eigen::Index r = 0; r < x.size(); ++r) {
        const double scale = std::max(Jd.row(r).cwiseAbs().maxCoeff(), 1e-300);
        CHECK(std::abs(Jd(r, c) - fd[r]) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("source-free linear netlists match the incidence form") {
  testgen::Rng rng(2718);
  for (int trial = 0; trial < 20; ++trial) {
    const int nodes = rng.integer(2, 8);
    Netlist n;
    n.title = "incidence";
    const auto node = [&](int k) { return k == 0 ? std::string("0") : "n" + std::to_string(k); };
    // A spanning chain keeps every node reachable from ground.
    for (int k = 1; k <= nodes; ++k) {
      n.elements.push_back(Resistor{"RS" + std::to_string(k), node(k - 1), node(k), rng.log_uniform(1, 1e4)});
    }
    for (int k = 0; k < 3 * nodes; ++k) {
      const int a = rng.integer(0, nodes), b = rng.integer(0, nodes);
      if (a == b) continue;
      const std::string id = std::to_string(k);
      switch (rng.integer(0, 2)) {
        case 0: n.elements.push_back(Resistor{"R" + id, node(a), node(b), rng.log_uniform(1, 1e4)}); break;
        case 1: n.elements.push_back(Capacitor{"C" + id, node(a), node(b), rng.log_uniform(1e-12, 1e-6)}); break;
        default: n.elements.push_back(CurrentSource{"I" + id, node(a), node(b), DcWave{rng.uniform(-1, 1)}}); break;
      }
    }
    const auto s = MnaSystem::assemble(n);
    REQUIRE(s.dimension() == static_cast<std::size_t>(nodes));

    // Incidence columns: +1 at n_plus, -1 at n_minus, ground row dropped.
    const auto dim = static_cast<Eigen::Index>(s.dimension());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(dim, dim), Cm = G;
    Vector rhs = Vector::Zero(dim);
    for (const auto& el : n.elements) {
      Vector col = Vector::Zero(dim);
      const auto& p = element_n_plus(el);
      const auto& m = element_n_minus(el);
      if (p != "0") col[static_cast<Eigen::Index>(s.node_index().at(p))] += 1.0;
      if (m != "0") col[static_cast<Eigen::Index>(s.node_index().at(m))] -= 1.0;
      if (const auto* r = std::get_if<Resistor>(&el)) G += col * col.transpose() / r->ohms;
      if (const auto* c = std::get_if<Capacitor>(&el)) Cm += col * col.transpose() * c->farads;
      if (const auto* i = std::get_if<CurrentSource>(&el)) rhs -= col * std::get<DcWave>(i->waveform).value;
    }
    Vector x(dim);
    for (Eigen::Index k = 0; k < dim; ++k) x[k] = rng.uniform(-1, 1);
    CHECK((Eigen::MatrixXd(s.conductance_matrix(x)) - G).cwiseAbs().maxCoeff() <= 1e-12 * G.cwiseAbs().maxCoeff());
    CHECK((Eigen::MatrixXd(s.capacitance_matrix()) - Cm).cwiseAbs().maxCoeff() <= 1e-12 * std::max(Cm.cwiseAbs().maxCoeff(), 1e-300));
    // f(x) = A_R G A_R^T x + A_I I_s, i.e. zero when the incidence form holds.
    Vector f;
    s.static_residual(x, 0.0, f, nullptr);
    CHECK((f - (G * x - rhs)).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, (G * x).cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("thermal sub-network energy balance") {
  // Benchmark thermal network with loss sources removed and 1 W injected.
  const auto model = build_model(benchmark_scenario());
  const auto mm = assemble_material_matrices(model.grid, model.materials);
  Netlist net = generate_netlist(model.grid, model.materials, mm, model.bcs);
  std::erase_if(net.elements, [](const Element& e) { return element_name(e).rfind("BIQ", 0) == 0; });
  net.elements.push_back(CurrentSource{"IH", "0", thermal_node_name(7), DcWave{1.0}});
  rebuild_node_table(net);
  const auto sys = MnaSystem::assemble(net);
  const double dt = 1e-3;
  const auto trace = solve_transient(sys, dt, 0.05, {}, model.grid.node_count());
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const double dE = mm.m_rhoc.dot(trace.T[k] - trace.T[k - 1]);
    CHECK(dE == doctest::Approx(dt * 1.0).epsilon(1e-12));
  }
  // Without the heater the network stays at rest.
  net.elements.pop_back();
  rebuild_node_table(net);
  const auto rest = solve_transient(MnaSystem::assemble(net), dt, 0.01, {}, model.grid.node_count());
  CHECK(rest.T.back().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("KCL holds at every accepted step") {
  auto s = benchmark_nonlinear_scenario();
  s.solver.tstop = 1e-5;
  const auto model = build_model(s);
  const auto mm = assemble_material_matrices(model.grid, model.materials);
  const Netlist net = parse_netlist(emit(generate_netlist(model.grid, model.materials, mm, model.bcs)));
  const auto sys = MnaSystem::assemble(net);
  const auto trace = solve_transient(sys, s.solver.dt, s.solver.tstop, {}, model.grid.node_count());

  // Rows of nodes without a voltage source do not see the source currents.
  std::set<std::string> sourced;
  for (const auto& e : net.elements) {
    if (std::holds_alternative<VoltageSource>(e)) sourced.insert(element_n_plus(e));
  }
  const auto to_x = [&](std::size_t k) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(sys.dimension()));
    for (const auto& [name, idx] : sys.node_index()) {
      const auto info = classify_node(name);
      const auto g = static_cast<Eigen::Index>(*info.grid_index);
      x[static_cast<Eigen::Index>(idx)] = info.domain == NodeDomain::electrical ? trace.phi[k][g] : trace.T[k][g];
    }
    return x;
  };
  const SparseMatrix C = sys.capacitance_matrix();
  for (std::size_t k = 1; k < trace.size(); ++k) {
    const Vector x = to_x(k), xp = to_x(k - 1);
    Vector f, scale;
    sys.static_residual(x, trace.times[k], f, nullptr, &scale);
    const Vector F = f + C * (x - xp) / s.solver.dt;
    const Vector storage = (C.cwiseAbs() * (x.cwiseAbs() + xp.cwiseAbs())) / s.solver.dt;
    double fe = 0, se = 0, ft = 0, st = 0;
    for (const auto& [name, idx] : sys.node_index()) {
      if (sourced.count(name)) continue;
      const auto i = static_cast<Eigen::Index>(idx);
      if (name[0] == 'E') {
        fe = std::max(fe, std::abs(F[i]));
        se = std::max(se, scale[i] + storage[i]);
      } else {
        ft = std::max(ft, std::abs(F[i]));
        st = std::max(st, scale[i] + storage[i]);
      }
    }
    CHECK(fe <= 1e-10 * se);
    CHECK(ft <= 1e-10 * st);
  }
}

TEST_CASE("generated benchmark netlist tracks the monolithic field solver") {
  auto s = benchmark_nonlinear_scenario();
  s.solver.tstop = 1e-5;
  const auto model = build_model(s);
  const auto mm = assemble_material_matrices(model.grid, model.materials);
  const auto sys = MnaSystem::assemble(parse_netlist(emit(generate_netlist(model.grid, model.materials, mm, model.bcs))));
  const auto mna = solve_transient(sys, s.solver.dt, s.solver.tstop, {}, model.grid.node_count());
  const FieldSolver fit(model.grid, model.materials, model.bcs);
  const auto ref = fit.run(s.solver.dt, s.solver.tstop, CouplingMode::monolithic);
  CHECK(relative_error_norm(ref.T, mna.T) < 1e-8);
  CHECK(relative_error_norm(ref.phi, mna.phi) < 1e-8);
  CHECK(relative_error_norm(ref.q_el, mna.q_el) < 1e-8);
}

TEST_CASE("warnings and errors") {
  const auto s = system_of("t\nV1 a 0 DC 1\nR1 a 0 1k\nR2 x y 1k\nC1 y x 1n\n.END\n");
  REQUIRE(s.warnings().size() == 1);
  CHECK(s.warnings()[0].find("x y") != std::string::npos);
  CHECK(system_of("t\nV1 a 0 DC 1\nR1 a 0 1k\n.END\n").warnings().empty());

  try {
    system_of("t\nR1 a b 1k\n.END\n");
    FAIL("expected MissingGround");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_ground);
  }

  // Nonlinear resistor with a single allowed iteration.
  const auto nl = system_of("t\nV1 a 0 DC 1\nR1 a b 1k\nBR1 b 0 R=1k+V(b)*V(b)*1k\n.END\n");
  MnaOptions opts;
  opts.newton.max_iter = 1;
  try {
    solve_transient(nl, 1e-3, 1e-3, opts);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.code() == ErrorCode::no_convergence);
    CHECK(e.time() == doctest::Approx(1e-3));
    CHECK(e.residual() > opts.newton.tol);
  }
  opts.newton.max_iter = 25;
  CHECK_NOTHROW(solve_transient(nl, 1e-3, 1e-3, opts));

  // A node fed only by a current source is singular.
  CHECK_THROWS_AS(solve_transient(system_of("t\nV1 a 0 DC 1\nR1 a 0 1\nI1 0 x DC 1\n.END\n"), 1e-3, 1e-3), Error);
  CHECK_THROWS_AS(solve_transient(s, 0.0, 1.0), Error);
}

TEST_CASE("behavioral currents are reported by name") {
  const auto s = system_of("t\nV1 a 0 DC 2\nR1 a 0 1\nBI1 0 a I=V(a)*V(a)\n.END\n");
  Vector x = s.initial_state();
  CHECK(node_value(s, x, "a") == 2.0);
  CHECK(s.behavioral_currents(x).at("BI1") == doctest::Approx(4.0));
}

}  // TEST_SUITE
