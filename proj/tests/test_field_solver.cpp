#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fitnet/error.hpp"
#include "fitnet/field_solver.hpp"
#include "fitnet/scenario.hpp"
#include "generators.hpp"

using namespace fitnet;

namespace {

// 3 mm x 1 mm x 1 mm bar, sigma = 3 S/m: 1 kOhm end to end.
FieldSolver dc_bar(double volts, double alpha = 0.0) {
  auto g = StaggeredGrid::uniform({4, 2, 2}, {3e-3, 1e-3, 1e-3});
  auto m = MaterialModel::uniform(g.cell_count(), 3.0, 1.0, 400.0, 8000.0, alpha);
  BoundaryConditions bcs;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto x = g.node_ijk(i)[0];
    if (x == 0) bcs.electric_dirichlet[i] = DcWave{volts};
    if (x == 3) bcs.electric_dirichlet[i] = DcWave{0.0};
  }
  return FieldSolver(std::move(g), std::move(m), std::move(bcs));
}

double max_rel_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num = std::max(num, (a[k] - b[k]).norm());
    den = std::max(den, a[k].norm());
  }
  return num / den;
}

}  // namespace

TEST_SUITE("field_solver") {

TEST_CASE("branch losses") {
  const Vector zero = Vector::Zero(6);
  CHECK(compute_branch_losses(zero, zero).cwiseAbs().maxCoeff() == 0.0);
  // 1 V across 1 kOhm
  Vector e(1), j(1);
  e << 1.0;
  j << 1.0 / 1000.0;
  CHECK(compute_branch_losses(e, j)[0] == doctest::Approx(1e-3));
  try {
    compute_branch_losses(Vector::Zero(3), Vector::Zero(4));
    FAIL("expected ShapeError");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::shape_error);
  }
}

TEST_CASE("projection onto an interior node") {
  const auto g = StaggeredGrid::uniform({3, 3, 3}, {2e-3, 2e-3, 2e-3});
  const auto ops = build_incidence(g);
  const std::size_t centre = g.node_index(1, 1, 1);
  Vector q_hat = Vector::Zero(static_cast<Eigen::Index>(g.edge_count()));
  for (const Axis a : kAxes) {
    q_hat[static_cast<Eigen::Index>(g.edge_index(a, centre))] = 1.0;
    const auto ijk = g.node_ijk(centre);
    Index3 lower = ijk;
    lower[static_cast<int>(a)] -= 1;
    q_hat[static_cast<Eigen::Index>(g.edge_index(a, g.node_index(lower)))] = 1.0;
  }
  const Vector q = project_losses(g, ops.P_Q, q_hat);
  CHECK(q[static_cast<Eigen::Index>(centre)] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(project_losses(g, ops.P_Q, Vector::Zero(q_hat.size())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("DC bar: linear ramp and Ohmic loss") {
  const auto solver = dc_bar(1.0);
  const auto trace = solver.run(1.0, 3.0, CouplingMode::lagged);
  const auto& g = solver.grid();
  const Vector& phi = trace.phi.back();
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double x = g.position(Axis::x, g.node_ijk(i)[0]);
    CHECK(phi[static_cast<Eigen::Index>(i)] == doctest::Approx(1.0 - x / 3e-3).epsilon(1e-12));
  }
  const Vector e = -(solver.operators().G * phi);
  const Vector q_hat = compute_branch_losses(e, solver.sigma_conductances(trace.T.back()).cwiseProduct(e));
  CHECK(q_hat.sum() == doctest::Approx(1e-3).epsilon(1e-10));
  CHECK(q_hat.minCoeff() >= 0.0);
}

TEST_CASE("interior power balance on randomized equidistant grids") {
  testgen::Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testgen::random_uniform_grid(rng, 3, 6);
    const auto ops = build_incidence(g);
    const auto ne = static_cast<Eigen::Index>(g.edge_count());
    const auto interior = [&](std::size_t node) {
      const auto ijk = g.node_ijk(node);
      for (int a = 0; a < 3; ++a) {
        if (ijk[a] == 0 || ijk[a] + 1 == g.node_counts()[a]) return false;
      }
      return true;
    };
    Vector q_hat = Vector::Zero(ne);
    double expected = 0.0;
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      const auto head = g.edge_head(e);
      if (!head || !interior(g.edge_tail(e)) || !interior(*head)) continue;
      const double v = rng.log_uniform(1e-6, 1.0);
      q_hat[static_cast<Eigen::Index>(e)] = v;
      expected += v;
    }
    if (expected == 0.0) continue;
    const Vector q = project_losses(g, ops.P_Q, q_hat);
    CHECK(q.sum() == doctest::Approx(expected).epsilon(1e-10));
    CHECK(q.minCoeff() >= 0.0);
  }
}

TEST_CASE("adiabatic diffusion conserves thermal energy") {
  testgen::Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = testgen::random_grid(rng);
    auto m = testgen::random_materials(rng, g, 0.3, 0.0);
    BoundaryConditions bcs;
    bcs.electric_dirichlet[0] = DcWave{0.0};
    const FieldSolver solver(g, m, bcs);
    FieldState init = solver.initial_state();
    for (Eigen::Index i = 0; i < init.T.size(); ++i) init.T[i] = rng.uniform(0.0, 50.0);
    const auto trace = solver.run(1e-3, 2e-2, CouplingMode::lagged, {}, init);
    const Vector& c = solver.matrices().m_rhoc;
    const double e0 = c.dot(trace.T.front());
    for (std::size_t k = 1; k < trace.size(); ++k) {
      CHECK(c.dot(trace.T[k]) == doctest::Approx(e0).epsilon(1e-12));
      CHECK(trace.phi[k].cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("thermal energy grows under Joule heating") {
  const auto solver = dc_bar(10.0, 4e-3);
  const auto trace = solver.run(1e-2, 0.2, CouplingMode::monolithic);
  const Vector& c = solver.matrices().m_rhoc;
  for (std::size_t k = 1; k < trace.size(); ++k) {
    CHECK(c.dot(trace.T[k]) >= c.dot(trace.T[k - 1]));
  }
}

TEST_CASE("analytic Jacobian matches central differences") {
  testgen::Rng rng(31337);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = testgen::random_grid(rng);
    auto m = testgen::random_materials(rng, g, 0.3, 5e-3);
    BoundaryConditions bcs;
    bcs.electric_dirichlet[0] = DcWave{1.0};
    bcs.extra_branches.push_back({0, g.node_count() - 1, rng.uniform(0.1, 2.0), rng.uniform(0.1, 2.0)});
    const FieldSolver solver(g, m, bcs);
    const auto n = static_cast<Eigen::Index>(g.node_count());
    FieldState prev = solver.initial_state();
    Vector phi(n), T(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prev.T[i] = rng.uniform(0.0, 20.0);
      phi[i] = rng.uniform(-1.0, 1.0);
      T[i] = rng.uniform(0.0, 40.0);
    }
    const double dt = 1e-4;
    Vector F;
    SparseMatrix J;
    solver.residual(prev, phi, T, dt, F, &J);
    const Eigen::MatrixXd Jd(J);
    for (Eigen::Index c = 0; c < 2 * n; ++c) {
      Vector pp = phi, pm = phi, tp = T, tm = T;
      const double x = c < n ? phi[c] : T[c - n];
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      if (c < n) {
        pp[c] += h;
        pm[c] -= h;
      } else {
        tp[c - n] += h;
        tm[c - n] -= h;
      }
      Vector Fp, Fm;
      solver.residual(prev, pp, tp, dt, Fp, nullptr);
      solver.residual(prev, pm, tm, dt, Fm, nullptr);
      const Vector fd = (Fp - Fm) / (2 * h);
      for (Eigen::Index r = 0; r < 2 * n; ++r) {
        const double scale = std::max(Jd.row(r).cwiseAbs().maxCoeff(), 1e-300);
        CHECK(std::abs(Jd(r, c) - fd[r]) <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("linear problem: electrical block converges in one iteration") {
  auto s = benchmark_scenario();
  s.solver.tstop = 2e-5;
  const auto model = build_model(s);
  const FieldSolver solver(model.grid, model.materials, model.bcs);
  const auto trace = solver.run(s.solver.dt, s.solver.tstop, CouplingMode::monolithic);
  for (const auto& info : trace.steps) CHECK(info.electric_iterations == 1);
}

TEST_CASE("lagged and monolithic coupling converge as dt shrinks") {
  auto s = benchmark_nonlinear_scenario();
  s.solver.tstop = 2e-5;
  const auto model = build_model(s);
  const FieldSolver solver(model.grid, model.materials, model.bcs);
  const auto discrepancy = [&](double dt) {
    const auto lagged = solver.run(dt, s.solver.tstop, CouplingMode::lagged);
    const auto mono = solver.run(dt, s.solver.tstop, CouplingMode::monolithic);
    return max_rel_diff(mono.T, lagged.T);
  };
  const double coarse = discrepancy(1e-7);
  const double fine = discrepancy(5e-8);
  CHECK(coarse > 0.0);
  CHECK(coarse / fine >= 1.8);
}

TEST_CASE("Dirichlet values hold at every time point") {
  const auto s = benchmark_scenario();
  const auto model = build_model(s);
  const FieldSolver solver(model.grid, model.materials, model.bcs);
  const auto trace = solver.run(1e-7, 5e-6, CouplingMode::lagged);
  for (std::size_t k = 0; k < trace.size(); ++k) {
    for (const auto& [node, w] : model.bcs.electric_dirichlet) {
      CHECK(trace.phi[k][static_cast<Eigen::Index>(node)] == evaluate(w, trace.times[k]));
    }
  }
}

TEST_CASE("floating electrical system is singular") {
  auto g = StaggeredGrid::uniform({2, 2, 2}, {1e-3, 1e-3, 1e-3});
  auto m = MaterialModel::uniform(g.cell_count(), 1.0, 1.0, 1.0, 1.0);
  try {
    FieldSolver solver(g, m, BoundaryConditions{});
    FAIL("expected SingularSystem");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_system);
  }
  BoundaryConditions bad;
  bad.electric_dirichlet[99] = DcWave{0.0};
  CHECK_THROWS_AS(FieldSolver(g, m, bad), Error);
}

TEST_CASE("non-positive dt is rejected") {
  const auto solver = dc_bar(1.0);
  CHECK_THROWS_AS(solver.step(solver.initial_state(), 0.0, CouplingMode::lagged), Error);
  CHECK_THROWS_AS(solver.run(1e-3, 0.0, CouplingMode::lagged), Error);
}

}  // TEST_SUITE
