#include "fitnet/field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "fitnet/error.hpp"
#include "sparse_solve.hpp"

namespace fitnet {

void BoundaryConditions::validate(std::size_t node_count) const {
  if (electric_dirichlet.empty()) {
    throw Error(ErrorCode::singular_system,
                "the electrical system needs at least one Dirichlet (reference) node");
  }
  for (const auto* map : {&electric_dirichlet, &thermal_dirichlet}) {
    for (const auto& [node, wave] : *map) {
      if (node >= node_count) {
        throw Error(ErrorCode::invalid_input,
                    "Dirichlet node " + std::to_string(node) + " is outside the grid");
      }
    }
  }
  for (const auto& b : extra_branches) {
    if (b.node_a >= node_count || b.node_b >= node_count || b.node_a == b.node_b) {
      throw Error(ErrorCode::invalid_input, "lumped branch has invalid end nodes");
    }
    if (!(b.g_el >= 0.0) || !(b.g_th >= 0.0)) {
      throw Error(ErrorCode::invalid_input, "lumped branch conductances must be non-negative");
    }
  }
}

Vector compute_branch_losses(const Vector& e, const Vector& j_current) {
  if (e.size() != j_current.size()) {
    throw Error(ErrorCode::shape_error, "e and j must have the same length");
  }
  return e.cwiseProduct(j_current);
}

Vector project_losses(const StaggeredGrid& grid, const SparseMatrix& P_Q, const Vector& Q_hat) {
  const auto ne = static_cast<Eigen::Index>(grid.edge_count());
  const auto n = static_cast<Eigen::Index>(grid.node_count());
  if (Q_hat.size() != ne || P_Q.rows() != n || P_Q.cols() != ne) {
    throw Error(ErrorCode::shape_error, "loss projection: size mismatch");
  }
  Vector inv_shifted = Vector::Zero(ne);
  const Vector& vhat = grid.shifted_volumes();
  for (Eigen::Index j = 0; j < ne; ++j) {
    if (vhat[j] > 0.0) inv_shifted[j] = 1.0 / vhat[j];
  }
  const Vector scaled = inv_shifted.cwiseProduct(Q_hat);
  return 0.5 * grid.dual_volumes().cwiseProduct(P_Q * scaled);
}

FieldSolver::FieldSolver(StaggeredGrid grid, MaterialModel materials, BoundaryConditions bcs)
    : grid_(std::move(grid)), materials_(std::move(materials)), bcs_(std::move(bcs)) {
  bcs_.validate(grid_.node_count());
  ops_ = build_incidence(grid_);
  matrices_ = assemble_material_matrices(grid_, materials_);

  const Vector& dual = grid_.dual_volumes();
  const Vector& vhat = grid_.shifted_volumes();
  for (std::size_t e = 0; e < grid_.edge_count(); ++e) {
    const auto head = grid_.edge_head(e);
    if (!head) continue;
    const auto j = static_cast<Eigen::Index>(e);
    const std::size_t tail = grid_.edge_tail(e);
    EdgeData d{};
    d.tail = tail;
    d.head = *head;
    d.edge = e;
    d.g_eps = matrices_.m_eps[j];
    d.g_lambda = matrices_.m_lambda[j];
    d.ratio = grid_.dual_facet_areas()[j] / grid_.edge_lengths()[j];
    d.w_tail = dual[static_cast<Eigen::Index>(tail)] / (2.0 * vhat[j]);
    d.w_head = dual[static_cast<Eigen::Index>(*head)] / (2.0 * vhat[j]);
    d.conducting = matrices_.m_sigma[j] > 0.0;
    edges_.push_back(d);
  }
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct Assembly {
  Vector F;
  Vector scale;
  Vector q_el;
  Triplets jac;
};

}  // namespace

struct FieldSolver::Stepper {
  explicit Stepper(const FieldSolver& solver) : s(solver) {
    const std::size_t n = s.grid_.node_count();
    std::vector<bool> fixed(2 * n, false);
    for (const auto& [node, w] : s.bcs_.electric_dirichlet) fixed[node] = true;
    for (const auto& [node, w] : s.bcs_.thermal_dirichlet) fixed[n + node] = true;
    auto make = [&](std::size_t lo, std::size_t hi, Block& b) {
      b.map.assign(2 * n, -1);
      for (std::size_t k = lo; k < hi; ++k) {
        if (!fixed[k]) {
          b.map[k] = static_cast<int>(b.dofs.size());
          b.dofs.push_back(k);
        }
      }
    };
    make(0, 2 * n, monolithic);
    make(0, n, electric);
    make(n, 2 * n, thermal);
  }

  struct Block {
    std::vector<int> map;
    std::vector<std::size_t> dofs;
    detail::SparseDirectSolver solver;
  };

  // Fills F, scale and (optionally) Jacobian triplets in the full 2n index space.
  // With `T_sigma` set, conductances are frozen at that temperature and carry
  // no temperature derivative.
  void assemble(const FieldState& prev, const Vector& phi, const Vector& T, const Vector* T_sigma,
                double dt, bool with_jacobian, Assembly& out) const {
    const auto n = static_cast<Eigen::Index>(s.grid_.node_count());
    out.F = Vector::Zero(2 * n);
    out.scale = Vector::Zero(2 * n);
    out.q_el = Vector::Zero(n);
    out.jac.clear();
    const double inv_dt = 1.0 / dt;

    auto add = [&](Eigen::Index row, double term) {
      out.F[row] += term;
      out.scale[row] += std::abs(term);
    };
    // Storage terms are scaled by both operands so that roundoff near steady
    // state does not look like a residual.
    auto add_storage = [&](Eigen::Index row, double c, double now, double before) {
      out.F[row] += c * (now - before);
      out.scale[row] += std::abs(c) * (std::abs(now) + std::abs(before));
    };
    auto stamp = [&](Eigen::Index r, Eigen::Index c, double v) {
      if (with_jacobian) out.jac.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    };
    // Symmetric two-terminal conductance between dofs a and b.
    auto stamp_pair = [&](Eigen::Index a, Eigen::Index b, double g) {
      stamp(a, a, g);
      stamp(a, b, -g);
      stamp(b, b, g);
      stamp(b, a, -g);
    };

    const Vector& T_eval = T_sigma ? *T_sigma : T;
    for (const auto& d : s.edges_) {
      const auto a = static_cast<Eigen::Index>(d.tail);
      const auto b = static_cast<Eigen::Index>(d.head);
      const double u = phi[b] - phi[a];

      // displacement current
      const double cap = d.g_eps * inv_dt;
      const double u_prev = prev.phi[b] - prev.phi[a];
      add_storage(a, -cap, u, u_prev);
      add_storage(b, cap, u, u_prev);
      stamp_pair(a, b, cap);

      if (d.conducting) {
        const double dT_bar = 0.5 * (T_eval[a] + T_eval[b]);
        const auto ec = edge_conductance(s.grid_, s.materials_, s.matrices_, d.edge, dT_bar);
        const double g = ec.g;
        add(a, -g * u);
        add(b, g * u);
        stamp_pair(a, b, g);

        const double q_hat = g * u * u;
        const double qa = d.w_tail * q_hat;
        const double qb = d.w_head * q_hat;
        out.q_el[a] += qa;
        out.q_el[b] += qb;
        add(n + a, -qa);
        add(n + b, -qb);
        // dQ_hat/dphi_b = 2 g u, dQ_hat/dphi_a = -2 g u
        stamp(n + a, a, d.w_tail * 2.0 * g * u);
        stamp(n + a, b, -d.w_tail * 2.0 * g * u);
        stamp(n + b, a, d.w_head * 2.0 * g * u);
        stamp(n + b, b, -d.w_head * 2.0 * g * u);

        if (!T_sigma) {
          const double dg = 0.5 * ec.dg_dT;  // per end point temperature
          stamp(a, n + a, -u * dg);
          stamp(a, n + b, -u * dg);
          stamp(b, n + a, u * dg);
          stamp(b, n + b, u * dg);
          const double dq = u * u * dg;
          stamp(n + a, n + a, -d.w_tail * dq);
          stamp(n + a, n + b, -d.w_tail * dq);
          stamp(n + b, n + a, -d.w_head * dq);
          stamp(n + b, n + b, -d.w_head * dq);
        }
      }

      if (d.g_lambda > 0.0) {
        const double flux = d.g_lambda * (T[b] - T[a]);
        add(n + a, -flux);
        add(n + b, flux);
        stamp_pair(n + a, n + b, d.g_lambda);
      }
    }

    for (const auto& br : s.bcs_.extra_branches) {
      const auto a = static_cast<Eigen::Index>(br.node_a);
      const auto b = static_cast<Eigen::Index>(br.node_b);
      if (br.g_el > 0.0) {
        const double i_ab = br.g_el * (phi[b] - phi[a]);
        add(a, -i_ab);
        add(b, i_ab);
        stamp_pair(a, b, br.g_el);
      }
      if (br.g_th > 0.0) {
        const double flux = br.g_th * (T[b] - T[a]);
        add(n + a, -flux);
        add(n + b, flux);
        stamp_pair(n + a, n + b, br.g_th);
      }
    }

    const Vector& rhoc = s.matrices_.m_rhoc;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double c = rhoc[i] * inv_dt;
      add_storage(n + i, c, T[i], prev.T[i]);
      stamp(n + i, n + i, c);
    }
  }

  struct Norms {
    double electric = 0.0;
    double thermal = 0.0;
    double max() const { return std::max(electric, thermal); }
  };

  Norms scaled_norms(const Block& block, const Assembly& a) const {
    const std::size_t n = s.grid_.node_count();
    double fe = 0.0, se = 0.0, ft = 0.0, st = 0.0;
    for (std::size_t k : block.dofs) {
      const auto i = static_cast<Eigen::Index>(k);
      if (k < n) {
        fe = std::max(fe, std::abs(a.F[i]));
        se = std::max(se, a.scale[i]);
      } else {
        ft = std::max(ft, std::abs(a.F[i]));
        st = std::max(st, a.scale[i]);
      }
    }
    auto ratio = [](double f, double sc) {
      if (f == 0.0) return 0.0;
      return sc > 0.0 ? f / sc : std::numeric_limits<double>::infinity();
    };
    return {ratio(fe, se), ratio(ft, st)};
  }

  // Newton iteration on the dofs of `block`; phi/T hold the current iterate
  // with Dirichlet values already applied.
  void newton(Block& block, const FieldState& prev, Vector& phi, Vector& T, const Vector* T_sigma,
              double dt, double t, const NewtonOptions& opts, StepInfo& info,
              Assembly& a) {
    const std::size_t n = s.grid_.node_count();
    if (block.dofs.empty()) {
      assemble(prev, phi, T, T_sigma, dt, false, a);
      return;
    }
    assemble(prev, phi, T, T_sigma, dt, true, a);
    int iter = 0;
    for (;;) {
      const Norms r = scaled_norms(block, a);
      info.residual = r.max();
      if (iter >= 1 && r.electric < opts.tol && info.electric_iterations == 0) {
        info.electric_iterations = info.iterations;
      }
      if (iter >= 1 && r.max() < opts.tol) return;
      if (iter >= opts.max_iter) throw NoConvergence(t, r.max(), iter);

      const auto m = static_cast<Eigen::Index>(block.dofs.size());
      SparseMatrix J(m, m);
      Triplets reduced;
      reduced.reserve(a.jac.size());
      for (const auto& e : a.jac) {
        const int rr = block.map[static_cast<std::size_t>(e.row())];
        const int cc = block.map[static_cast<std::size_t>(e.col())];
        if (rr >= 0 && cc >= 0) reduced.emplace_back(rr, cc, e.value());
      }
      J.setFromTriplets(reduced.begin(), reduced.end());
      Vector rhs(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        rhs[k] = -a.F[static_cast<Eigen::Index>(block.dofs[static_cast<std::size_t>(k)])];
      }
      const Vector delta = block.solver.solve(J, rhs);
      ++iter;
      ++info.iterations;

      const Vector phi0 = phi;
      const Vector T0 = T;
      double lambda = 1.0;
      for (int halving = 0;; ++halving) {
        for (Eigen::Index k = 0; k < m; ++k) {
          const std::size_t dof = block.dofs[static_cast<std::size_t>(k)];
          if (dof < n) {
            phi[static_cast<Eigen::Index>(dof)] = phi0[static_cast<Eigen::Index>(dof)] + lambda * delta[k];
          } else {
            const auto i = static_cast<Eigen::Index>(dof - n);
            T[i] = T0[i] + lambda * delta[k];
          }
        }
        try {
          assemble(prev, phi, T, T_sigma, dt, true, a);
          break;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::nonphysical_resistivity || halving >= 30) throw;
          lambda *= 0.5;
        }
      }
    }
  }

  FieldState step(const FieldState& prev, double t_new, double dt, CouplingMode mode,
                  const NewtonOptions& opts, StepInfo& info) {
    FieldState next;
    next.t = t_new;
    next.phi = prev.phi;
    next.T = prev.T;
    for (const auto& [node, w] : s.bcs_.electric_dirichlet) {
      next.phi[static_cast<Eigen::Index>(node)] = evaluate(w, t_new);
    }
    for (const auto& [node, w] : s.bcs_.thermal_dirichlet) {
      next.T[static_cast<Eigen::Index>(node)] = evaluate(w, t_new);
    }

    info = StepInfo{};
    Assembly a;
    if (mode == CouplingMode::monolithic) {
      newton(monolithic, prev, next.phi, next.T, nullptr, dt, t_new, opts, info, a);
    } else {
      // One Gauss-Seidel pass: potentials with sigma at the old temperature,
      // then temperatures driven by the resulting losses.
      StepInfo thermal_info;
      newton(electric, prev, next.phi, next.T, &prev.T, dt, t_new, opts, info, a);
      newton(thermal, prev, next.phi, next.T, &prev.T, dt, t_new, opts, thermal_info, a);
      info.iterations += thermal_info.iterations;
      info.residual = std::max(info.residual, thermal_info.residual);
    }
    next.q_el = a.q_el;
    return next;
  }

  const FieldSolver& s;
  Block monolithic;
  Block electric;
  Block thermal;
};

FieldState FieldSolver::initial_state() const {
  const auto n = static_cast<Eigen::Index>(grid_.node_count());
  FieldState st;
  st.t = 0.0;
  st.phi = Vector::Zero(n);
  st.T = Vector::Zero(n);
  for (const auto& [node, w] : bcs_.electric_dirichlet) {
    st.phi[static_cast<Eigen::Index>(node)] = evaluate(w, 0.0);
  }
  for (const auto& [node, w] : bcs_.thermal_dirichlet) {
    st.T[static_cast<Eigen::Index>(node)] = evaluate(w, 0.0);
  }
  st.q_el = joule_losses(st.phi, st.T);
  return st;
}

FieldState FieldSolver::step(const FieldState& state, double dt, CouplingMode mode,
                             const NewtonOptions& newton, StepInfo* info) const {
  if (!(dt > 0.0)) throw Error(ErrorCode::invalid_input, "dt must be positive");
  Stepper stepper(*this);
  StepInfo local;
  FieldState next = stepper.step(state, state.t + dt, dt, mode, newton, local);
  if (info) *info = local;
  return next;
}

TransientTrace FieldSolver::run(double dt, double tstop, CouplingMode mode,
                                const NewtonOptions& newton,
                                const std::optional<FieldState>& initial) const {
  if (!(dt > 0.0) || !(tstop >= dt)) {
    throw Error(ErrorCode::invalid_input, "need dt > 0 and tstop >= dt");
  }
  const auto steps = static_cast<std::size_t>(std::llround(tstop / dt));
  Stepper stepper(*this);

  TransientTrace trace;
  FieldState state = initial ? *initial : initial_state();
  if (initial) state.q_el = joule_losses(state.phi, state.T);
  trace.times.reserve(steps + 1);
  trace.times.push_back(state.t);
  trace.phi.push_back(state.phi);
  trace.T.push_back(state.T);
  trace.q_el.push_back(state.q_el);
  for (std::size_t k = 1; k <= steps; ++k) {
    StepInfo info;
    state = stepper.step(state, static_cast<double>(k) * dt, dt, mode, newton, info);
    trace.times.push_back(state.t);
    trace.phi.push_back(state.phi);
    trace.T.push_back(state.T);
    trace.q_el.push_back(state.q_el);
    trace.steps.push_back(info);
  }
  return trace;
}

namespace {

SparseMatrix branch_matrix(std::size_t n, const std::vector<LumpedBranch>& branches, bool thermal) {
  Triplets t;
  for (const auto& b : branches) {
    const double g = thermal ? b.g_th : b.g_el;
    if (g <= 0.0) continue;
    const int a = static_cast<int>(b.node_a);
    const int c = static_cast<int>(b.node_b);
    t.emplace_back(a, a, g);
    t.emplace_back(c, c, g);
    t.emplace_back(a, c, -g);
    t.emplace_back(c, a, -g);
  }
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix weighted_laplacian(const SparseMatrix& S, const Vector& diag) {
  const SparseMatrix SM = S * diag.asDiagonal();
  SparseMatrix out = SM * SparseMatrix(S.transpose());
  out.prune(0.0);
  return out;
}

}  // namespace

SparseMatrix FieldSolver::electric_capacitance() const {
  return weighted_laplacian(ops_.S_dual, matrices_.m_eps);
}

Vector FieldSolver::sigma_conductances(const Vector& T) const {
  Vector g = Vector::Zero(static_cast<Eigen::Index>(grid_.edge_count()));
  for (const auto& d : edges_) {
    if (!d.conducting) continue;
    const double dT_bar =
        0.5 * (T[static_cast<Eigen::Index>(d.tail)] + T[static_cast<Eigen::Index>(d.head)]);
    g[static_cast<Eigen::Index>(d.edge)] =
        edge_conductance(grid_, materials_, matrices_, d.edge, dT_bar).g;
  }
  return g;
}

SparseMatrix FieldSolver::electric_conductance(const Vector& T) const {
  SparseMatrix out = weighted_laplacian(ops_.S_dual, sigma_conductances(T));
  out += branch_matrix(grid_.node_count(), bcs_.extra_branches, false);
  out.prune(0.0);
  return out;
}

SparseMatrix FieldSolver::thermal_capacitance() const {
  const auto n = static_cast<Eigen::Index>(grid_.node_count());
  SparseMatrix out(n, n);
  Triplets t;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (matrices_.m_rhoc[i] != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), matrices_.m_rhoc[i]);
  }
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseMatrix FieldSolver::thermal_conductance() const {
  SparseMatrix out = weighted_laplacian(ops_.S_dual, matrices_.m_lambda);
  out += branch_matrix(grid_.node_count(), bcs_.extra_branches, true);
  out.prune(0.0);
  return out;
}

Vector FieldSolver::joule_losses(const Vector& phi, const Vector& T_sigma) const {
  const Vector e = -(ops_.G * phi);
  const Vector j = sigma_conductances(T_sigma).cwiseProduct(e);
  return project_losses(grid_, ops_.P_Q, compute_branch_losses(e, j));
}

void FieldSolver::residual(const FieldState& prev, const Vector& phi, const Vector& T, double dt,
                           Vector& F, SparseMatrix* jacobian) const {
  Stepper stepper(*this);
  Assembly a;
  stepper.assemble(prev, phi, T, nullptr, dt, jacobian != nullptr, a);
  F = a.F;
  if (jacobian) {
    const auto m = static_cast<Eigen::Index>(2 * grid_.node_count());
    jacobian->resize(m, m);
    jacobian->setFromTriplets(a.jac.begin(), a.jac.end());
  }
}

}  // namespace fitnet
