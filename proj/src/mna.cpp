#include "fitnet/mna.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fitnet/error.hpp"
#include "sparse_solve.hpp"

namespace fitnet {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr int kSourceGroup = 3;

int group_of(NodeDomain d) {
  switch (d) {
    case NodeDomain::electrical: return 0;
    case NodeDomain::thermal: return 1;
    default: return 2;
  }
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t k) {
    while (parent[k] != k) k = parent[k] = parent[parent[k]];
    return k;
  }
  void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

MnaSystem MnaSystem::assemble(const Netlist& netlist) {
  MnaSystem sys;
  sys.card_count_ = netlist.elements.size();

  bool has_ground = false;
  for (const auto& e : netlist.elements) {
    for (const std::string* name : {&element_n_plus(e), &element_n_minus(e)}) {
      if (*name == kGround) {
        has_ground = true;
      } else if (!sys.node_index_.count(*name)) {
        sys.node_index_[*name] = sys.node_names_.size();
        sys.node_names_.push_back(*name);
        sys.node_table_[*name] = classify_node(*name);
      }
    }
  }
  if (!has_ground) throw Error(ErrorCode::missing_ground, "no element is connected to ground node 0");

  const auto index = [&](const std::string& name) -> int {
    if (name == kGround) return -1;
    const auto it = sys.node_index_.find(name);
    if (it == sys.node_index_.end()) {
      throw Error(ErrorCode::invalid_input, "expression references unknown node '" + name + "'");
    }
    return static_cast<int>(it->second);
  };

  const std::size_t n = sys.node_names_.size();
  UnionFind uf(n + 1);  // slot n is ground
  const auto slot = [&](int k) { return k < 0 ? n : static_cast<std::size_t>(k); };

  for (const auto& e : netlist.elements) {
    const int a = index(element_n_plus(e));
    const int b = index(element_n_minus(e));
    uf.join(slot(a), slot(b));
    if (const auto* r = std::get_if<Resistor>(&e)) {
      if (!(r->ohms > 0.0)) {
        throw Error(ErrorCode::invalid_input, "resistor " + r->name + " must be positive");
      }
      sys.resistors_.push_back({a, b, 1.0 / r->ohms});
    } else if (const auto* c = std::get_if<Capacitor>(&e)) {
      sys.capacitors_.push_back({a, b, c->farads});
    } else if (const auto* v = std::get_if<VoltageSource>(&e)) {
      sys.vsrc_index_[v->name] = n + sys.vsources_.size();
      sys.vsources_.push_back({a, b, v->waveform, n + sys.vsources_.size()});
    } else if (const auto* i = std::get_if<CurrentSource>(&e)) {
      sys.isources_.push_back({a, b, i->waveform, 0});
    } else if (const auto* br = std::get_if<BehavioralResistor>(&e)) {
      sys.behavioral_.push_back({br->name, a, b, CompiledExpression(br->ohms, index), true});
    } else if (const auto* bi = std::get_if<BehavioralCurrent>(&e)) {
      sys.behavioral_.push_back({bi->name, a, b, CompiledExpression(bi->amperes, index), false});
    }
  }
  sys.dimension_ = n + sys.vsources_.size();

  sys.row_group_.assign(sys.dimension_, kSourceGroup);
  for (std::size_t k = 0; k < n; ++k) {
    sys.row_group_[k] = group_of(sys.node_table_[sys.node_names_[k]].domain);
  }

  std::map<std::size_t, std::vector<std::string>> floating;
  for (std::size_t k = 0; k < n; ++k) {
    if (uf.find(k) != uf.find(n)) floating[uf.find(k)].push_back(sys.node_names_[k]);
  }
  for (const auto& [root, names] : floating) {
    std::string msg = "SingularWarning: floating subnetwork without path to ground:";
    for (const auto& name : names) msg += ' ' + name;
    sys.warnings_.push_back(msg);
  }
  return sys;
}

SparseMatrix MnaSystem::capacitance_matrix() const {
  Triplets t;
  for (const auto& c : capacitors_) {
    if (c.a >= 0) t.emplace_back(c.a, c.a, c.value);
    if (c.b >= 0) t.emplace_back(c.b, c.b, c.value);
    if (c.a >= 0 && c.b >= 0) {
      t.emplace_back(c.a, c.b, -c.value);
      t.emplace_back(c.b, c.a, -c.value);
    }
  }
  const auto dim = static_cast<Eigen::Index>(dimension_);
  SparseMatrix C(dim, dim);
  C.setFromTriplets(t.begin(), t.end());
  return C;
}

void MnaSystem::static_residual(const Vector& x, double t, Vector& f, SparseMatrix* jacobian,
                                Vector* scale) const {
  const auto dim = static_cast<Eigen::Index>(dimension_);
  if (x.size() != dim) throw Error(ErrorCode::shape_error, "MNA state has the wrong size");
  f = Vector::Zero(dim);
  Vector sc = Vector::Zero(dim);
  Triplets jac;

  const auto volt = [&](int k) { return k < 0 ? 0.0 : x[k]; };
  const auto add = [&](int row, double term) {
    if (row < 0) return;
    f[row] += term;
    sc[row] += std::abs(term);
  };
  const auto stamp = [&](int r, int c, double v) {
    if (jacobian && r >= 0 && c >= 0) jac.emplace_back(r, c, v);
  };
  // Current i leaving node a and entering node b.
  const auto branch_current = [&](int a, int b, double i) {
    add(a, i);
    add(b, -i);
  };
  const auto stamp_conductance = [&](int a, int b, double g) {
    stamp(a, a, g);
    stamp(b, b, g);
    stamp(a, b, -g);
    stamp(b, a, -g);
  };

  for (const auto& r : resistors_) {
    branch_current(r.a, r.b, r.value * (volt(r.a) - volt(r.b)));
    stamp_conductance(r.a, r.b, r.value);
  }
  for (const auto& s : isources_) branch_current(s.a, s.b, evaluate(s.waveform, t));
  for (const auto& s : vsources_) {
    const auto row = static_cast<int>(s.row);
    const double i = x[row];
    branch_current(s.a, s.b, i);
    stamp(s.a, row, 1.0);
    stamp(s.b, row, -1.0);
    add(row, volt(s.a));
    add(row, -volt(s.b));
    add(row, -evaluate(s.waveform, t));
    stamp(row, s.a, 1.0);
    stamp(row, s.b, -1.0);
  }

  std::vector<std::pair<int, double>> grad;
  for (const auto& b : behavioral_) {
    const double value = b.expr.value_and_gradient(x, grad);
    if (b.is_resistor) {
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(ErrorCode::nonphysical_resistivity,
                    "behavioral resistor " + b.name + " evaluates to " + std::to_string(value));
      }
      const double u = volt(b.a) - volt(b.b);
      const double g = 1.0 / value;
      branch_current(b.a, b.b, g * u);
      stamp_conductance(b.a, b.b, g);
      const double di_dR = -u * g * g;
      for (const auto& [k, dR] : grad) {
        stamp(b.a, k, di_dR * dR);
        stamp(b.b, k, -di_dR * dR);
      }
    } else {
      branch_current(b.a, b.b, value);
      for (const auto& [k, dI] : grad) {
        stamp(b.a, k, dI);
        stamp(b.b, k, -dI);
      }
    }
  }

  if (jacobian) {
    jacobian->resize(dim, dim);
    jacobian->setFromTriplets(jac.begin(), jac.end());
  }
  if (scale) *scale = std::move(sc);
}

SparseMatrix MnaSystem::conductance_matrix(const Vector& x) const {
  Vector f;
  SparseMatrix J;
  static_residual(x, 0.0, f, &J);
  const auto n = static_cast<Eigen::Index>(node_count());
  SparseMatrix G = J.topLeftCorner(n, n);
  G.prune(0.0);
  G.makeCompressed();
  return G;
}

Vector MnaSystem::initial_state(double t) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(dimension_));
  for (const auto& s : vsources_) {
    if (s.a >= 0 && s.b < 0) x[s.a] = evaluate(s.waveform, t);
    if (s.b >= 0 && s.a < 0) x[s.b] = -evaluate(s.waveform, t);
  }
  return x;
}

std::map<std::string, double> MnaSystem::behavioral_currents(const Vector& x) const {
  std::map<std::string, double> out;
  for (const auto& b : behavioral_) {
    if (!b.is_resistor) out[b.name] = b.expr.value(x);
  }
  return out;
}

double scaled_residual_norm(const MnaSystem& system, const Vector& F, const Vector& scale) {
  double fmax[4] = {0, 0, 0, 0};
  double smax[4] = {0, 0, 0, 0};
  for (std::size_t k = 0; k < system.row_group_.size(); ++k) {
    const int g = system.row_group_[k];
    const auto i = static_cast<Eigen::Index>(k);
    fmax[g] = std::max(fmax[g], std::abs(F[i]));
    smax[g] = std::max(smax[g], scale[i]);
  }
  double worst = 0.0;
  for (int g = 0; g < 4; ++g) {
    if (fmax[g] == 0.0) continue;
    if (!std::isfinite(fmax[g])) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, smax[g] > 0.0 ? fmax[g] / smax[g]
                                          : std::numeric_limits<double>::infinity());
  }
  return worst;
}

TransientTrace solve_transient(const MnaSystem& system, double dt, double tstop,
                               const MnaOptions& options, std::optional<std::size_t> grid_nodes) {
  if (!(dt > 0.0) || !(tstop >= dt)) {
    throw Error(ErrorCode::invalid_input, "transient needs dt > 0 and tstop >= dt");
  }
  const auto dim = static_cast<Eigen::Index>(system.dimension());

  // Map netlist nodes back onto grid indices.
  std::size_t n_grid = grid_nodes.value_or(0);
  if (!grid_nodes) {
    for (const auto& [name, info] : system.node_table())
      if (info.grid_index) n_grid = std::max(n_grid, *info.grid_index + 1);
  }
  std::vector<std::pair<Eigen::Index, Eigen::Index>> phi_map, T_map;
  for (const auto& [name, info] : system.node_table()) {
    if (!info.grid_index || *info.grid_index >= n_grid) continue;
    const auto unknown = static_cast<Eigen::Index>(system.node_index().at(name));
    const auto g = static_cast<Eigen::Index>(*info.grid_index);
    if (info.domain == NodeDomain::electrical) phi_map.emplace_back(g, unknown);
    if (info.domain == NodeDomain::thermal) T_map.emplace_back(g, unknown);
  }
  // Loss sources injecting into a thermal grid node from ground.
  std::vector<std::pair<std::size_t, Eigen::Index>> q_map;  // (behavioral index, grid node)
  for (std::size_t k = 0; k < system.behavioral_.size(); ++k) {
    const auto& b = system.behavioral_[k];
    if (b.is_resistor || b.a >= 0 || b.b < 0) continue;
    const auto& info = system.node_table().at(system.node_names()[static_cast<std::size_t>(b.b)]);
    if (info.domain == NodeDomain::thermal && info.grid_index && *info.grid_index < n_grid) {
      q_map.emplace_back(k, static_cast<Eigen::Index>(*info.grid_index));
    }
  }

  TransientTrace trace;
  const auto record = [&](double t, const Vector& x) {
    const auto ng = static_cast<Eigen::Index>(n_grid);
    Vector phi = Vector::Zero(ng), T = Vector::Zero(ng), q = Vector::Zero(ng);
    for (const auto& [g, u] : phi_map) phi[g] = x[u];
    for (const auto& [g, u] : T_map) T[g] = x[u];
    for (const auto& [k, g] : q_map) q[g] += system.behavioral_[k].expr.value(x);
    trace.times.push_back(t);
    trace.phi.push_back(std::move(phi));
    trace.T.push_back(std::move(T));
    trace.q_el.push_back(std::move(q));
  };

  const SparseMatrix C = system.capacitance_matrix();
  const SparseMatrix C_abs = C.cwiseAbs();
  detail::SparseDirectSolver solver;
  Vector x = system.initial_state(0.0);
  Vector qdot = Vector::Zero(dim);
  record(0.0, x);

  const auto steps = static_cast<long>(std::llround(tstop / dt));
  Vector f, scale, F;
  SparseMatrix J;
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool trap = options.integrator == Integrator::trapezoidal && k > 1;
    const double c_factor = (trap ? 2.0 : 1.0) / dt;
    const Vector x_prev = x;
    const Vector Cxp = C * x_prev;
    const Vector Cxp_abs = C_abs * x_prev.cwiseAbs();

    const auto evaluate_residual = [&](const Vector& xi, bool with_jacobian) {
      system.static_residual(xi, t, f, with_jacobian ? &J : nullptr, &scale);
      const Vector Cx = C * xi;
      F = f + c_factor * (Cx - Cxp);
      // |C x| and |C x_prev| bound the size of the storage terms.
      scale += c_factor * (C_abs * xi.cwiseAbs() + Cxp_abs);
      if (trap) {
        F -= qdot;
        scale += qdot.cwiseAbs();
      }
    };

    StepInfo info;
    evaluate_residual(x, true);
    for (int iter = 0;; ++iter) {
      const double norm = scaled_residual_norm(system, F, scale);
      info.residual = norm;
      if (iter >= 1 && norm < options.newton.tol) break;
      if (iter >= options.newton.max_iter) throw NoConvergence(t, norm, iter);
      SparseMatrix A = J + c_factor * C;
      const Vector delta = solver.solve(A, -F);
      ++info.iterations;
      const Vector x0 = x;
      double lambda = 1.0;
      for (int halving = 0;; ++halving) {
        x = x0 + lambda * delta;
        try {
          evaluate_residual(x, true);
          break;
        } catch (const Error& err) {
          if (err.code() != ErrorCode::nonphysical_resistivity || halving >= 30) throw;
          lambda *= 0.5;
        }
      }
    }
    info.electric_iterations = info.iterations;
    qdot = c_factor * (C * (x - x_prev)) - (trap ? qdot : Vector::Zero(dim));
    trace.steps.push_back(info);
    record(t, x);
  }
  return trace;
}

}  // namespace fitnet
