#include "fitnet/netlist.hpp"

#include <cstdio>
#include <map>

#include "fitnet/error.hpp"

namespace fitnet {

namespace {

template <typename F>
decltype(auto) visit_terminals(const Element& e, F&& f) {
  return std::visit([&](const auto& card) -> decltype(auto) { return f(card); }, e);
}

std::string indexed_name(const char* prefix, std::size_t index_one_based) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, index_one_based);
  return buf;
}

}  // namespace

const std::string& element_name(const Element& e) {
  return visit_terminals(e, [](const auto& c) -> const std::string& { return c.name; });
}
const std::string& element_n_plus(const Element& e) {
  return visit_terminals(e, [](const auto& c) -> const std::string& { return c.n_plus; });
}
const std::string& element_n_minus(const Element& e) {
  return visit_terminals(e, [](const auto& c) -> const std::string& { return c.n_minus; });
}

std::string electrical_node_name(std::size_t grid_index) {
  return indexed_name("E", grid_index + 1);
}

std::string thermal_node_name(std::size_t grid_index) {
  return indexed_name("T", grid_index + 1);
}

NodeInfo classify_node(std::string_view name) {
  if (name == kGround) return {NodeDomain::ground, std::nullopt};
  if (name.size() >= 2 && (name[0] == 'E' || name[0] == 'T')) {
    std::size_t value = 0;
    bool digits = true;
    for (std::size_t k = 1; k < name.size(); ++k) {
      const char c = name[k];
      if (c < '0' || c > '9') {
        digits = false;
        break;
      }
      value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    if (digits && value > 0) {
      return {name[0] == 'E' ? NodeDomain::electrical : NodeDomain::thermal, value - 1};
    }
  }
  return {NodeDomain::external, std::nullopt};
}

void rebuild_node_table(Netlist& netlist) {
  netlist.node_table.clear();
  for (const auto& e : netlist.elements) {
    for (const std::string* node : {&element_n_plus(e), &element_n_minus(e)}) {
      netlist.node_table.emplace(*node, classify_node(*node));
    }
  }
}

Expression edge_resistance_expression(const StaggeredGrid& grid, const MaterialModel& materials,
                                      const MaterialMatrices& matrices, std::size_t edge) {
  const auto j = static_cast<Eigen::Index>(edge);
  const double g_ref = matrices.m_sigma[j];
  if (!(g_ref > 0.0)) {
    throw Error(ErrorCode::open_branch, "edge " + std::to_string(edge) + " does not conduct");
  }
  const double ratio = grid.dual_facet_areas()[j] / grid.edge_lengths()[j];

  // Group touching cells by temperature coefficient: G(T) = sum_k c_k / (1 + a_k T_bar).
  std::map<double, double> groups;
  for (const auto& w : matrices.sigma_bar_weights.at(edge)) {
    const auto p = static_cast<Eigen::Index>(w.cell);
    if (materials.sigma_ref[p] == 0.0) continue;
    groups[materials.alpha[p]] += ratio * w.weight * materials.sigma_ref[p];
  }
  const bool linear = groups.size() == 1 && groups.begin()->first == 0.0;
  if (linear || groups.empty()) return Expression::number(1.0 / g_ref);

  const std::size_t tail = grid.edge_tail(edge);
  const std::size_t head = *grid.edge_head(edge);
  const Expression t_bar =
      (Expression::voltage(thermal_node_name(tail)) + Expression::voltage(thermal_node_name(head))) *
      Expression::number(0.5);

  std::optional<Expression> conductance;
  for (const auto& [alpha, coeff] : groups) {
    Expression term = Expression::number(coeff);
    if (alpha != 0.0) {
      term = term / (Expression::number(1.0) + Expression::number(alpha) * t_bar);
    }
    conductance = conductance ? *conductance + term : term;
  }
  return Expression::number(1.0) / *conductance;
}

Netlist generate_netlist(const StaggeredGrid& grid, const MaterialModel& materials,
                         const MaterialMatrices& matrices, const BoundaryConditions& bcs,
                         const GenerateOptions& options) {
  if (bcs.electric_dirichlet.empty()) {
    throw Error(ErrorCode::missing_ground,
                "no electrical Dirichlet node: the electrical network would float");
  }
  bcs.validate(grid.node_count());

  Netlist net;
  net.title = options.title;
  net.tran = options.tran;

  const std::size_t n = grid.node_count();
  const Vector& dual = grid.dual_volumes();
  const Vector& vhat = grid.shifted_volumes();

  // Joule-loss terms collected per node while walking the edges.
  std::vector<std::optional<Expression>> losses(n);

  for (std::size_t e = 0; e < grid.edge_count(); ++e) {
    const auto head = grid.edge_head(e);
    if (!head) continue;
    const std::size_t tail = grid.edge_tail(e);
    const auto j = static_cast<Eigen::Index>(e);
    const std::string ea = electrical_node_name(tail);
    const std::string eb = electrical_node_name(*head);

    if (matrices.m_sigma[j] > 0.0) {
      const Expression r = edge_resistance_expression(grid, materials, matrices, e);
      if (r.op() == Expression::Op::number) {
        net.elements.push_back(Resistor{indexed_name("RE", e + 1), ea, eb, r.literal()});
      } else {
        net.elements.push_back(BehavioralResistor{indexed_name("BRE", e + 1), ea, eb, r});
      }
      const Expression u = Expression::voltage(ea, eb);
      const Expression q_hat = u * u / r;
      for (const std::size_t node : {tail, *head}) {
        const double w = dual[static_cast<Eigen::Index>(node)] / (2.0 * vhat[j]);
        const Expression term = q_hat * Expression::number(w);
        auto& acc = losses[node];
        acc = acc ? *acc + term : term;
      }
    }
    if (matrices.m_eps[j] > 0.0) {
      net.elements.push_back(Capacitor{indexed_name("CE", e + 1), ea, eb, matrices.m_eps[j]});
    }
    if (matrices.m_lambda[j] > 0.0) {
      net.elements.push_back(Resistor{indexed_name("RT", e + 1), thermal_node_name(tail),
                                      thermal_node_name(*head), 1.0 / matrices.m_lambda[j]});
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double c = matrices.m_rhoc[static_cast<Eigen::Index>(i)];
    if (c > 0.0) {
      net.elements.push_back(Capacitor{indexed_name("CT", i + 1), kGround, thermal_node_name(i), c});
    }
    if (losses[i]) {
      net.elements.push_back(
          BehavioralCurrent{indexed_name("BIQ", i + 1), kGround, thermal_node_name(i), *losses[i]});
    }
  }

  for (const auto& [node, wave] : bcs.electric_dirichlet) {
    net.elements.push_back(
        VoltageSource{indexed_name("VE", node + 1), electrical_node_name(node), kGround, wave});
  }
  for (const auto& [node, wave] : bcs.thermal_dirichlet) {
    net.elements.push_back(
        VoltageSource{indexed_name("VT", node + 1), thermal_node_name(node), kGround, wave});
  }

  std::size_t k = 0;
  for (const auto& b : bcs.extra_branches) {
    ++k;
    if (b.g_el > 0.0) {
      net.elements.push_back(Resistor{indexed_name("RXE", k), electrical_node_name(b.node_a),
                                      electrical_node_name(b.node_b), 1.0 / b.g_el});
    }
    if (b.g_th > 0.0) {
      net.elements.push_back(Resistor{indexed_name("RXT", k), thermal_node_name(b.node_a),
                                      thermal_node_name(b.node_b), 1.0 / b.g_th});
    }
  }

  rebuild_node_table(net);
  return net;
}

}  // namespace fitnet
