#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fitnet/expression.hpp"
#include "fitnet/field_solver.hpp"
#include "fitnet/waveform.hpp"

namespace fitnet {

inline constexpr const char* kGround = "0";

struct Resistor {
  std::string name, n_plus, n_minus;
  double ohms = 0.0;
};

struct Capacitor {
  std::string name, n_plus, n_minus;
  double farads = 0.0;
};

struct VoltageSource {
  std::string name, n_plus, n_minus;
  Waveform waveform;
};

/// Positive values drive current from n_plus through the source to n_minus.
struct CurrentSource {
  std::string name, n_plus, n_minus;
  Waveform waveform;
};

struct BehavioralResistor {
  std::string name, n_plus, n_minus;
  Expression ohms;
};

struct BehavioralCurrent {
  std::string name, n_plus, n_minus;
  Expression amperes;
};

using Element = std::variant<Resistor, Capacitor, VoltageSource, CurrentSource,
                             BehavioralResistor, BehavioralCurrent>;

const std::string& element_name(const Element& e);
const std::string& element_n_plus(const Element& e);
const std::string& element_n_minus(const Element& e);

enum class NodeDomain { electrical, thermal, ground, external };

struct NodeInfo {
  NodeDomain domain = NodeDomain::external;
  std::optional<std::size_t> grid_index;
  bool operator==(const NodeInfo&) const = default;
};

struct TranDirective {
  double dt = 0.0;
  double tstop = 0.0;
};

struct Netlist {
  std::string title;
  std::vector<Element> elements;
  std::optional<TranDirective> tran;
  std::map<std::string, std::string> options;
  std::map<std::string, NodeInfo> node_table;
};

/// Node naming: E%06d / T%06d for grid node index+1, "0" for ground and
/// X_<name> for external nodes.
std::string electrical_node_name(std::size_t grid_index);
std::string thermal_node_name(std::size_t grid_index);
NodeInfo classify_node(std::string_view name);

/// Rebuilds node_table from the element terminals.
void rebuild_node_table(Netlist& netlist);

struct GenerateOptions {
  std::string title = "fitnet electrothermal netlist";
  std::optional<TranDirective> tran;
};

/// Monolithic electrothermal netlist of the FIT model held by `solver`:
/// per edge an electrical resistor (behavioral when sigma depends on T), an
/// electrical capacitor and a thermal resistor; per node a thermal capacitor
/// and a behavioral Joule-loss source; Dirichlet sources and lumped branches.
/// Zero-valued elements are omitted. Throws Error{missing_ground} without an
/// electrical Dirichlet node.
Netlist generate_netlist(const StaggeredGrid& grid, const MaterialModel& materials,
                         const MaterialMatrices& matrices, const BoundaryConditions& bcs,
                         const GenerateOptions& options = {});

/// Expression for R_j(T_bar) of a conducting real edge (a literal when no
/// touching cell has a temperature coefficient).
Expression edge_resistance_expression(const StaggeredGrid& grid, const MaterialModel& materials,
                                      const MaterialMatrices& matrices, std::size_t edge);

/// Deterministic text in the netlist dialect.
std::string emit(const Netlist& netlist);

/// Throws ParseError with the offending line number.
Netlist parse_netlist(std::string_view text);

/// Same cards in the same order with values equal within `rel_tol`.
bool equivalent(const Netlist& a, const Netlist& b, double rel_tol);

}  // namespace fitnet
