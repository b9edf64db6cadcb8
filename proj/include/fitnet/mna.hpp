#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fitnet/expression.hpp"
#include "fitnet/field_solver.hpp"
#include "fitnet/grid.hpp"
#include "fitnet/netlist.hpp"
#include "fitnet/trace.hpp"

namespace fitnet {

enum class Integrator { backward_euler, trapezoidal };

struct MnaOptions {
  Integrator integrator = Integrator::backward_euler;
  NewtonOptions newton;
};

/// Modified nodal analysis system of a netlist. Unknowns are the non-ground
/// node voltages followed by one current per voltage source; the i-th source
/// current flows from n_plus through the source to n_minus.
///
/// Residual: C dx/dt + f(x, t) = 0 where f collects resistor, source and
/// behavioral branch currents (KCL rows) and the source constraint rows.
class MnaSystem {
 public:
  /// Throws Error{missing_ground} when no element touches node "0".
  static MnaSystem assemble(const Netlist& netlist);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t node_count() const noexcept { return node_names_.size(); }
  const std::map<std::string, std::size_t>& node_index() const noexcept { return node_index_; }
  const std::map<std::string, std::size_t>& vsrc_index() const noexcept { return vsrc_index_; }
  const std::vector<std::string>& node_names() const noexcept { return node_names_; }
  const std::map<std::string, NodeInfo>& node_table() const noexcept { return node_table_; }
  std::size_t card_count() const noexcept { return card_count_; }

  /// Floating subnetworks without a path to ground (reported, not fatal).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// Constant capacitance matrix C (dimension x dimension).
  SparseMatrix capacitance_matrix() const;

  /// df/dx at x restricted to the node block (node_count x node_count):
  /// the conductance matrix of the circuit linearised at x.
  SparseMatrix conductance_matrix(const Vector& x) const;

  /// f(x, t) with optional Jacobian df/dx and per-row sums of |terms|.
  void static_residual(const Vector& x, double t, Vector& f, SparseMatrix* jacobian,
                       Vector* scale = nullptr) const;

  /// Unknown vector at t: zero except nodes tied to ground by a voltage source.
  Vector initial_state(double t = 0.0) const;

  /// Values of every behavioral current source at x, keyed by element name.
  std::map<std::string, double> behavioral_currents(const Vector& x) const;

 private:
  struct Branch {
    int a = -1;  // -1 for ground
    int b = -1;
    double value = 0.0;
  };
  struct Source {
    int a = -1;
    int b = -1;
    Waveform waveform;
    std::size_t row = 0;  // voltage sources: constraint row
  };
  struct Behavioral {
    std::string name;
    int a = -1;
    int b = -1;
    CompiledExpression expr;
    bool is_resistor = false;
  };

  std::size_t dimension_ = 0;
  std::size_t card_count_ = 0;
  std::map<std::string, std::size_t> node_index_;
  std::map<std::string, std::size_t> vsrc_index_;
  std::vector<std::string> node_names_;
  std::map<std::string, NodeInfo> node_table_;
  std::vector<int> row_group_;  // residual-norm group of each row
  std::vector<Branch> resistors_;
  std::vector<Branch> capacitors_;
  std::vector<Source> vsources_;
  std::vector<Source> isources_;
  std::vector<Behavioral> behavioral_;
  std::vector<std::string> warnings_;

  friend TransientTrace solve_transient(const MnaSystem&, double, double, const MnaOptions&,
                                        std::optional<std::size_t>);
  friend double scaled_residual_norm(const MnaSystem&, const Vector&, const Vector&);
};

/// Largest per-group ratio max|F| / max(sum |terms|); groups are electrical,
/// thermal and external node rows plus source constraint rows.
double scaled_residual_norm(const MnaSystem& system, const Vector& F, const Vector& scale);

/// Fixed-step transient over t = k*dt. Electrical/thermal grid nodes are
/// mapped back to canonical grid indices (potentials, temperature rises and
/// behavioral loss currents); `grid_nodes` defaults to the largest index + 1.
/// Throws NoConvergence or Error{singular_system}.
TransientTrace solve_transient(const MnaSystem& system, double dt, double tstop,
                               const MnaOptions& options = {},
                               std::optional<std::size_t> grid_nodes = std::nullopt);

}  // namespace fitnet
