#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fitnet/grid.hpp"
#include "fitnet/materials.hpp"
#include "fitnet/trace.hpp"
#include "fitnet/waveform.hpp"

namespace fitnet {

enum class CouplingMode { lagged, monolithic };

struct NewtonOptions {
  double tol = 1e-10;  // scaled residual
  int max_iter = 25;
};

/// Two-node element outside the grid (a bonding wire, say). It adds an
/// electrical and a thermal conductance between two grid nodes.
struct LumpedBranch {
  std::size_t node_a = 0;
  std::size_t node_b = 0;
  double g_el = 0.0;  // S
  double g_th = 0.0;  // W/K
};

struct BoundaryConditions {
  std::map<std::size_t, Waveform> electric_dirichlet;  // V
  std::map<std::size_t, Waveform> thermal_dirichlet;   // K above T0
  std::vector<LumpedBranch> extra_branches;

  /// Throws Error{singular_system} without electric Dirichlet nodes and
  /// Error{invalid_input} on out-of-range node indices or negative conductances.
  void validate(std::size_t node_count) const;
};

struct FieldState {
  double t = 0.0;
  Vector phi;   // V
  Vector T;     // K above T0
  Vector q_el;  // W per dual cell
};

/// Q_hat = e (.) j. Throws Error{shape_error} on mismatched sizes.
Vector compute_branch_losses(const Vector& e, const Vector& j_current);

/// Q_el = 1/2 D_V P_Q D_hat^-1 Q_hat, with D_hat^-1 taken as zero on phantom edges.
Vector project_losses(const StaggeredGrid& grid, const SparseMatrix& P_Q, const Vector& Q_hat);

/// Backward-Euler reference solver for the coupled FIT system
///   S Meps S^T dPhi/dt + S Msigma(T) S^T Phi = 0
///   Mrhoc dT/dt + S Mlambda S^T T = Q_el(Phi, T)
/// with Dirichlet elimination and optional lumped branches.
class FieldSolver {
 public:
  FieldSolver(StaggeredGrid grid, MaterialModel materials, BoundaryConditions bcs);

  const StaggeredGrid& grid() const noexcept { return grid_; }
  const MaterialModel& materials() const noexcept { return materials_; }
  const BoundaryConditions& boundary_conditions() const noexcept { return bcs_; }
  const IncidenceOperators& operators() const noexcept { return ops_; }
  const MaterialMatrices& matrices() const noexcept { return matrices_; }

  /// Zero potentials and temperature rises, Dirichlet values applied at t = 0.
  FieldState initial_state() const;

  /// Advances `state` by one backward-Euler step of size dt.
  FieldState step(const FieldState& state, double dt, CouplingMode mode,
                  const NewtonOptions& newton = {}, StepInfo* info = nullptr) const;

  /// Fixed-step run over t = k*dt, k = 0..round(tstop/dt).
  TransientTrace run(double dt, double tstop, CouplingMode mode, const NewtonOptions& newton = {},
                     const std::optional<FieldState>& initial = std::nullopt) const;

  /// Operator-product forms of the system matrices (n x n, lumped branches included).
  SparseMatrix electric_capacitance() const;
  SparseMatrix electric_conductance(const Vector& T) const;
  SparseMatrix thermal_capacitance() const;
  SparseMatrix thermal_conductance() const;

  /// Per-edge conductances Msigma(T) with T_bar the mean of the end point rises.
  Vector sigma_conductances(const Vector& T) const;

  /// Q_el for potentials `phi`, with conductances evaluated at `T_sigma`.
  Vector joule_losses(const Vector& phi, const Vector& T_sigma) const;

  /// Full monolithic backward-Euler residual and Jacobian (2n unknowns, Phi
  /// first). Dirichlet rows are included; used for derivative checks.
  void residual(const FieldState& prev, const Vector& phi, const Vector& T, double dt,
                Vector& F, SparseMatrix* jacobian) const;

 private:
  struct Stepper;
  friend struct Stepper;

  StaggeredGrid grid_;
  MaterialModel materials_;
  BoundaryConditions bcs_;
  IncidenceOperators ops_;
  MaterialMatrices matrices_;

  struct EdgeData {
    std::size_t tail;
    std::size_t head;
    std::size_t edge;
    double g_eps;
    double g_lambda;
    double ratio;       // |A| / |L|
    double w_tail;      // |V_tail| / (2 |V_hat|)
    double w_head;
    bool conducting;
  };
  std::vector<EdgeData> edges_;
};

}  // namespace fitnet
