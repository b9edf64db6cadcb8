#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fitnet/grid.hpp"

namespace fitnet {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

/// Per-primary-cell material data (staircase allocation, isotropic).
///
/// Temperatures handed to the conductivity law are rises above `T0`.
/// `lambda_th` and `rho_c` are temperature independent.
struct MaterialModel {
  Vector sigma_ref;  // S/m at T0
  Vector eps;        // F/m (eps0 * eps_r)
  Vector lambda_th;  // W/K/m
  Vector rho_c;      // J/K/m^3
  Vector alpha;      // 1/K, linear resistivity coefficient
  double T0 = 293.15;

  /// Homogeneous model with `cells` entries of each property.
  static MaterialModel uniform(std::size_t cells, double sigma, double eps_r, double lambda,
                               double rho_c, double alpha = 0.0);

  /// Throws Error{invalid_material} on size mismatch, negative entries or eps <= 0.
  void validate(const StaggeredGrid& grid) const;
};

struct CellWeight {
  std::size_t cell;
  double weight;
};

struct EdgeAverage {
  double value;
  std::vector<CellWeight> weights;
};

/// Primary cells sharing `edge`, weighted by the part of the dual facet each
/// one covers. On an equidistant grid an interior edge gets 1/4 per cell.
/// Throws Error{phantom_edge}.
std::vector<CellWeight> edge_cell_weights(const StaggeredGrid& grid, std::size_t edge);

EdgeAverage average_edge_property(const StaggeredGrid& grid, std::span<const double> per_cell,
                                  std::size_t edge);

/// Diagonals of the FIT material matrices.
struct MaterialMatrices {
  Vector m_sigma;   // 3n, S
  Vector m_eps;     // 3n, F
  Vector m_lambda;  // 3n, W/K
  Vector m_rhoc;    // n, J/K
  std::vector<std::vector<CellWeight>> sigma_bar_weights;  // 3n, empty on phantom edges
};

MaterialMatrices assemble_material_matrices(const StaggeredGrid& grid,
                                            const MaterialModel& materials);

/// Dual-volume weights of the (up to 8) primary cells intersecting the dual cell of `node`.
std::vector<CellWeight> node_cell_weights(const StaggeredGrid& grid, std::size_t node);

struct ConductivityValue {
  double sigma;
  double dsigma_dT;
};

/// sigma_p(dT) = 1 / (rho_0 (1 + alpha dT)) with dT = T_bar - T0.
/// Insulating cells (sigma_ref = 0) return zero for any dT.
/// Throws Error{nonphysical_resistivity} if 1 + alpha dT <= 0.
ConductivityValue conductivity_of_T(const MaterialModel& materials, std::size_t cell, double dT);

inline double evaluate_sigma_of_T(const MaterialModel& materials, std::size_t cell, double dT) {
  return conductivity_of_T(materials, cell, dT).sigma;
}

struct EdgeConductance {
  double g;       // S
  double dg_dT;   // S/K, derivative with respect to the edge mean temperature
};

/// Conductance sigma_bar_j(dT) |A_j| / |L_j| of a real edge. Zero for open edges.
EdgeConductance edge_conductance(const StaggeredGrid& grid, const MaterialModel& materials,
                                 const MaterialMatrices& matrices, std::size_t edge, double dT);

/// R_j(dT) = |L_j| / (sigma_bar_j(dT) |A_j|). Throws Error{open_branch} when
/// sigma_bar_j vanishes and Error{phantom_edge} on phantom edges.
double edge_resistance_of_T(const StaggeredGrid& grid, const MaterialModel& materials,
                            std::size_t edge, double dT);

}  // namespace fitnet
