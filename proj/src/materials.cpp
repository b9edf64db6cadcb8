#include "fitnet/materials.hpp"

#include <string>

#include "fitnet/error.hpp"

namespace fitnet {

namespace {

struct AxisPiece {
  std::size_t cell;
  double width;
};

// Cells along `a` that touch node index `i`, with the width each contributes
// to the node's dual cell.
std::vector<AxisPiece> pieces_around(const StaggeredGrid& grid, Axis a, std::size_t i) {
  std::vector<AxisPiece> out;
  if (i > 0) out.push_back({i - 1, grid.lower_half_width(a, i)});
  if (i + 1 < grid.count(a)) out.push_back({i, grid.upper_half_width(a, i)});
  return out;
}

void check_property(const Vector& v, std::size_t cells, const char* name) {
  if (static_cast<std::size_t>(v.size()) != cells) {
    throw Error(ErrorCode::invalid_material, std::string(name) + ": expected " +
                                                 std::to_string(cells) + " cells, got " +
                                                 std::to_string(v.size()));
  }
  for (Eigen::Index p = 0; p < v.size(); ++p) {
    if (!(v[p] >= 0.0)) {
      throw Error(ErrorCode::invalid_material,
                  std::string(name) + " is negative in cell " + std::to_string(p));
    }
  }
}

}  // namespace

MaterialModel MaterialModel::uniform(std::size_t cells, double sigma, double eps_r,
                                     double lambda, double rho_c, double alpha) {
  const auto m = static_cast<Eigen::Index>(cells);
  MaterialModel model;
  model.sigma_ref = Vector::Constant(m, sigma);
  model.eps = Vector::Constant(m, kVacuumPermittivity * eps_r);
  model.lambda_th = Vector::Constant(m, lambda);
  model.rho_c = Vector::Constant(m, rho_c);
  model.alpha = Vector::Constant(m, alpha);
  return model;
}

void MaterialModel::validate(const StaggeredGrid& grid) const {
  const std::size_t cells = grid.cell_count();
  check_property(sigma_ref, cells, "sigma");
  check_property(eps, cells, "eps");
  check_property(lambda_th, cells, "lambda");
  check_property(rho_c, cells, "rho_c");
  if (static_cast<std::size_t>(alpha.size()) != cells) {
    throw Error(ErrorCode::invalid_material, "alpha: size mismatch");
  }
  for (Eigen::Index p = 0; p < eps.size(); ++p) {
    if (!(eps[p] > 0.0)) {
      throw Error(ErrorCode::invalid_material,
                  "permittivity must be positive (cell " + std::to_string(p) + ")");
    }
  }
}

std::vector<CellWeight> edge_cell_weights(const StaggeredGrid& grid, std::size_t edge) {
  if (grid.is_phantom(edge)) {
    throw Error(ErrorCode::phantom_edge, "edge " + std::to_string(edge) + " is a phantom edge");
  }
  const Axis a = grid.edge_axis(edge);
  const Axis b = static_cast<Axis>((static_cast<int>(a) + 1) % 3);
  const Axis c = static_cast<Axis>((static_cast<int>(a) + 2) % 3);
  const Index3 ijk = grid.node_ijk(grid.edge_tail(edge));
  const double area = grid.dual_facet_areas()[static_cast<Eigen::Index>(edge)];

  std::vector<CellWeight> out;
  for (const auto& pb : pieces_around(grid, b, ijk[static_cast<int>(b)])) {
    for (const auto& pc : pieces_around(grid, c, ijk[static_cast<int>(c)])) {
      Index3 cell{};
      cell[static_cast<int>(a)] = ijk[static_cast<int>(a)];
      cell[static_cast<int>(b)] = pb.cell;
      cell[static_cast<int>(c)] = pc.cell;
      out.push_back({grid.cell_index(cell[0], cell[1], cell[2]), pb.width * pc.width / area});
    }
  }
  return out;
}

EdgeAverage average_edge_property(const StaggeredGrid& grid, std::span<const double> per_cell,
                                  std::size_t edge) {
  if (per_cell.size() != grid.cell_count()) {
    throw Error(ErrorCode::shape_error, "per-cell array does not match the cell count");
  }
  EdgeAverage avg{0.0, edge_cell_weights(grid, edge)};
  for (const auto& w : avg.weights) avg.value += w.weight * per_cell[w.cell];
  return avg;
}

std::vector<CellWeight> node_cell_weights(const StaggeredGrid& grid, std::size_t node) {
  const Index3 ijk = grid.node_ijk(node);
  const double volume = grid.dual_volumes()[static_cast<Eigen::Index>(node)];
  std::vector<CellWeight> out;
  for (const auto& px : pieces_around(grid, Axis::x, ijk[0])) {
    for (const auto& py : pieces_around(grid, Axis::y, ijk[1])) {
      for (const auto& pz : pieces_around(grid, Axis::z, ijk[2])) {
        out.push_back({grid.cell_index(px.cell, py.cell, pz.cell),
                       px.width * py.width * pz.width / volume});
      }
    }
  }
  return out;
}

MaterialMatrices assemble_material_matrices(const StaggeredGrid& grid,
                                            const MaterialModel& materials) {
  materials.validate(grid);
  const std::size_t ne = grid.edge_count();
  const std::size_t n = grid.node_count();

  MaterialMatrices m;
  m.m_sigma = Vector::Zero(static_cast<Eigen::Index>(ne));
  m.m_eps = Vector::Zero(static_cast<Eigen::Index>(ne));
  m.m_lambda = Vector::Zero(static_cast<Eigen::Index>(ne));
  m.m_rhoc = Vector::Zero(static_cast<Eigen::Index>(n));
  m.sigma_bar_weights.resize(ne);

  for (std::size_t e = 0; e < ne; ++e) {
    if (grid.is_phantom(e)) continue;
    const auto j = static_cast<Eigen::Index>(e);
    const double ratio = grid.dual_facet_areas()[j] / grid.edge_lengths()[j];
    auto weights = edge_cell_weights(grid, e);
    double sigma = 0.0, eps = 0.0, lambda = 0.0;
    for (const auto& w : weights) {
      const auto p = static_cast<Eigen::Index>(w.cell);
      sigma += w.weight * materials.sigma_ref[p];
      eps += w.weight * materials.eps[p];
      lambda += w.weight * materials.lambda_th[p];
    }
    m.m_sigma[j] = sigma * ratio;
    m.m_eps[j] = eps * ratio;
    m.m_lambda[j] = lambda * ratio;
    m.sigma_bar_weights[e] = std::move(weights);
  }

  for (std::size_t i = 0; i < n; ++i) {
    double rhoc = 0.0;
    for (const auto& w : node_cell_weights(grid, i)) {
      rhoc += w.weight * materials.rho_c[static_cast<Eigen::Index>(w.cell)];
    }
    m.m_rhoc[static_cast<Eigen::Index>(i)] =
        rhoc * grid.dual_volumes()[static_cast<Eigen::Index>(i)];
  }
  return m;
}

ConductivityValue conductivity_of_T(const MaterialModel& materials, std::size_t cell, double dT) {
  const auto p = static_cast<Eigen::Index>(cell);
  const double sigma0 = materials.sigma_ref[p];
  if (sigma0 == 0.0) return {0.0, 0.0};
  const double alpha = materials.alpha[p];
  const double factor = 1.0 + alpha * dT;
  if (!(factor > 0.0)) {
    throw Error(ErrorCode::nonphysical_resistivity,
                "resistivity of cell " + std::to_string(cell) + " is not positive at dT=" +
                    std::to_string(dT) + " K");
  }
  const double sigma = sigma0 / factor;
  return {sigma, -sigma * alpha / factor};
}

EdgeConductance edge_conductance(const StaggeredGrid& grid, const MaterialModel& materials,
                                 const MaterialMatrices& matrices, std::size_t edge, double dT) {
  const auto& weights = matrices.sigma_bar_weights.at(edge);
  if (weights.empty()) {
    throw Error(ErrorCode::phantom_edge, "edge " + std::to_string(edge) + " is a phantom edge");
  }
  const auto j = static_cast<Eigen::Index>(edge);
  const double ratio = grid.dual_facet_areas()[j] / grid.edge_lengths()[j];
  EdgeConductance out{0.0, 0.0};
  for (const auto& w : weights) {
    const auto s = conductivity_of_T(materials, w.cell, dT);
    out.g += w.weight * s.sigma;
    out.dg_dT += w.weight * s.dsigma_dT;
  }
  out.g *= ratio;
  out.dg_dT *= ratio;
  return out;
}

double edge_resistance_of_T(const StaggeredGrid& grid, const MaterialModel& materials,
                            std::size_t edge, double dT) {
  const auto weights = edge_cell_weights(grid, edge);
  double sigma_bar = 0.0;
  for (const auto& w : weights) sigma_bar += w.weight * conductivity_of_T(materials, w.cell, dT).sigma;
  if (sigma_bar == 0.0) {
    throw Error(ErrorCode::open_branch, "edge " + std::to_string(edge) + " does not conduct");
  }
  const auto j = static_cast<Eigen::Index>(edge);
  return grid.edge_lengths()[j] / (sigma_bar * grid.dual_facet_areas()[j]);
}

}  // namespace fitnet
