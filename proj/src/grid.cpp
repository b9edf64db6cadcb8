#include "fitnet/grid.hpp"

#include <string>

#include "fitnet/error.hpp"

namespace fitnet {

namespace {

const char* axis_name(int a) { return a == 0 ? "x" : (a == 1 ? "y" : "z"); }

}  // namespace

StaggeredGrid::StaggeredGrid(const NodeCounts& counts, AxisSpacings spacings)
    : counts_(counts), spacings_(std::move(spacings)) {
  for (int a = 0; a < 3; ++a) {
    if (counts_[a] < 2) {
      throw Error(ErrorCode::invalid_geometry,
                  std::string("axis ") + axis_name(a) + " needs at least 2 nodes");
    }
    if (spacings_[a].size() != counts_[a] - 1) {
      throw Error(ErrorCode::invalid_geometry,
                  std::string("axis ") + axis_name(a) + ": expected " +
                      std::to_string(counts_[a] - 1) + " spacings, got " +
                      std::to_string(spacings_[a].size()));
    }
    coords_[a].assign(counts_[a], 0.0);
    for (std::size_t i = 0; i + 1 < counts_[a]; ++i) {
      const double h = spacings_[a][i];
      if (!(h > 0.0)) {
        throw Error(ErrorCode::invalid_geometry,
                    std::string("axis ") + axis_name(a) + ": spacing " + std::to_string(i) +
                        " is not strictly positive");
      }
      coords_[a][i + 1] = coords_[a][i] + h;
    }
  }
  n_ = counts_[0] * counts_[1] * counts_[2];

  edge_lengths_ = Vector::Zero(3 * n_);
  dual_facet_areas_ = Vector::Zero(3 * n_);
  dual_volumes_ = Vector::Zero(n_);
  for (std::size_t m = 0; m < n_; ++m) {
    const Index3 ijk = node_ijk(m);
    double dual[3];
    for (int a = 0; a < 3; ++a) dual[a] = dual_width(static_cast<Axis>(a), ijk[a]);
    dual_volumes_[m] = dual[0] * dual[1] * dual[2];
    for (int a = 0; a < 3; ++a) {
      const std::size_t e = m + a * n_;
      const int b = (a + 1) % 3;
      const int c = (a + 2) % 3;
      // Phantom edges keep zero geometry.
      if (ijk[a] + 1 < counts_[a]) {
        edge_lengths_[e] = spacings_[a][ijk[a]];
        dual_facet_areas_[e] = dual[b] * dual[c];
      }
    }
  }
  shifted_volumes_ = dual_facet_areas_.cwiseProduct(edge_lengths_);
}

StaggeredGrid StaggeredGrid::uniform(const NodeCounts& counts,
                                     const std::array<double, 3>& extent) {
  AxisSpacings spacings;
  for (int a = 0; a < 3; ++a) {
    if (counts[a] < 2) {
      throw Error(ErrorCode::invalid_geometry,
                  std::string("axis ") + axis_name(a) + " needs at least 2 nodes");
    }
    spacings[a].assign(counts[a] - 1, extent[a] / static_cast<double>(counts[a] - 1));
  }
  return StaggeredGrid(counts, std::move(spacings));
}

std::size_t StaggeredGrid::cell_count() const noexcept {
  return (counts_[0] - 1) * (counts_[1] - 1) * (counts_[2] - 1);
}

Index3 StaggeredGrid::node_ijk(std::size_t node) const noexcept {
  const std::size_t i = node % counts_[0];
  const std::size_t rest = node / counts_[0];
  return {i, rest % counts_[1], rest / counts_[1]};
}

Index3 StaggeredGrid::cell_ijk(std::size_t cell) const noexcept {
  const std::size_t cx = counts_[0] - 1;
  const std::size_t cy = counts_[1] - 1;
  const std::size_t i = cell % cx;
  const std::size_t rest = cell / cx;
  return {i, rest % cy, rest / cy};
}

bool StaggeredGrid::is_phantom(std::size_t edge) const noexcept {
  const int a = static_cast<int>(edge / n_);
  const Index3 ijk = node_ijk(edge % n_);
  return ijk[a] + 1 >= counts_[a];
}

std::optional<std::size_t> StaggeredGrid::edge_head(std::size_t edge) const noexcept {
  if (is_phantom(edge)) return std::nullopt;
  const int a = static_cast<int>(edge / n_);
  const std::size_t stride = a == 0 ? 1 : (a == 1 ? counts_[0] : counts_[0] * counts_[1]);
  return edge % n_ + stride;
}

double StaggeredGrid::lower_half_width(Axis a, std::size_t i) const noexcept {
  const auto& h = spacings_[static_cast<int>(a)];
  return i > 0 ? 0.5 * h[i - 1] : 0.0;
}

double StaggeredGrid::upper_half_width(Axis a, std::size_t i) const noexcept {
  const auto& h = spacings_[static_cast<int>(a)];
  return i < h.size() ? 0.5 * h[i] : 0.0;
}

double StaggeredGrid::cell_volume(std::size_t cell) const noexcept {
  const Index3 ijk = cell_ijk(cell);
  return spacings_[0][ijk[0]] * spacings_[1][ijk[1]] * spacings_[2][ijk[2]];
}

IncidenceOperators build_incidence(const StaggeredGrid& grid) {
  const std::size_t n = grid.node_count();
  const std::size_t ne = grid.edge_count();

  IncidenceOperators ops;
  ops.phantom.assign(ne, false);

  std::vector<Eigen::Triplet<double>> g_entries;
  std::vector<Eigen::Triplet<double>> pq_entries;
  g_entries.reserve(2 * ne);
  pq_entries.reserve(2 * ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto head = grid.edge_head(e);
    if (!head) {
      ops.phantom[e] = true;
      continue;
    }
    const auto tail = grid.edge_tail(e);
    const auto row = static_cast<int>(e);
    g_entries.emplace_back(row, static_cast<int>(tail), -1.0);
    g_entries.emplace_back(row, static_cast<int>(*head), 1.0);
    pq_entries.emplace_back(static_cast<int>(tail), row, 1.0);
    pq_entries.emplace_back(static_cast<int>(*head), row, 1.0);
  }

  ops.G.resize(static_cast<Eigen::Index>(ne), static_cast<Eigen::Index>(n));
  ops.G.setFromTriplets(g_entries.begin(), g_entries.end());
  ops.S_dual = -SparseMatrix(ops.G.transpose());
  ops.P_Q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ne));
  ops.P_Q.setFromTriplets(pq_entries.begin(), pq_entries.end());
  return ops;
}

}  // namespace fitnet
