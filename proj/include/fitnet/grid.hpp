#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace fitnet {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class Axis : int { x = 0, y = 1, z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};

using NodeCounts = std::array<std::size_t, 3>;
using AxisSpacings = std::array<std::vector<double>, 3>;
using Index3 = std::array<std::size_t, 3>;

/// Staggered hexahedral primary/dual grid pair with canonical FIT indexing.
///
/// Node (i,j,k) has index i + nx*j + nx*ny*k. The edge along axis `a` that
/// starts at node m has index m + a*n. Edges whose head would leave the grid
/// are "phantom" edges: they keep their slot in every 3n-sized array but have
/// zero length, area and volume.
///
/// Dual quantities are clipped at the domain boundary, so a corner node owns
/// one eighth of its full dual cell.
class StaggeredGrid {
 public:
  /// Throws Error{invalid_geometry} when an axis has fewer than two nodes, a
  /// spacing is not strictly positive, or spacings[a].size() != counts[a]-1.
  StaggeredGrid(const NodeCounts& counts, AxisSpacings spacings);

  /// Equidistant grid spanning `extent` meters along each axis.
  static StaggeredGrid uniform(const NodeCounts& counts, const std::array<double, 3>& extent);

  const NodeCounts& node_counts() const noexcept { return counts_; }
  std::size_t count(Axis a) const noexcept { return counts_[static_cast<int>(a)]; }
  const std::vector<double>& spacings(Axis a) const noexcept {
    return spacings_[static_cast<int>(a)];
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return 3 * n_; }
  std::size_t cell_count() const noexcept;

  std::size_t node_index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + counts_[0] * (j + counts_[1] * k);
  }
  std::size_t node_index(const Index3& ijk) const noexcept {
    return node_index(ijk[0], ijk[1], ijk[2]);
  }
  Index3 node_ijk(std::size_t node) const noexcept;

  std::size_t cell_index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + (counts_[0] - 1) * (j + (counts_[1] - 1) * k);
  }
  Index3 cell_ijk(std::size_t cell) const noexcept;

  std::size_t edge_index(Axis a, std::size_t node) const noexcept {
    return node + static_cast<std::size_t>(a) * n_;
  }
  Axis edge_axis(std::size_t edge) const noexcept { return static_cast<Axis>(edge / n_); }
  std::size_t edge_tail(std::size_t edge) const noexcept { return edge % n_; }
  /// Head node of a real edge; std::nullopt for phantom edges.
  std::optional<std::size_t> edge_head(std::size_t edge) const noexcept;
  bool is_phantom(std::size_t edge) const noexcept;

  /// Coordinate of node `i` along axis `a` (origin at 0).
  double position(Axis a, std::size_t i) const noexcept {
    return coords_[static_cast<int>(a)][i];
  }
  double extent(Axis a) const noexcept { return coords_[static_cast<int>(a)].back(); }

  /// Part of the dual cell of node index `i` lying below / above the node along `a`.
  double lower_half_width(Axis a, std::size_t i) const noexcept;
  double upper_half_width(Axis a, std::size_t i) const noexcept;
  double dual_width(Axis a, std::size_t i) const noexcept {
    return lower_half_width(a, i) + upper_half_width(a, i);
  }

  const Vector& edge_lengths() const noexcept { return edge_lengths_; }
  const Vector& dual_facet_areas() const noexcept { return dual_facet_areas_; }
  const Vector& dual_volumes() const noexcept { return dual_volumes_; }
  const Vector& shifted_volumes() const noexcept { return shifted_volumes_; }
  double cell_volume(std::size_t cell) const noexcept;

 private:
  NodeCounts counts_;
  AxisSpacings spacings_;
  std::array<std::vector<double>, 3> coords_;
  std::size_t n_ = 0;
  Vector edge_lengths_;
  Vector dual_facet_areas_;
  Vector dual_volumes_;
  Vector shifted_volumes_;
};

inline StaggeredGrid build_grid(const NodeCounts& counts, AxisSpacings spacings) {
  return StaggeredGrid(counts, std::move(spacings));
}

/// Topological operators of the grid pair. G is 3n x n, S_dual = -G^T, and
/// P_Q maps shifted cells onto the dual cells of the two edge end points.
struct IncidenceOperators {
  SparseMatrix G;
  SparseMatrix S_dual;
  SparseMatrix P_Q;
  std::vector<bool> phantom;
};

IncidenceOperators build_incidence(const StaggeredGrid& grid);

}  // namespace fitnet
