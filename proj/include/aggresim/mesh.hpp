#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "aggresim/tensor.hpp"

namespace aggresim {

enum class ShapeFamily { linear, quadratic };

struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Tensor-product Gauss-Legendre rule on [-1,1]^2; order in {2, 3}.
QuadratureRule gauss_rule(int order);

/// Shape values and reference gradients at one point. Linear family fills the
/// first 4 entries, quadratic all 9.
struct ShapeValues {
  int count = 0;
  std::array<double, 9> value{};
  std::array<Vec2, 9> grad{};
};

/// Local node ordering: corners counterclockwise from (-1,-1), then edge
/// midpoints (bottom, right, top, left), then the center.
ShapeValues shape_eval(ShapeFamily family, const Vec2& xi);

/// Reference coordinates of the 9 local nodes.
const std::array<Vec2, 9>& local_node_coords();

/// Shape data tabulated once per quadrature point.
struct ShapeTable {
  QuadratureRule rule;
  std::vector<ShapeValues> linear;
  std::vector<ShapeValues> quadratic;

  static ShapeTable build(const QuadratureRule& rule);
};

/// Periodic structured grid of 9-node quadrilaterals.
///
/// Raw nodes form a (2nx+1) x (2ny+1) lattice with unwrapped material
/// coordinates; nodes on the right/top boundary are slaves of the matching
/// left/bottom node. Unique nodes are the masters, numbered
/// j * (2nx) + i over 0 <= i < 2nx, 0 <= j < 2ny. Corner nodes (even i, j)
/// carry the linear fields.
class Mesh {
 public:
  int nx = 0, ny = 0;
  Vec2 domain_size{0.0, 0.0};

  /// Material coordinates of every raw node.
  std::vector<Vec2> node_coords_material;
  /// Raw node -> unique (master) node; masters map to the unique index of
  /// themselves, so the map is idempotent by construction.
  std::vector<int> periodic_master_map;
  /// Element connectivity over raw nodes, local ordering per shape_eval.
  std::vector<std::array<int, 9>> elements;

  int raw_nodes_x() const { return 2 * nx + 1; }
  int raw_node(int i, int j) const { return j * raw_nodes_x() + i; }

  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_unique_nodes() const { return 4 * nx * ny; }
  int num_corner_nodes() const { return nx * ny; }
  Vec2 element_size() const { return {domain_size.x() / nx, domain_size.y() / ny}; }

  int unique_node(int raw) const { return periodic_master_map[static_cast<std::size_t>(raw)]; }
  /// Unique node -> lattice indices (i, j).
  std::array<int, 2> unique_ij(int unique) const { return {unique % (2 * nx), unique / (2 * nx)}; }
  bool is_corner(int unique) const {
    const auto [i, j] = unique_ij(unique);
    return i % 2 == 0 && j % 2 == 0;
  }
  /// Unique node -> position in the corner set, or -1.
  int corner_index(int unique) const;
  /// Corner-set index -> unique node.
  int corner_node(int corner) const;

  /// Material coordinates of a unique node (the master location).
  Vec2 unique_coords(int unique) const;
  /// Periodic shift from the master to a raw node: X_raw - X_master.
  Vec2 periodic_offset(int raw) const;

  /// Unique corner nodes of element e, local order 0..3.
  std::array<int, 4> element_corners(int e) const;
};

/// Rejects nx or ny < 2 and non-positive lengths with InvalidArgument.
Mesh build_periodic_grid(int nx, int ny, double lx, double ly);

/// Which fields are present in the system.
enum class Model { full, passive_only };

/// Global numbering, block-by-node over unique nodes: [c, y_x, y_y, p, g_x, g_y]
/// on corner nodes ([c, y_x, y_y] in passive-only mode) and [y_x, y_y] on
/// the remaining quadratic nodes.
class DofMap {
 public:
  DofMap() = default;
  DofMap(const Mesh& mesh, Model model);

  Model model() const { return model_; }
  int size() const { return size_; }
  bool has_active_fields() const { return model_ == Model::full; }

  // All queries take unique node indices.
  int y(int node, int comp) const { return y_[static_cast<std::size_t>(node)] + comp; }
  int c(int node) const { return c_[static_cast<std::size_t>(node)]; }
  int p(int node) const { return p_[static_cast<std::size_t>(node)]; }
  int g(int node, int comp) const { return g_[static_cast<std::size_t>(node)] + comp; }

  /// y DOF of a raw node (slaves resolve to their master).
  int y_raw(const Mesh& mesh, int raw, int comp) const { return y(mesh.unique_node(raw), comp); }

  /// Element DOF list in element-local order:
  /// [y(0..8) x 2 | c(0..3) | p(0..3) | g(0..3) x 2]; passive-only stops after c.
  std::vector<int> element_dofs(const Mesh& mesh, int e) const;
  int element_dof_count() const { return model_ == Model::full ? 34 : 22; }

 private:
  Model model_ = Model::full;
  int size_ = 0;
  std::vector<int> y_, c_, p_, g_;
};

/// Convenience wrapper around DofMap construction.
DofMap periodic_dof_numbering(const Mesh& mesh, Model model = Model::full);

}  // namespace aggresim
