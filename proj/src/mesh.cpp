#include "aggresim/mesh.hpp"

#include <cmath>
#include <string>

#include "aggresim/error.hpp"

namespace aggresim {

QuadratureRule gauss_rule(int order) {
  std::vector<double> x, w;
  if (order == 2) {
    const double a = 1.0 / std::sqrt(3.0);
    x = {-a, a};
    w = {1.0, 1.0};
  } else if (order == 3) {
    const double a = std::sqrt(0.6);
    x = {-a, 0.0, a};
    w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  } else {
    throw InvalidArgument("gauss_rule: unsupported order " + std::to_string(order) + " (expected 2 or 3)");
  }
  QuadratureRule rule;
  for (std::size_t j = 0; j < x.size(); ++j)
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.points.emplace_back(x[i], x[j]);
      rule.weights.push_back(w[i] * w[j]);
    }
  return rule;
}

const std::array<Vec2, 9>& local_node_coords() {
  static const std::array<Vec2, 9> coords = {Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1),  Vec2(-1, 1), Vec2(0, -1),
                                             Vec2(1, 0),   Vec2(0, 1),  Vec2(-1, 0), Vec2(0, 0)};
  return coords;
}

namespace {

// 1D quadratic Lagrange basis on {-1, 0, 1}, indexed by the node coordinate.
double lagrange2(int node, double t) {
  switch (node) {
    case -1: return 0.5 * t * (t - 1.0);
    case 0: return 1.0 - t * t;
    default: return 0.5 * t * (t + 1.0);
  }
}

double lagrange2_deriv(int node, double t) {
  switch (node) {
    case -1: return t - 0.5;
    case 0: return -2.0 * t;
    default: return t + 0.5;
  }
}

}  // namespace

ShapeValues shape_eval(ShapeFamily family, const Vec2& xi) {
  ShapeValues s;
  const auto& nodes = local_node_coords();
  if (family == ShapeFamily::linear) {
    s.count = 4;
    for (int a = 0; a < 4; ++a) {
      const double sx = nodes[a].x(), sy = nodes[a].y();
      s.value[a] = 0.25 * (1.0 + sx * xi.x()) * (1.0 + sy * xi.y());
      s.grad[a] = Vec2(0.25 * sx * (1.0 + sy * xi.y()), 0.25 * sy * (1.0 + sx * xi.x()));
    }
  } else {
    s.count = 9;
    for (int a = 0; a < 9; ++a) {
      const int nx = static_cast<int>(nodes[a].x()), ny = static_cast<int>(nodes[a].y());
      const double lx = lagrange2(nx, xi.x()), ly = lagrange2(ny, xi.y());
      s.value[a] = lx * ly;
      s.grad[a] = Vec2(lagrange2_deriv(nx, xi.x()) * ly, lx * lagrange2_deriv(ny, xi.y()));
    }
  }
  return s;
}

ShapeTable ShapeTable::build(const QuadratureRule& rule) {
  ShapeTable t;
  t.rule = rule;
  for (const auto& xi : rule.points) {
    t.linear.push_back(shape_eval(ShapeFamily::linear, xi));
    t.quadratic.push_back(shape_eval(ShapeFamily::quadratic, xi));
  }
  return t;
}

Mesh build_periodic_grid(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2)
    throw InvalidArgument("build_periodic_grid: need at least 2 elements per direction, got " + std::to_string(nx) +
                          "x" + std::to_string(ny));
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("build_periodic_grid: domain lengths must be positive");

  Mesh m;
  m.nx = nx;
  m.ny = ny;
  m.domain_size = Vec2(lx, ly);

  const int rx = 2 * nx + 1, ry = 2 * ny + 1;
  const double hx = lx / (2.0 * nx), hy = ly / (2.0 * ny);
  m.node_coords_material.resize(static_cast<std::size_t>(rx * ry));
  m.periodic_master_map.resize(static_cast<std::size_t>(rx * ry));
  for (int j = 0; j < ry; ++j)
    for (int i = 0; i < rx; ++i) {
      const int raw = m.raw_node(i, j);
      m.node_coords_material[raw] = Vec2(i * hx, j * hy);
      m.periodic_master_map[raw] = (j % (2 * ny)) * (2 * nx) + (i % (2 * nx));
    }

  static constexpr int off[9][2] = {{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 0}, {2, 1}, {1, 2}, {0, 1}, {1, 1}};
  for (int ey = 0; ey < ny; ++ey)
    for (int ex = 0; ex < nx; ++ex) {
      std::array<int, 9> conn{};
      for (int a = 0; a < 9; ++a) conn[a] = m.raw_node(2 * ex + off[a][0], 2 * ey + off[a][1]);
      m.elements.push_back(conn);
    }
  return m;
}

int Mesh::corner_index(int unique) const {
  const auto [i, j] = unique_ij(unique);
  if (i % 2 != 0 || j % 2 != 0) return -1;
  return (j / 2) * nx + i / 2;
}

int Mesh::corner_node(int corner) const {
  const int ci = corner % nx, cj = corner / nx;
  return (2 * cj) * (2 * nx) + 2 * ci;
}

Vec2 Mesh::unique_coords(int unique) const {
  const auto [i, j] = unique_ij(unique);
  return node_coords_material[static_cast<std::size_t>(raw_node(i, j))];
}

Vec2 Mesh::periodic_offset(int raw) const {
  return node_coords_material[static_cast<std::size_t>(raw)] - unique_coords(unique_node(raw));
}

std::array<int, 4> Mesh::element_corners(int e) const {
  const auto& conn = elements[static_cast<std::size_t>(e)];
  return {unique_node(conn[0]), unique_node(conn[1]), unique_node(conn[2]), unique_node(conn[3])};
}

DofMap::DofMap(const Mesh& mesh, Model model) : model_(model) {
  const int n = mesh.num_unique_nodes();
  y_.assign(n, -1);
  c_.assign(n, -1);
  p_.assign(n, -1);
  g_.assign(n, -1);
  int next = 0;
  for (int u = 0; u < n; ++u) {
    const bool corner = mesh.is_corner(u);
    if (corner) c_[u] = next++;
    y_[u] = next;
    next += 2;
    if (corner && model == Model::full) {
      p_[u] = next++;
      g_[u] = next;
      next += 2;
    }
  }
  size_ = next;
}

std::vector<int> DofMap::element_dofs(const Mesh& mesh, int e) const {
  std::vector<int> dofs;
  dofs.reserve(static_cast<std::size_t>(element_dof_count()));
  const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
  for (int a = 0; a < 9; ++a)
    for (int comp = 0; comp < 2; ++comp) dofs.push_back(y_raw(mesh, conn[a], comp));
  const auto corners = mesh.element_corners(e);
  for (int a = 0; a < 4; ++a) dofs.push_back(c(corners[a]));
  if (model_ == Model::full) {
    for (int a = 0; a < 4; ++a) dofs.push_back(p(corners[a]));
    for (int a = 0; a < 4; ++a)
      for (int comp = 0; comp < 2; ++comp) dofs.push_back(g(corners[a], comp));
  }
  return dofs;
}

DofMap periodic_dof_numbering(const Mesh& mesh, Model model) { return DofMap(mesh, model); }

}  // namespace aggresim
