#include "aggresim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "aggresim/error.hpp"

namespace aggresim {

namespace {

constexpr double kPi = std::numbers::pi;

// Fields of one element gathered with periodic offsets applied to y.
struct ElementFields {
  std::array<Vec2, 9> y;
  std::array<double, 4> c{}, p{};
  std::array<Vec2, 4> g;
};

ElementFields gather(const FieldState& s, const Mesh& mesh, int e) {
  ElementFields f;
  const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
  for (int k = 0; k < 9; ++k)
    f.y[k] = s.y[static_cast<std::size_t>(mesh.unique_node(conn[k]))] + mesh.periodic_offset(conn[k]);
  const auto corners = mesh.element_corners(e);
  for (int a = 0; a < 4; ++a) {
    const auto ci = static_cast<std::size_t>(mesh.corner_index(corners[a]));
    f.c[a] = s.c[ci];
    f.p[a] = ci < s.p.size() ? s.p[ci] : 0.0;
    f.g[a] = ci < s.g.size() ? s.g[ci] : Vec2::Zero();
  }
  return f;
}

// Quadrature loop over a structured rectangular grid; f(e, N, dN, M, dM, dV).
template <class Fn>
void for_each_point(const Mesh& mesh, Fn&& fn) {
  static const ShapeTable table = ShapeTable::build(gauss_rule(3));
  const Vec2 h = mesh.element_size();
  const Vec2 scale(2.0 / h.x(), 2.0 / h.y());
  const double det = 0.25 * h.x() * h.y();
  for (int e = 0; e < mesh.num_elements(); ++e)
    for (std::size_t q = 0; q < table.rule.size(); ++q) {
      const ShapeValues& N = table.linear[q];
      const ShapeValues& M = table.quadratic[q];
      std::array<Vec2, 4> dN;
      std::array<Vec2, 9> dM;
      for (int a = 0; a < 4; ++a) dN[a] = N.grad[a].cwiseProduct(scale);
      for (int k = 0; k < 9; ++k) dM[k] = M.grad[k].cwiseProduct(scale);
      fn(e, N, dN, M, dM, table.rule.weights[q] * det);
    }
}

double wrap(double x, double L) {
  double r = std::fmod(x, L);
  if (r < 0.0) r += L;
  return r;
}

}  // namespace

double total_cell_number(const FieldState& state, const Mesh& mesh) {
  double total = 0.0;
  int cached = -1;
  ElementFields f;
  for_each_point(mesh, [&](int e, const ShapeValues& N, const std::array<Vec2, 4>&, const ShapeValues&,
                           const std::array<Vec2, 9>& dM, double dV) {
    if (e != cached) {
      f = gather(state, mesh, e);
      cached = e;
    }
    Mat2 F = Mat2::Zero();
    for (int k = 0; k < 9; ++k) F += outer(f.y[k], dM[k]);
    double c = 0.0;
    for (int a = 0; a < 4; ++a) c += N.value[a] * f.c[a];
    total += F.determinant() * c * dV;
  });
  return total;
}

DensityExtremes density_extremes(const FieldState& state) {
  if (state.c.empty()) throw InvalidArgument("density_extremes: empty field");
  const auto [lo, hi] = std::minmax_element(state.c.begin(), state.c.end());
  return {*lo, *hi, *hi - *lo};
}

StabilityOnset stability_onset(const MaterialParams& p, double c) {
  if (!(c > 0.0 && c < p.max_density())) throw InvalidArgument("stability_onset: density outside (0, 1/(pi R^2))");
  const double a = kPi * p.R * p.R;
  const double passive = -(1.0 / p.xi) * p.E_mod * a / ((1.0 - c * a) * (1.0 - c * a));
  const double active = c * p.ell0 * p.f_p * p.k_on / (p.k_off * p.xi);
  StabilityOnset s;
  s.value = passive + active;
  s.separates = s.value > 0.0;
  return s;
}

double constraint_violation(const FieldState& state, const Mesh& mesh, Model model) {
  if (model != Model::full || state.g.empty()) return 0.0;
  double sum = 0.0;
  int cached = -1;
  ElementFields f;
  for_each_point(mesh, [&](int e, const ShapeValues& N, const std::array<Vec2, 4>& dN, const ShapeValues&,
                           const std::array<Vec2, 9>& dM, double dV) {
    if (e != cached) {
      f = gather(state, mesh, e);
      cached = e;
    }
    Mat2 F = Mat2::Zero();
    for (int k = 0; k < 9; ++k) F += outer(f.y[k], dM[k]);
    Vec2 h = Vec2::Zero(), g = Vec2::Zero();
    for (int a = 0; a < 4; ++a) {
      h += f.c[a] * dN[a];
      g += N.value[a] * f.g[a];
    }
    const Vec2 w = F.inverse().transpose() * h - g;
    sum += w.squaredNorm() * dV;
  });
  return std::sqrt(sum);
}

Diagnostics compute_diagnostics(const FieldState& state, const Mesh& mesh, Model model) {
  Diagnostics d;
  d.time = state.time;
  d.total_cell_number = total_cell_number(state, mesh);
  const DensityExtremes ex = density_extremes(state);
  d.c_min = ex.c_min;
  d.c_max = ex.c_max;
  d.delta_c = ex.delta_c;
  d.constraint_violation = constraint_violation(state, mesh, model);
  return d;
}

FieldSample sample_fields(const FieldState& state, const Mesh& mesh, const Vec2& X) {
  const Vec2 L = mesh.domain_size;
  const Vec2 h = mesh.element_size();
  const double wx = wrap(X.x(), L.x()), wy = wrap(X.y(), L.y());
  const int ex = std::min(static_cast<int>(wx / h.x()), mesh.nx - 1);
  const int ey = std::min(static_cast<int>(wy / h.y()), mesh.ny - 1);
  const int e = ey * mesh.nx + ex;
  const Vec2 xi(2.0 * (wx - ex * h.x()) / h.x() - 1.0, 2.0 * (wy - ey * h.y()) / h.y() - 1.0);
  const ElementFields f = gather(state, mesh, e);
  const ShapeValues N = shape_eval(ShapeFamily::linear, xi);
  const ShapeValues M = shape_eval(ShapeFamily::quadratic, xi);
  FieldSample s;
  for (int a = 0; a < 4; ++a) {
    s.c += N.value[a] * f.c[a];
    s.p += N.value[a] * f.p[a];
    s.g += N.value[a] * f.g[a];
  }
  const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
  Vec2 u = Vec2::Zero();
  for (int k = 0; k < 9; ++k) u += M.value[k] * (f.y[k] - mesh.node_coords_material[static_cast<std::size_t>(conn[k])]);
  s.u = u;
  s.y = X + u;
  return s;
}

BridgeMeasurement bridge_length(const FieldState& state, const Mesh& mesh, int axis, double midline,
                                double threshold, Frame frame) {
  if (axis != 0 && axis != 1) throw InvalidArgument("bridge_length: axis must be 0 or 1");
  if (state.g.empty()) throw InvalidArgument("bridge_length: state carries no gradient field");
  const int other = 1 - axis;
  const Vec2 L = mesh.domain_size;
  if (midline < 0.0) midline = 0.5 * L(other);

  double gmax = 0.0;
  for (const Vec2& g : state.g) gmax = std::max(gmax, std::abs(g(axis)));
  BridgeMeasurement out;
  if (!(gmax > 0.0)) return out;
  const double level = threshold * gmax;

  // Sample the material line finely enough to resolve each element.
  const int per_element = 16;
  const int n = per_element * (axis == 1 ? 2 * mesh.ny : 2 * mesh.nx);
  std::vector<double> gt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec2 X;
    X(other) = midline;
    X(axis) = L(axis) * i / n;
    const FieldSample s = sample_fields(state, mesh, X);
    gt[static_cast<std::size_t>(i)] = s.g(axis);
  }
  // Strongest sample of each lobe on the line.
  int lo = -1, hi = -1;
  for (int i = 0; i < n; ++i) {
    const double v = gt[static_cast<std::size_t>(i)];
    if (v >= level && (lo < 0 || v > gt[static_cast<std::size_t>(lo)])) lo = i;
    if (-v >= level && (hi < 0 || v < gt[static_cast<std::size_t>(hi)])) hi = i;
  }
  if (lo < 0 || hi < 0) return out;
  // g is nodal and piecewise linear along the line, so its extremum sits on a
  // node. A parabola through the node and its neighbours places the locus
  // between nodes; otherwise h jumps by a node spacing as the front moves.
  const int nodes = axis == 1 ? mesh.ny : mesh.nx;
  const int stride = n / nodes;
  auto refine = [&](int i, double sign) {
    const int k = (i + stride / 2) / stride;
    auto at = [&](int j) { return sign * gt[static_cast<std::size_t>(((j % nodes + nodes) % nodes) * stride)]; };
    const double gm = at(k - 1), g0 = at(k), gp = at(k + 1);
    const double curv = gm - 2.0 * g0 + gp;
    double delta = curv < 0.0 ? 0.5 * (gm - gp) / curv : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    Vec2 X;
    X(other) = midline;
    X(axis) = wrap(L(axis) * (k + delta) / nodes, L(axis));
    return frame == Frame::spatial ? sample_fields(state, mesh, X).y : X;
  };
  out.lower = refine(lo, 1.0);
  out.upper = refine(hi, -1.0);
  // Density rises across the lower locus and falls across the upper one; the
  // dense side runs from lo upward to hi, wrapping periodically.
  double d = out.upper(axis) - out.lower(axis);
  if (d < 0.0) d += L(axis);
  out.detected = true;
  out.h = d;
  return out;
}

Vec2 periodic_centroid(const FieldState& state, const Mesh& mesh) {
  const Vec2 L = mesh.domain_size;
  std::complex<double> z[2] = {0.0, 0.0};
  double mass = 0.0;
  int cached = -1;
  ElementFields f;
  for_each_point(mesh, [&](int e, const ShapeValues& N, const std::array<Vec2, 4>&, const ShapeValues& M,
                           const std::array<Vec2, 9>& dM, double dV) {
    if (e != cached) {
      f = gather(state, mesh, e);
      cached = e;
    }
    Mat2 F = Mat2::Zero();
    Vec2 x = Vec2::Zero();
    for (int k = 0; k < 9; ++k) {
      F += outer(f.y[k], dM[k]);
      x += M.value[k] * f.y[k];
    }
    double c = 0.0;
    for (int a = 0; a < 4; ++a) c += N.value[a] * f.c[a];
    const double w = F.determinant() * c * dV;
    mass += w;
    for (int i = 0; i < 2; ++i) z[i] += w * std::polar(1.0, 2.0 * kPi * x(i) / L(i));
  });
  Vec2 centroid = 0.5 * L;
  for (int i = 0; i < 2; ++i) {
    if (std::abs(z[i]) <= 1e-12 * std::abs(mass)) continue;
    centroid(i) = wrap(std::arg(z[i]) * L(i) / (2.0 * kPi), L(i));
  }
  return centroid;
}

RecenterResult recenter_periodic(const FieldState& state, const Mesh& mesh) {
  const Vec2 L = mesh.domain_size;
  const Vec2 centroid = periodic_centroid(state, mesh);
  RecenterResult out;
  for (int i = 0; i < 2; ++i) {
    double s = 0.5 * L(i) - centroid(i);
    s -= L(i) * std::round(s / L(i));
    // Sub-rounding shifts come from round-off in the phase of a centered field.
    if (std::abs(s) < 1e-9 * L(i)) s = 0.0;
    out.shift(i) = s;
  }
  out.state = state;
  out.state.S_a.assign(state.S_a.size(), Mat2::Zero());
  if (out.shift.isZero()) return out;
  // The new configuration is the old one translated by the shift:
  // y'(X) = y(X - s) + s, all other fields pulled back the same way.
  for (int n = 0; n < mesh.num_unique_nodes(); ++n) {
    const Vec2 X = mesh.unique_coords(n);
    const FieldSample f = sample_fields(state, mesh, X - out.shift);
    out.state.y[static_cast<std::size_t>(n)] = X + f.u;
  }
  for (int a = 0; a < mesh.num_corner_nodes(); ++a) {
    const Vec2 X = mesh.unique_coords(mesh.corner_node(a));
    const FieldSample f = sample_fields(state, mesh, X - out.shift);
    const auto idx = static_cast<std::size_t>(a);
    out.state.c[idx] = f.c;
    if (idx < out.state.p.size()) out.state.p[idx] = f.p;
    if (idx < out.state.g.size()) out.state.g[idx] = f.g;
  }
  return out;
}

}  // namespace aggresim
