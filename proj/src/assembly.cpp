#include "aggresim/assembly.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>

#include "aggresim/error.hpp"

namespace aggresim {

namespace {

constexpr int kFull = 34;
constexpr int kInputs = 16;
constexpr int kOutputs = 12;

// Element-local DOF positions.
constexpr int ly(int k, int i) { return 2 * k + i; }
constexpr int lc(int a) { return 18 + a; }
constexpr int lp(int a) { return 22 + a; }
constexpr int lg(int a, int i) { return 26 + 2 * a + i; }

// Point input slots: c | h(2) | F(4) | v(2) | p | g(2) | G(4)
constexpr int in_c = 0, in_h = 1, in_F = 3, in_v = 7, in_p = 9, in_g = 10, in_G = 12;
// Point output slots: a_c | q_c(2) | f_y(2) | P(4) | a_p | a_g(2)
constexpr int out_ac = 0, out_qc = 1, out_fy = 3, out_P = 5, out_ap = 9, out_ag = 10;

using OutVec = Eigen::Matrix<double, kOutputs, 1>;
using PointJac = Eigen::Matrix<double, kOutputs, kInputs>;
using TrialMap = Eigen::Matrix<double, kInputs, kFull>;
using TestMap = Eigen::Matrix<double, kOutputs, kFull>;

struct PointInput {
  double c = 0.0;
  Vec2 h = Vec2::Zero();
  Mat2 F = Mat2::Identity();
  Vec2 v = Vec2::Zero();
  double p = 0.0;
  Vec2 g = Vec2::Zero();
  Mat2 G = Mat2::Zero();
};

struct PointHistory {
  double c_n = 0.0;
  double J_n = 1.0;
  Mat2 E_n = Mat2::Zero();
  double p_n = 0.0;
  Mat2 S_n = Mat2::Zero();
};

struct Direction {
  double dc = 0.0;
  Vec2 dh = Vec2::Zero();
  Mat2 dF = Mat2::Zero();
  Vec2 dv = Vec2::Zero();
  double dp = 0.0;
  Vec2 dg = Vec2::Zero();
  Mat2 dG = Mat2::Zero();
};

Direction unit_direction(int slot) {
  Direction d;
  if (slot == in_c) d.dc = 1.0;
  else if (slot < in_F) d.dh(slot - in_h) = 1.0;
  else if (slot < in_v) d.dF((slot - in_F) / 2, (slot - in_F) % 2) = 1.0;
  else if (slot < in_p) d.dv(slot - in_v) = 1.0;
  else if (slot == in_p) d.dp = 1.0;
  else if (slot < in_G) d.dg(slot - in_g) = 1.0;
  else d.dG((slot - in_G) / 2, (slot - in_G) % 2) = 1.0;
  return d;
}

void put(OutVec& o, int slot, const Vec2& v) { o.segment<2>(slot) = v; }
void put(OutVec& o, int slot, const Mat2& m) { o.segment<4>(slot) = flatten(m); }

struct PointResult {
  OutVec out = OutVec::Zero();
  PointJac D = PointJac::Zero();
  Mat2 S = Mat2::Zero();
};

class PointModel {
 public:
  PointModel(const MaterialParams& params, Model model, const AssemblyOptions& opts, double dt)
      : prm_(params), full_(model == Model::full), opts_(opts), dt_(dt) {}

  PointResult evaluate(const PointInput& x, const PointHistory& hist, bool with_tangent) const {
    PointResult r;
    const QuadratureKinematics kin = derived_measures(x.F);
    const double J = kin.J;
    const Mat2& Fi = kin.Finv;
    const double pi_c = passive_pressure(x.c, prm_);
    const double dpi = passive_pressure_deriv(x.c, prm_);

    r.out(out_ac) = (hist.c_n * (J - hist.J_n) + J * (x.c - hist.c_n)) / dt_;
    put(r.out, out_fy, Vec2(prm_.xi * J * x.c * x.v));
    Mat2 P = -pi_c * kin.K;

    ActiveStressResult act;
    const double lam = prm_.lambda_pen;
    const double m = 0.75 * prm_.ell0 * prm_.ell0;
    const Mat2 dE = kin.E - hist.E_n;
    Vec2 w = Vec2::Zero();
    Vec2 u = Vec2::Zero();
    double Q = 0.0;
    if (full_) {
      w = Fi.transpose() * x.h - x.g;
      u = kin.B * x.h - Fi * x.g;
      put(r.out, out_qc, Vec2(lam * J * u));
      const Mat2 S_f = pili_formation_stress(x.c, x.g, x.G, x.F, J, kin.B, prm_);
      act = active_stress_update(hist.S_n, dE, S_f, x.p, dt_, prm_, opts_.local);
      r.S = act.S;
      P += penalty_stress(x.c, x.h, x.g, x.F, J, kin.B, prm_) + x.F * act.S;
      Q = x.c * x.c + m * x.c * (x.G * Fi).trace() - m * x.g.squaredNorm();
      r.out(out_ap) = (x.p - hist.p_n) / dt_ - J * prm_.k_on * Q + prm_.k_off * x.p;
      put(r.out, out_ag, Vec2(-lam * J * w));
    }
    put(r.out, out_P, P);
    if (!with_tangent) return r;

    for (int slot = 0; slot < kInputs; ++slot) {
      if (!full_ && slot >= in_p) break;
      const Direction d = unit_direction(slot);
      const Mat2 dFi = -Fi * d.dF * Fi;
      const double dJ = J * (Fi * d.dF).trace();
      const Mat2 dK = dJ * Fi.transpose() + J * dFi.transpose();
      OutVec o = OutVec::Zero();
      o(out_ac) = (x.c * dJ + J * d.dc) / dt_;
      put(o, out_fy, Vec2(prm_.xi * ((dJ * x.c + J * d.dc) * x.v + J * x.c * d.dv)));
      Mat2 dP = -dpi * d.dc * kin.K - pi_c * dK;
      if (full_) {
        const Mat2 dB = dFi * Fi.transpose() + Fi * dFi.transpose();
        const Vec2 du = dB * x.h + kin.B * d.dh - dFi * x.g - Fi * d.dg;
        put(o, out_qc, Vec2(lam * (dJ * u + J * du)));
        dP += penalty_stress_deriv(x.h, x.g, x.F, prm_, d.dh, d.dg, d.dF);
        const Mat2 dS = active_sensitivity(x, hist, act, dE, d);
        dP += d.dF * act.S + x.F * dS;
        const double dQ = 2.0 * x.c * d.dc +
                          m * (d.dc * (x.G * Fi).trace() + x.c * ((d.dG * Fi).trace() + (x.G * dFi).trace())) -
                          2.0 * m * x.g.dot(d.dg);
        o(out_ap) = d.dp / dt_ - prm_.k_on * (dJ * Q + J * dQ) + prm_.k_off * d.dp;
        const Vec2 dw = dFi.transpose() * x.h + Fi.transpose() * d.dh - d.dg;
        put(o, out_ag, Vec2(-lam * (dJ * w + J * dw)));
      }
      put(o, out_P, dP);
      r.D.col(slot) = o;
    }
    return r;
  }

 private:
  Mat2 active_update(const PointInput& x, const PointHistory& hist) const {
    const QuadratureKinematics kin = derived_measures(x.F);
    const Mat2 S_f = pili_formation_stress(x.c, x.g, x.G, x.F, kin.J, kin.B, prm_);
    return active_stress_update(hist.S_n, kin.E - hist.E_n, S_f, x.p, dt_, prm_, opts_.local).S;
  }

  Mat2 active_sensitivity(const PointInput& x, const PointHistory& hist, const ActiveStressResult& act,
                          const Mat2& dE, const Direction& d) const {
    if (opts_.active_tangent == ActiveTangent::analytic) {
      const Mat2 dS_f = pili_formation_stress_deriv(x.c, x.g, x.G, x.F, prm_, d.dc, d.dg, d.dG, d.dF);
      const Mat2 d_dE = sym(x.F.transpose() * d.dF);
      return active_stress_deriv(act, dE, d_dE, dS_f, d.dp);
    }
    if (d.dc == 0.0 && d.dF.isZero() && d.dp == 0.0 && d.dg.isZero() && d.dG.isZero()) return Mat2::Zero();
    const double eps = 1e-6;
    auto shifted = [&](double s) {
      PointInput y = x;
      y.c += s * d.dc;
      y.F += s * d.dF;
      y.p += s * d.dp;
      y.g += s * d.dg;
      y.G += s * d.dG;
      return active_update(y, hist);
    };
    return (shifted(eps) - shifted(-eps)) / (2.0 * eps);
  }

  const MaterialParams& prm_;
  bool full_;
  const AssemblyOptions& opts_;
  double dt_;
};

}  // namespace

struct Assembler::ElementOutput {
  Eigen::Matrix<double, kFull, 1> r;
  Eigen::Matrix<double, kFull, kFull, Eigen::RowMajor> k;
};

FieldState reference_state(const Mesh& mesh, int quadrature_points) {
  FieldState s;
  const int nc = mesh.num_corner_nodes();
  const int nu = mesh.num_unique_nodes();
  s.c.assign(static_cast<std::size_t>(nc), 0.0);
  s.p.assign(static_cast<std::size_t>(nc), 0.0);
  s.g.assign(static_cast<std::size_t>(nc), Vec2::Zero());
  s.y.resize(static_cast<std::size_t>(nu));
  for (int n = 0; n < nu; ++n) s.y[static_cast<std::size_t>(n)] = mesh.unique_coords(n);
  s.S_a.assign(static_cast<std::size_t>(mesh.num_elements() * quadrature_points), Mat2::Zero());
  return s;
}

Eigen::VectorXd pack(const FieldState& state, const Mesh& mesh, const DofMap& dofs) {
  Eigen::VectorXd u(dofs.size());
  for (int n = 0; n < mesh.num_unique_nodes(); ++n)
    for (int i = 0; i < 2; ++i) u(dofs.y(n, i)) = state.y[static_cast<std::size_t>(n)](i);
  for (int a = 0; a < mesh.num_corner_nodes(); ++a) {
    const int n = mesh.corner_node(a);
    const auto idx = static_cast<std::size_t>(a);
    u(dofs.c(n)) = state.c[idx];
    if (dofs.has_active_fields()) {
      u(dofs.p(n)) = state.p[idx];
      for (int i = 0; i < 2; ++i) u(dofs.g(n, i)) = state.g[idx](i);
    }
  }
  return u;
}

void unpack(const Eigen::VectorXd& u, const Mesh& mesh, const DofMap& dofs, FieldState& state) {
  if (u.size() != dofs.size()) throw InvalidArgument("unpack: vector length does not match the DOF count");
  state.y.resize(static_cast<std::size_t>(mesh.num_unique_nodes()));
  state.c.resize(static_cast<std::size_t>(mesh.num_corner_nodes()));
  state.p.resize(state.c.size(), 0.0);
  state.g.resize(state.c.size(), Vec2::Zero());
  for (int n = 0; n < mesh.num_unique_nodes(); ++n)
    state.y[static_cast<std::size_t>(n)] = Vec2(u(dofs.y(n, 0)), u(dofs.y(n, 1)));
  for (int a = 0; a < mesh.num_corner_nodes(); ++a) {
    const int n = mesh.corner_node(a);
    const auto idx = static_cast<std::size_t>(a);
    state.c[idx] = u(dofs.c(n));
    if (dofs.has_active_fields()) {
      state.p[idx] = u(dofs.p(n));
      state.g[idx] = Vec2(u(dofs.g(n, 0)), u(dofs.g(n, 1)));
    }
  }
}

ResidualBlocks split_residual(const Eigen::VectorXd& r, const Mesh& mesh, const DofMap& dofs) {
  ResidualBlocks b;
  for (int n = 0; n < mesh.num_unique_nodes(); ++n) b.y.emplace_back(r(dofs.y(n, 0)), r(dofs.y(n, 1)));
  for (int a = 0; a < mesh.num_corner_nodes(); ++a) {
    const int n = mesh.corner_node(a);
    b.c.push_back(r(dofs.c(n)));
    if (dofs.has_active_fields()) {
      b.p.push_back(r(dofs.p(n)));
      b.g.emplace_back(r(dofs.g(n, 0)), r(dofs.g(n, 1)));
    }
  }
  return b;
}

int threads_from_environment() {
  const char* s = std::getenv("AGGRESIM_THREADS");
  if (s == nullptr || *s == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 0) throw InvalidArgument("AGGRESIM_THREADS must be a non-negative integer");
  return static_cast<int>(v);
}

Assembler::Assembler(const Mesh& mesh, Model model, MaterialParams params, AssemblyOptions options)
    : mesh_(&mesh),
      model_(model),
      params_(params),
      options_(options),
      dofs_(mesh, model),
      shapes_(ShapeTable::build(gauss_rule(3))) {
  const int nq = quadrature_points();
  const int ne = mesh.num_elements();
  geometry_.resize(static_cast<std::size_t>(ne * nq));
  for (int e = 0; e < ne; ++e) {
    const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
    for (int q = 0; q < nq; ++q) {
      const ShapeValues& N = shapes_.linear[static_cast<std::size_t>(q)];
      const ShapeValues& M = shapes_.quadratic[static_cast<std::size_t>(q)];
      // Bilinear geometry map from the corner nodes.
      Mat2 jac = Mat2::Zero();
      for (int a = 0; a < 4; ++a)
        jac += outer(mesh.node_coords_material[static_cast<std::size_t>(conn[a])], N.grad[a]);
      const double det = jac.determinant();
      if (!(det > 0.0)) throw InvalidArgument("Assembler: degenerate element geometry");
      const Mat2 jit = jac.inverse().transpose();
      PointGeometry& pg = geometry_[static_cast<std::size_t>(e * nq + q)];
      for (int a = 0; a < 4; ++a) pg.dN[a] = jit * N.grad[a];
      for (int k = 0; k < 9; ++k) pg.dM[k] = jit * M.grad[k];
      pg.dV = shapes_.rule.weights[static_cast<std::size_t>(q)] * det;
    }
  }

  const int nd = dofs_.element_dof_count();
  element_dofs_.resize(static_cast<std::size_t>(ne));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ne * nd * nd));
  for (int e = 0; e < ne; ++e) {
    element_dofs_[static_cast<std::size_t>(e)] = dofs_.element_dofs(mesh, e);
    for (int a : element_dofs_[static_cast<std::size_t>(e)])
      for (int b : element_dofs_[static_cast<std::size_t>(e)]) trip.emplace_back(a, b, 0.0);
  }
  pattern_.resize(dofs_.size(), dofs_.size());
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  scatter_.resize(static_cast<std::size_t>(ne));
  const int* outer_idx = pattern_.outerIndexPtr();
  const int* inner_idx = pattern_.innerIndexPtr();
  for (int e = 0; e < ne; ++e) {
    const auto& ed = element_dofs_[static_cast<std::size_t>(e)];
    auto& map = scatter_[static_cast<std::size_t>(e)];
    map.resize(static_cast<std::size_t>(nd * nd));
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < nd; ++b) {
        const int col = ed[static_cast<std::size_t>(b)];
        const int* first = inner_idx + outer_idx[col];
        const int* last = inner_idx + outer_idx[col + 1];
        const int* it = std::lower_bound(first, last, ed[static_cast<std::size_t>(a)]);
        map[static_cast<std::size_t>(a * nd + b)] = static_cast<int>(it - inner_idx);
      }
  }
}

void Assembler::evaluate_element(int e, const FieldState& next, const FieldState& prev, double dt, bool with_tangent,
                                 ElementOutput& out, Mat2* active_out) const {
  const Mesh& mesh = *mesh_;
  const bool full = model_ == Model::full;
  const auto& conn = mesh.elements[static_cast<std::size_t>(e)];
  std::array<Vec2, 9> y, yn;
  for (int k = 0; k < 9; ++k) {
    const int raw = conn[k];
    const auto n = static_cast<std::size_t>(mesh.unique_node(raw));
    const Vec2 off = mesh.periodic_offset(raw);
    y[k] = next.y[n] + off;
    yn[k] = prev.y[n] + off;
  }
  std::array<double, 4> c{}, cn{}, p{}, pn{};
  std::array<Vec2, 4> g;
  const auto corners = mesh.element_corners(e);
  for (int a = 0; a < 4; ++a) {
    const auto ci = static_cast<std::size_t>(mesh.corner_index(corners[a]));
    c[a] = next.c[ci];
    cn[a] = prev.c[ci];
    if (full) {
      p[a] = next.p[ci];
      pn[a] = prev.p[ci];
      g[a] = next.g[ci];
    } else {
      g[a] = Vec2::Zero();
    }
  }

  out.r.setZero();
  if (with_tangent) out.k.setZero();
  const PointModel model(params_, model_, options_, dt);
  const int nq = quadrature_points();
  for (int q = 0; q < nq; ++q) {
    const PointGeometry& pg = geometry(e, q);
    const ShapeValues& N = shapes_.linear[static_cast<std::size_t>(q)];
    const ShapeValues& M = shapes_.quadratic[static_cast<std::size_t>(q)];

    PointInput x;
    PointHistory hist;
    x.F.setZero();
    Mat2 Fn = Mat2::Zero();
    for (int k = 0; k < 9; ++k) {
      x.F += outer(y[k], pg.dM[k]);
      Fn += outer(yn[k], pg.dM[k]);
      x.v += M.value[k] * (y[k] - yn[k]) / dt;
    }
    for (int a = 0; a < 4; ++a) {
      x.c += N.value[a] * c[a];
      x.h += c[a] * pg.dN[a];
      hist.c_n += N.value[a] * cn[a];
      if (full) {
        x.p += N.value[a] * p[a];
        hist.p_n += N.value[a] * pn[a];
        x.g += N.value[a] * g[a];
        x.G += outer(g[a], pg.dN[a]);
      }
    }
    const QuadratureKinematics kin_n = derived_measures(Fn);
    hist.J_n = kin_n.J;
    hist.E_n = kin_n.E;
    if (full) hist.S_n = prev.S_a[static_cast<std::size_t>(e * nq + q)];

    const PointResult pr = model.evaluate(x, hist, with_tangent);
    if (active_out != nullptr) active_out[q] = pr.S;

    TestMap test = TestMap::Zero();
    for (int a = 0; a < 4; ++a) {
      test(out_ac, lc(a)) = N.value[a];
      for (int j = 0; j < 2; ++j) test(out_qc + j, lc(a)) = pg.dN[a](j);
      test(out_ap, lp(a)) = N.value[a];
      for (int i = 0; i < 2; ++i) test(out_ag + i, lg(a, i)) = N.value[a];
    }
    for (int k = 0; k < 9; ++k)
      for (int i = 0; i < 2; ++i) {
        test(out_fy + i, ly(k, i)) = M.value[k];
        for (int j = 0; j < 2; ++j) test(out_P + flat(i, j), ly(k, i)) = pg.dM[k](j);
      }
    out.r.noalias() += pg.dV * (test.transpose() * pr.out);

    if (!with_tangent) continue;
    TrialMap trial = TrialMap::Zero();
    for (int a = 0; a < 4; ++a) {
      trial(in_c, lc(a)) = N.value[a];
      for (int j = 0; j < 2; ++j) trial(in_h + j, lc(a)) = pg.dN[a](j);
      trial(in_p, lp(a)) = N.value[a];
      for (int i = 0; i < 2; ++i) {
        trial(in_g + i, lg(a, i)) = N.value[a];
        for (int j = 0; j < 2; ++j) trial(in_G + flat(i, j), lg(a, i)) = pg.dN[a](j);
      }
    }
    for (int k = 0; k < 9; ++k)
      for (int i = 0; i < 2; ++i) {
        trial(in_v + i, ly(k, i)) = M.value[k] / dt;
        for (int j = 0; j < 2; ++j) trial(in_F + flat(i, j), ly(k, i)) = pg.dM[k](j);
      }
    const TestMap dtrial = pr.D * trial;
    out.k.noalias() += pg.dV * (test.transpose() * dtrial);
  }
}

void Assembler::run(const FieldState& next, const FieldState& prev, double dt, bool with_tangent, Eigen::VectorXd& r,
                    Eigen::SparseMatrix<double>* k, std::vector<Mat2>* active_out) const {
  if (!(dt > 0.0)) throw InvalidArgument("assembly: dt must be positive");
  const Mesh& mesh = *mesh_;
  const int ne = mesh.num_elements();
  const int nq = quadrature_points();
  const auto nc = static_cast<std::size_t>(mesh.num_corner_nodes());
  if (next.c.size() != nc || prev.c.size() != nc || next.y.size() != static_cast<std::size_t>(mesh.num_unique_nodes()) ||
      prev.y.size() != next.y.size())
    throw InvalidArgument("assembly: state does not match the mesh");
  if (model_ == Model::full &&
      (next.p.size() != nc || next.g.size() != nc || prev.p.size() != nc ||
       prev.S_a.size() != static_cast<std::size_t>(ne * nq)))
    throw InvalidArgument("assembly: state lacks the active fields");
  if (active_out != nullptr) active_out->assign(static_cast<std::size_t>(ne * nq), Mat2::Zero());

  std::vector<ElementOutput> buffers(static_cast<std::size_t>(ne));
  int workers = options_.threads;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, ne);

  auto work = [&](int begin, int end) {
    for (int e = begin; e < end; ++e) {
      Mat2* act = active_out != nullptr ? active_out->data() + static_cast<std::size_t>(e * nq) : nullptr;
      evaluate_element(e, next, prev, dt, with_tangent, buffers[static_cast<std::size_t>(e)], act);
    }
  };
  if (workers <= 1) {
    work(0, ne);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      const int begin = ne * t / workers;
      const int end = ne * (t + 1) / workers;
      pool.emplace_back([&, t, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  // Serial scatter keeps the summation order independent of the worker count.
  const int nd = dofs_.element_dof_count();
  r = Eigen::VectorXd::Zero(dofs_.size());
  if (k != nullptr) {
    *k = pattern_;
    std::fill(k->valuePtr(), k->valuePtr() + k->nonZeros(), 0.0);
  }
  for (int e = 0; e < ne; ++e) {
    const auto& ed = element_dofs_[static_cast<std::size_t>(e)];
    const ElementOutput& eo = buffers[static_cast<std::size_t>(e)];
    for (int a = 0; a < nd; ++a) r(ed[static_cast<std::size_t>(a)]) += eo.r(a);
    if (k == nullptr) continue;
    double* values = k->valuePtr();
    const auto& map = scatter_[static_cast<std::size_t>(e)];
    for (int a = 0; a < nd; ++a)
      for (int b = 0; b < nd; ++b) values[map[static_cast<std::size_t>(a * nd + b)]] += eo.k(a, b);
  }
}

GlobalSystem Assembler::assemble(const FieldState& next, const FieldState& prev, double dt,
                                 std::vector<Mat2>* active_out) const {
  GlobalSystem sys;
  sys.dof_map = dofs_;
  run(next, prev, dt, true, sys.residual, &sys.tangent, active_out);
  return sys;
}

Eigen::VectorXd Assembler::residual(const FieldState& next, const FieldState& prev, double dt,
                                    std::vector<Mat2>* active_out) const {
  Eigen::VectorXd r;
  run(next, prev, dt, false, r, nullptr, active_out);
  return r;
}

namespace {

ResidualBlocks blocks(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                      const MaterialParams& params, Model model) {
  const Assembler a(mesh, model, params);
  return split_residual(a.residual(next, prev, dt), mesh, a.dofs());
}

}  // namespace

std::vector<double> residual_cell(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                  const MaterialParams& params, Model model) {
  return blocks(next, prev, dt, mesh, params, model).c;
}

std::vector<Vec2> residual_momentum(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                    const MaterialParams& params, Model model) {
  return blocks(next, prev, dt, mesh, params, model).y;
}

std::vector<double> residual_pili(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                  const MaterialParams& params) {
  return blocks(next, prev, dt, mesh, params, Model::full).p;
}

std::vector<Vec2> residual_gradient(const FieldState& next, const Mesh& mesh, const MaterialParams& params) {
  // The gradient block involves only the current level; any valid history and dt do.
  return blocks(next, next, 1.0, mesh, params, Model::full).g;
}

GlobalSystem assemble_tangent(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                              const MaterialParams& params, std::vector<Mat2>* active_out) {
  return Assembler(mesh, Model::full, params).assemble(next, prev, dt, active_out);
}

GlobalSystem assemble_passive_only(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                   const MaterialParams& params) {
  return Assembler(mesh, Model::passive_only, params).assemble(next, prev, dt);
}

}  // namespace aggresim
