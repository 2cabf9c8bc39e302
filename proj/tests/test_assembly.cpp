#include <gtest/gtest.h>

#include "aggresim/analysis.hpp"
#include "aggresim/assembly.hpp"
#include "aggresim/error.hpp"
#include "support.hpp"

using namespace aggresim;
using namespace testing_support;

namespace {

// Straight-line reference assembler. Shares only the DOF numbering and the
// local active-stress solve with the production code.
Eigen::VectorXd naive_residual(const FieldState& s, const FieldState& sn, double dt, const Mesh& mesh,
                               const MaterialParams& prm, Model model) {
  const DofMap dofs(mesh, model);
  const bool full = model == Model::full;
  Eigen::VectorXd R = Eigen::VectorXd::Zero(dofs.size());
  const double gp[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const int nodes[9][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {0, -1}, {1, 0}, {0, 1}, {-1, 0}, {0, 0}};
  auto L = [](int node, double s) {
    if (node == -1) return 0.5 * s * (s - 1.0);
    if (node == 0) return 1.0 - s * s;
    return 0.5 * s * (s + 1.0);
  };
  auto dL = [](int node, double s) {
    if (node == -1) return s - 0.5;
    if (node == 0) return -2.0 * s;
    return s + 0.5;
  };
  const double hx = mesh.domain_size.x() / mesh.nx, hy = mesh.domain_size.y() / mesh.ny;
  const double pi = std::acos(-1.0);
  const double m = 0.75 * prm.ell0 * prm.ell0;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& conn = mesh.elements[e];
    for (int qi = 0; qi < 3; ++qi)
      for (int qj = 0; qj < 3; ++qj) {
        const double xi = gp[qi], eta = gp[qj];
        const double dV = gw[qi] * gw[qj] * hx * hy / 4.0;
        double N[4], dNx[4], dNy[4], M[9], dMx[9], dMy[9];
        for (int a = 0; a < 4; ++a) {
          const double sx = nodes[a][0], sy = nodes[a][1];
          N[a] = 0.25 * (1 + sx * xi) * (1 + sy * eta);
          dNx[a] = 0.25 * sx * (1 + sy * eta) * 2.0 / hx;
          dNy[a] = 0.25 * sy * (1 + sx * xi) * 2.0 / hy;
        }
        for (int k = 0; k < 9; ++k) {
          M[k] = L(nodes[k][0], xi) * L(nodes[k][1], eta);
          dMx[k] = dL(nodes[k][0], xi) * L(nodes[k][1], eta) * 2.0 / hx;
          dMy[k] = L(nodes[k][0], xi) * dL(nodes[k][1], eta) * 2.0 / hy;
        }
        double F[2][2] = {{0, 0}, {0, 0}}, Fn[2][2] = {{0, 0}, {0, 0}}, v[2] = {0, 0};
        for (int k = 0; k < 9; ++k) {
          const int u = mesh.unique_node(conn[k]);
          const Vec2 X = mesh.node_coords_material[conn[k]];
          const Vec2 Xm = mesh.unique_coords(u);
          const Vec2 y = s.y[u] + (X - Xm);
          const Vec2 yn = sn.y[u] + (X - Xm);
          for (int i = 0; i < 2; ++i) {
            F[i][0] += y(i) * dMx[k];
            F[i][1] += y(i) * dMy[k];
            Fn[i][0] += yn(i) * dMx[k];
            Fn[i][1] += yn(i) * dMy[k];
            v[i] += M[k] * (y(i) - yn(i)) / dt;
          }
        }
        double c = 0, cn = 0, hc[2] = {0, 0}, p = 0, pn = 0, g[2] = {0, 0}, G[2][2] = {{0, 0}, {0, 0}};
        const auto corners = mesh.element_corners(e);
        for (int a = 0; a < 4; ++a) {
          const int ci = mesh.corner_index(corners[a]);
          c += N[a] * s.c[ci];
          cn += N[a] * sn.c[ci];
          hc[0] += dNx[a] * s.c[ci];
          hc[1] += dNy[a] * s.c[ci];
          if (full) {
            p += N[a] * s.p[ci];
            pn += N[a] * sn.p[ci];
            for (int i = 0; i < 2; ++i) {
              g[i] += N[a] * s.g[ci](i);
              G[i][0] += dNx[a] * s.g[ci](i);
              G[i][1] += dNy[a] * s.g[ci](i);
            }
          }
        }
        const double J = F[0][0] * F[1][1] - F[0][1] * F[1][0];
        const double Jn = Fn[0][0] * Fn[1][1] - Fn[0][1] * Fn[1][0];
        const double Fi[2][2] = {{F[1][1] / J, -F[0][1] / J}, {-F[1][0] / J, F[0][0] / J}};
        double Bm[2][2];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) Bm[i][j] = Fi[i][0] * Fi[j][0] + Fi[i][1] * Fi[j][1];
        const double phi = pi * prm.R * prm.R * c;
        const double press = prm.E_mod * phi / (1 - phi);
        // Piola stress P = -press J F^{-T} + penalty + F S^a
        double P[2][2];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) P[i][j] = -press * J * Fi[j][i];
        double qc[2] = {0, 0}, ap = 0, ag[2] = {0, 0};
        if (full) {
          double w[2], a[2];
          for (int i = 0; i < 2; ++i) {
            a[i] = Fi[0][i] * hc[0] + Fi[1][i] * hc[1];
            w[i] = a[i] - g[i];
          }
          double uu[2];
          for (int i = 0; i < 2; ++i) {
            uu[i] = Fi[i][0] * w[0] + Fi[i][1] * w[1];
            qc[i] = prm.lambda_pen * J * uu[i];
            ag[i] = -prm.lambda_pen * J * w[i];
          }
          const double ww = w[0] * w[0] + w[1] * w[1];
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) P[i][j] += prm.lambda_pen * J * (0.5 * ww * Fi[j][i] - a[i] * uu[j]);
          Mat2 Fm, Gm;
          Fm << F[0][0], F[0][1], F[1][0], F[1][1];
          Gm << G[0][0], G[0][1], G[1][0], G[1][1];
          Mat2 Bmat;
          Bmat << Bm[0][0], Bm[0][1], Bm[1][0], Bm[1][1];
          Mat2 Fnm;
          Fnm << Fn[0][0], Fn[0][1], Fn[1][0], Fn[1][1];
          const Mat2 dE = 0.5 * (Fm.transpose() * Fm - Fnm.transpose() * Fnm);
          const Mat2 S_f = pili_formation_stress(c, Vec2(g[0], g[1]), Gm, Fm, J, Bmat, prm);
          // The library tabulates Gauss points with the first coordinate fastest.
          const int qlib = qj * 3 + qi;
          const Mat2 S = active_stress_update(sn.S_a[e * 9 + qlib], dE, S_f, p, dt, prm).S;
          const Mat2 FS = Fm * S;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) P[i][j] += FS(i, j);
          double trGFi = 0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) trGFi += G[i][j] * Fi[j][i];
          const double Q = c * c + m * c * trGFi - m * (g[0] * g[0] + g[1] * g[1]);
          ap = (p - pn) / dt - J * prm.k_on * Q + prm.k_off * p;
        }
        const double ac = (cn * (J - Jn) + J * (c - cn)) / dt;
        for (int a = 0; a < 4; ++a) {
          const int u = corners[a];
          R(dofs.c(u)) += dV * (N[a] * ac + dNx[a] * qc[0] + dNy[a] * qc[1]);
          if (full) {
            R(dofs.p(u)) += dV * N[a] * ap;
            for (int i = 0; i < 2; ++i) R(dofs.g(u, i)) += dV * N[a] * ag[i];
          }
        }
        for (int k = 0; k < 9; ++k) {
          const int u = mesh.unique_node(conn[k]);
          for (int i = 0; i < 2; ++i)
            R(dofs.y(u, i)) += dV * (M[k] * prm.xi * J * c * v[i] + P[i][0] * dMx[k] + P[i][1] * dMy[k]);
        }
      }
  }
  return R;
}

double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

MaterialParams test_params() {
  MaterialParams p;
  p.k_on = 0.05;
  p.f_p = 12.0;
  p.lambda_pen = 2.0;
  return p;
}

FieldState uniform_state(const Mesh& mesh, double c) {
  FieldState s = reference_state(mesh, 9);
  for (double& x : s.c) x = c;
  return s;
}

}  // namespace

TEST(Assembly, StationaryUniformStateHasZeroResidual) {
  const Mesh mesh = build_periodic_grid(3, 3, 12.0, 12.0);
  MaterialParams prm;
  FieldState s = uniform_state(mesh, 0.079);
  for (double& p : s.p) p = prm.k_on * 0.079 * 0.079 / prm.k_off;
  const Assembler a(mesh, Model::full, prm);
  const Eigen::VectorXd r = a.residual(s, s, 0.5);
  EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-13);
  const Assembler ap(mesh, Model::passive_only, prm);
  EXPECT_LT(ap.residual(s, s, 0.5).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Assembly, CellBlockSumIsChangeOfTotalCellNumber) {
  const Mesh mesh = build_periodic_grid(3, 2, 12.0, 8.0);
  std::mt19937_64 rng(7);
  for (double lam : {0.0, 1.0}) {
    MaterialParams prm = test_params();
    prm.lambda_pen = lam;
    const auto pr = random_pair(mesh, rng);
    const auto rc = residual_cell(pr.next, pr.prev, 0.5, mesh, prm);
    double sum = 0.0;
    for (double x : rc) sum += x;
    const double dN = total_cell_number(pr.next, mesh) - total_cell_number(pr.prev, mesh);
    EXPECT_NEAR(sum * 0.5, dN, 1e-12 * total_cell_number(pr.prev, mesh));
  }
}

TEST(Assembly, MatchesNaiveAssemblerOnRandomStates) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  const MaterialParams prm = test_params();
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pr = random_pair(mesh, rng);
    for (Model model : {Model::full, Model::passive_only}) {
      const Assembler a(mesh, model, prm);
      const Eigen::VectorXd r = a.residual(pr.next, pr.prev, 0.5);
      const Eigen::VectorXd ref = naive_residual(pr.next, pr.prev, 0.5, mesh, prm, model);
      EXPECT_LT((r - ref).lpNorm<Eigen::Infinity>(), 1e-12 * std::max(1.0, ref.lpNorm<Eigen::Infinity>()));
      const auto blocks = split_residual(r, mesh, a.dofs());
      const auto ref_blocks = split_residual(ref, mesh, a.dofs());
      for (std::size_t i = 0; i < blocks.c.size(); ++i) EXPECT_NEAR(blocks.c[i], ref_blocks.c[i], 1e-12);
    }
  }
}

TEST(Assembly, BlockFunctionsAgreeWithFullResidual) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  const MaterialParams prm = test_params();
  std::mt19937_64 rng(5);
  const auto pr = random_pair(mesh, rng);
  const Assembler a(mesh, Model::full, prm);
  const auto b = split_residual(a.residual(pr.next, pr.prev, 0.5), mesh, a.dofs());
  const auto rc = residual_cell(pr.next, pr.prev, 0.5, mesh, prm);
  const auto ry = residual_momentum(pr.next, pr.prev, 0.5, mesh, prm);
  const auto rp = residual_pili(pr.next, pr.prev, 0.5, mesh, prm);
  ASSERT_EQ(rc.size(), b.c.size());
  ASSERT_EQ(ry.size(), b.y.size());
  for (std::size_t i = 0; i < rc.size(); ++i) {
    EXPECT_EQ(rc[i], b.c[i]);
    EXPECT_EQ(rp[i], b.p[i]);
  }
  for (std::size_t i = 0; i < ry.size(); ++i) EXPECT_EQ(ry[i], b.y[i]);
}

TEST(Assembly, UniformStateLeavesOnlyBalancedMomentum) {
  const Mesh mesh = build_periodic_grid(4, 3, 16.0, 12.0);
  const MaterialParams prm;
  const FieldState s = uniform_state(mesh, 0.12);
  for (const Vec2& r : residual_momentum(s, s, 0.5, mesh, prm, Model::passive_only)) EXPECT_LT(r.norm(), 1e-13);
}

TEST(Assembly, PiliBlockVanishesAtKineticEquilibrium) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  MaterialParams prm;
  FieldState s = uniform_state(mesh, 0.1);
  const double pstar = prm.k_on * 0.1 * 0.1 / prm.k_off;
  for (double& p : s.p) p = pstar;
  for (double r : residual_pili(s, s, 0.5, mesh, prm)) EXPECT_NEAR(r, 0.0, 1e-15);
  prm.k_on = 0.0;
  for (double& p : s.p) p = 0.0;
  for (double r : residual_pili(s, s, 0.5, mesh, prm)) EXPECT_EQ(r, 0.0);
}

TEST(Assembly, GradientBlockVanishesWhenConstraintHolds) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  std::mt19937_64 rng(3);
  MaterialParams prm = test_params();
  auto pr = random_pair(mesh, rng);
  for (double& c : pr.next.c) c = 0.1;
  for (Vec2& g : pr.next.g) g.setZero();
  for (const Vec2& r : residual_gradient(pr.next, mesh, prm)) EXPECT_LT(r.norm(), 1e-15);
  prm.lambda_pen = 0.0;
  pr = random_pair(mesh, rng);
  for (const Vec2& r : residual_gradient(pr.next, mesh, prm)) EXPECT_EQ(r.norm(), 0.0);
}

TEST(Assembly, TangentMatchesFiniteDifferences) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  const MaterialParams prm = test_params();
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pr = random_pair(mesh, rng);
    for (Model model : {Model::full, Model::passive_only}) {
      const Assembler a(mesh, model, prm);
      const Eigen::MatrixXd K = Eigen::MatrixXd(a.assemble(pr.next, pr.prev, 0.5).tangent);
      const Eigen::MatrixXd Kfd = fd_tangent(a, pr.next, pr.prev, 0.5);
      EXPECT_LT(rel_frobenius(K, Kfd), 1e-6) << "trial " << trial << " model " << static_cast<int>(model);
    }
  }
}

TEST(Assembly, FiniteDifferenceActiveTangentAgreesWithAnalytic) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  const MaterialParams prm = test_params();
  std::mt19937_64 rng(99);
  const auto pr = random_pair(mesh, rng);
  AssemblyOptions fd;
  fd.active_tangent = ActiveTangent::finite_difference;
  const Eigen::MatrixXd Ka = Eigen::MatrixXd(Assembler(mesh, Model::full, prm).assemble(pr.next, pr.prev, 0.5).tangent);
  const Eigen::MatrixXd Kf =
      Eigen::MatrixXd(Assembler(mesh, Model::full, prm, fd).assemble(pr.next, pr.prev, 0.5).tangent);
  EXPECT_LT(rel_frobenius(Kf, Ka), 1e-7);
}

TEST(Assembly, TangentPatternIsSymmetricAndSized) {
  const Mesh mesh = build_periodic_grid(3, 2, 12.0, 8.0);
  std::mt19937_64 rng(1);
  const auto pr = random_pair(mesh, rng);
  const GlobalSystem sys = Assembler(mesh, Model::full, test_params()).assemble(pr.next, pr.prev, 0.5);
  EXPECT_EQ(sys.residual.size(), sys.dof_map.size());
  EXPECT_EQ(sys.tangent.rows(), sys.dof_map.size());
  Eigen::SparseMatrix<double> pattern = sys.tangent;
  for (int k = 0; k < pattern.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(pattern, k); it; ++it) it.valueRef() = 1.0;
  const Eigen::SparseMatrix<double> t = pattern.transpose();
  EXPECT_EQ((pattern - t).norm(), 0.0);
}

TEST(Assembly, CellBlockReducesToMassMatrixWithoutFluxes) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  MaterialParams prm;
  prm.lambda_pen = 0.0;
  prm.k_on = 0.0;
  const double dt = 0.25;
  FieldState s = uniform_state(mesh, 0.1);
  const Assembler a(mesh, Model::full, prm);
  const Eigen::MatrixXd K = Eigen::MatrixXd(a.assemble(s, s, dt).tangent);
  // Consistent bilinear mass matrix of a rectangle, times 1/dt (J = 1).
  const double area = 16.0;
  const int nc = mesh.num_corner_nodes();
  Eigen::MatrixXd Mref = Eigen::MatrixXd::Zero(nc, nc);
  const double local[4][4] = {{4, 2, 1, 2}, {2, 4, 2, 1}, {1, 2, 4, 2}, {2, 1, 2, 4}};
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto corners = mesh.element_corners(e);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        Mref(mesh.corner_index(corners[i]), mesh.corner_index(corners[j])) += area / 36.0 * local[i][j] / dt;
  }
  for (int i = 0; i < nc; ++i)
    for (int j = 0; j < nc; ++j)
      EXPECT_NEAR(K(a.dofs().c(mesh.corner_node(i)), a.dofs().c(mesh.corner_node(j))), Mref(i, j), 1e-13);
}

TEST(Assembly, FrictionBlockIsSymmetricPositiveDefinite) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  std::mt19937_64 rng(8);
  auto pr = random_pair(mesh, rng);
  pr.next.y = pr.prev.y;
  MaterialParams a = test_params(), b = test_params();
  a.xi = 10.0;
  b.xi = 20.0;
  const Assembler A(mesh, Model::passive_only, a), B(mesh, Model::passive_only, b);
  const Eigen::MatrixXd KA = Eigen::MatrixXd(A.assemble(pr.next, pr.prev, 0.5).tangent);
  const Eigen::MatrixXd KB = Eigen::MatrixXd(B.assemble(pr.next, pr.prev, 0.5).tangent);
  std::vector<int> ydofs;
  for (int n = 0; n < mesh.num_unique_nodes(); ++n)
    for (int i = 0; i < 2; ++i) ydofs.push_back(A.dofs().y(n, i));
  const int n = static_cast<int>(ydofs.size());
  Eigen::MatrixXd Fr(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Fr(i, j) = KB(ydofs[i], ydofs[j]) - KA(ydofs[i], ydofs[j]);
  EXPECT_LT((Fr - Fr.transpose()).norm(), 1e-12 * Fr.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Fr + Fr.transpose()));
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Assembly, TranslationLeavesResidualUnchanged) {
  const Mesh mesh = build_periodic_grid(2, 3, 8.0, 12.0);
  std::mt19937_64 rng(17);
  auto pr = random_pair(mesh, rng);
  const Assembler a(mesh, Model::full, test_params());
  const Eigen::VectorXd r0 = a.residual(pr.next, pr.prev, 0.5);
  for (auto* s : {&pr.next, &pr.prev})
    for (Vec2& y : s->y) y += Vec2(3.7, -1.3);
  const Eigen::VectorXd r1 = a.residual(pr.next, pr.prev, 0.5);
  EXPECT_LT((r1 - r0).lpNorm<Eigen::Infinity>(), 1e-12 * std::max(1.0, r0.lpNorm<Eigen::Infinity>()));
}

TEST(Assembly, DeterministicAcrossRunsAndWorkerCounts) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  std::mt19937_64 rng(23);
  const auto pr = random_pair(mesh, rng);
  AssemblyOptions par;
  par.threads = 4;
  const Assembler seq(mesh, Model::full, test_params());
  const Assembler thr(mesh, Model::full, test_params(), par);
  const GlobalSystem s1 = seq.assemble(pr.next, pr.prev, 0.5);
  const GlobalSystem s2 = seq.assemble(pr.next, pr.prev, 0.5);
  const GlobalSystem s3 = thr.assemble(pr.next, pr.prev, 0.5);
  EXPECT_EQ(s1.residual, s2.residual);
  EXPECT_LT((s1.residual - s3.residual).lpNorm<Eigen::Infinity>(), 1e-13);
  EXPECT_LT((Eigen::MatrixXd(s1.tangent) - Eigen::MatrixXd(s3.tangent)).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Assembly, InvertedElementIsReported) {
  const Mesh mesh = build_periodic_grid(2, 2, 8.0, 8.0);
  FieldState s = uniform_state(mesh, 0.1);
  FieldState bad = s;
  bad.y[1] += Vec2(6.0, 0.0);
  const Assembler a(mesh, Model::passive_only, MaterialParams{});
  EXPECT_THROW(a.residual(bad, s, 0.5), InadmissibleState);
}

TEST(Assembly, PackUnpackRoundTrip) {
  const Mesh mesh = build_periodic_grid(3, 2, 12.0, 8.0);
  std::mt19937_64 rng(4);
  const auto pr = random_pair(mesh, rng);
  const DofMap dofs(mesh, Model::full);
  FieldState back = reference_state(mesh, 9);
  unpack(pack(pr.next, mesh, dofs), mesh, dofs, back);
  EXPECT_EQ(back.c, pr.next.c);
  EXPECT_EQ(back.p, pr.next.p);
  for (std::size_t i = 0; i < back.y.size(); ++i) EXPECT_EQ(back.y[i], pr.next.y[i]);
}
