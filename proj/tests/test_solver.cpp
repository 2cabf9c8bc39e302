#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "aggresim/analysis.hpp"
#include "aggresim/error.hpp"
#include "aggresim/solver.hpp"

using namespace aggresim;

namespace {

Eigen::SparseMatrix<double> to_sparse(const Eigen::MatrixXd& a) { return a.sparseView(); }

// Uniform state at the joint fixed point of the pili and active-stress laws.
FieldState stationary_state(const Mesh& mesh, const MaterialParams& p, double c) {
  FieldState s = reference_state(mesh, 9);
  for (auto& v : s.c) v = c;
  for (auto& v : s.p) v = p.k_on * c * c / p.k_off;
  const double kappa = 0.5 * p.f_p * p.k_on * p.ell0;
  for (auto& S : s.S_a) S = kappa * c * c / p.k_off * Mat2::Identity();
  return s;
}

double max_diff(const FieldState& a, const FieldState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.c.size(); ++i) d = std::max(d, std::abs(a.c[i] - b.c[i]));
  for (std::size_t i = 0; i < a.y.size(); ++i) d = std::max(d, (a.y[i] - b.y[i]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST(LinearSolve, IdentityReturnsRhs) {
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(7, -1.0, 2.0);
  Eigen::SparseMatrix<double> I(7, 7);
  I.setIdentity();
  EXPECT_LT((linear_solve(I, b) - b).norm(), 1e-15);
}

TEST(LinearSolve, MatchesDenseSolveOnMassMatrix) {
  const Mesh mesh = build_periodic_grid(2, 2, 4.0, 4.0);
  MaterialParams p;
  p.k_on = 0.0;
  p.f_p = 0.0;
  FieldState s = reference_state(mesh, 9);
  for (auto& c : s.c) c = 0.1;
  const GlobalSystem sys = assemble_passive_only(s, s, 0.5, mesh, p);
  const Eigen::MatrixXd dense(sys.tangent);
  const Eigen::VectorXd b = Eigen::VectorXd::Random(dense.rows());
  const Eigen::VectorXd x = linear_solve(sys.tangent, b);
  const Eigen::VectorXd ref = dense.fullPivLu().solve(b);
  EXPECT_LT((x - ref).norm() / ref.norm(), 1e-12);
  EXPECT_LT((dense * x - b).norm(), 1e-10 * b.norm());
}

TEST(LinearSolve, SingularMatrixThrows) {
  Eigen::MatrixXd a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  EXPECT_THROW(linear_solve(to_sparse(a), Eigen::Vector3d(1, 1, 1)), SingularSystem);
}

TEST(InitialState, ZeroAmplitudeIsUniform) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  const FieldState s = initialize_state(mesh, MaterialParams{}, {0.079, 0.0, 3});
  for (double c : s.c) EXPECT_EQ(c, 0.079);
  for (double p : s.p) EXPECT_EQ(p, 0.0);
  for (const Vec2& g : s.g) EXPECT_EQ(g.norm(), 0.0);
  for (const Mat2& S : s.S_a) EXPECT_EQ(S.norm(), 0.0);
  for (int n = 0; n < mesh.num_unique_nodes(); ++n) EXPECT_EQ(s.y[static_cast<std::size_t>(n)], mesh.unique_coords(n));
}

TEST(InitialState, SeededPerturbationIsReproducibleAndBounded) {
  const Mesh mesh = build_periodic_grid(20, 20, 80.0, 80.0);
  const InitialCondition ic{0.079, 0.001, 7};
  const FieldState a = initialize_state(mesh, MaterialParams{}, ic);
  const FieldState b = initialize_state(mesh, MaterialParams{}, ic);
  EXPECT_EQ(a.c, b.c);
  double mean = 0.0;
  for (double c : a.c) {
    mean += c;
    EXPECT_LE(std::abs(c - 0.079), 0.079 * 0.001 + 1e-17);
  }
  mean /= static_cast<double>(a.c.size());
  EXPECT_NEAR(mean, 0.079, 1e-4);
  EXPECT_LE(density_extremes(a).delta_c, 2 * 0.001 * 0.079);
  const FieldState other = initialize_state(mesh, MaterialParams{}, {0.079, 0.001, 8});
  EXPECT_NE(a.c, other.c);
}

TEST(InitialState, DensityAbovePackingBoundRejected) {
  const Mesh mesh = build_periodic_grid(2, 2, 4.0, 4.0);
  EXPECT_THROW(initialize_state(mesh, MaterialParams{}, {0.4, 0.0, 1}), InvalidArgument);
  EXPECT_THROW(initialize_state(mesh, MaterialParams{}, {0.0, 0.0, 1}), InvalidArgument);
}

TEST(Newton, StationaryStateConvergesImmediately) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  const MaterialParams p;
  const SolverConfig cfg;
  for (Model model : {Model::full, Model::passive_only}) {
    const FieldState s = stationary_state(mesh, p, 0.079);
    const auto [next, rep] = newton_solve(s, s, 0.5, mesh, p, cfg, model);
    EXPECT_TRUE(rep.accepted) << rep.failure;
    EXPECT_LE(rep.newton_iters, 1);
  }
}

TEST(Newton, PassiveLinearRegimeStepIsFast) {
  const Mesh mesh = build_periodic_grid(6, 6, 24.0, 24.0);
  const MaterialParams p;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.001, 1});
  const auto [next, rep] = newton_solve(s, s, 0.5, mesh, p, SolverConfig{}, Model::passive_only);
  ASSERT_TRUE(rep.accepted) << rep.failure;
  EXPECT_LE(rep.newton_iters, 3);
  EXPECT_LT(density_extremes(next).delta_c, density_extremes(s).delta_c);
  for (std::size_t k = 1; k < rep.residual_history.size(); ++k)
    EXPECT_LT(rep.residual_history[k], rep.residual_history[k - 1]);
}

TEST(Advance, StationaryRunGrowsStepToMaximum) {
  const Mesh mesh = build_periodic_grid(3, 3, 12.0, 12.0);
  const MaterialParams p;
  SolverConfig cfg;
  cfg.dt_max = 5.0;
  cfg.t_end = 80.0;
  const FieldState s = stationary_state(mesh, p, 0.079);
  const AdvanceResult r = advance(s, mesh, p, cfg, Model::full);
  ASSERT_TRUE(r.completed);
  EXPECT_EQ(r.rejected, 0);
  for (const auto& st : r.steps) EXPECT_LE(st.report.newton_iters, cfg.fast_iter_threshold);
  double largest = 0.0;
  for (const auto& st : r.steps) largest = std::max(largest, st.report.dt_used);
  EXPECT_DOUBLE_EQ(largest, 5.0);
  EXPECT_NEAR(r.final_state.time, 80.0, 1e-12);
}

TEST(Advance, OversizedStepIsRejectedThenRecovered) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  MaterialParams p;
  SolverConfig cfg;
  cfg.newton_max_iter = 4;
  cfg.dt_init = cfg.dt_max = 1000.0;
  cfg.dt_min = 1e-3;
  cfg.t_end = 1000.0;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.05, 1});
  int rejected_first = -1;
  advance(s, mesh, p, cfg, Model::full, [&](const FieldState&, const StepInfo& info) {
    rejected_first = info.rejected_before;
    return false;
  });
  EXPECT_GE(rejected_first, 1);
}

TEST(Advance, TrajectoriesAreDeterministic) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  const MaterialParams p;
  SolverConfig cfg;
  cfg.t_end = 5.0;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.01, 5});
  const AdvanceResult a = advance(s, mesh, p, cfg, Model::full);
  const AdvanceResult b = advance(s, mesh, p, cfg, Model::full);
  EXPECT_EQ(a.final_state.c, b.final_state.c);
  EXPECT_EQ(a.final_state.y, b.final_state.y);
  EXPECT_EQ(a.final_state.p, b.final_state.p);
  EXPECT_EQ(a.final_state.g, b.final_state.g);
  ASSERT_EQ(a.steps.size(), b.steps.size());
}

TEST(Advance, ConservesCellNumberAndStaysAdmissible) {
  const Mesh mesh = build_periodic_grid(4, 4, 16.0, 16.0);
  const MaterialParams p;
  SolverConfig cfg;
  cfg.t_end = 20.0;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.01, 2});
  for (Model model : {Model::full, Model::passive_only}) {
    const double n0 = total_cell_number(s, mesh);
    advance(s, mesh, p, cfg, model, [&](const FieldState& st, const StepInfo&) {
      EXPECT_NEAR(total_cell_number(st, mesh) / n0 - 1.0, 0.0, 1e-12);
      EXPECT_NO_THROW(check_admissible(st, p, model));
      return true;
    });
  }
}

TEST(Advance, LandsOnStopTimes) {
  const Mesh mesh = build_periodic_grid(3, 3, 12.0, 12.0);
  const MaterialParams p;
  SolverConfig cfg;
  cfg.t_end = 10.0;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.01, 2});
  std::vector<double> hit;
  advance(
      s, mesh, p, cfg, Model::passive_only,
      [&](const FieldState& st, const StepInfo& info) {
        if (info.at_stop) hit.push_back(st.time);
        return true;
      },
      {1.7, 4.0});
  ASSERT_GE(hit.size(), 2u);
  EXPECT_DOUBLE_EQ(hit[0], 1.7);
  EXPECT_DOUBLE_EQ(hit[1], 4.0);
}

TEST(Advance, BackwardEulerIsFirstOrder) {
  const Mesh mesh = build_periodic_grid(4, 4, 8.0, 8.0);
  const MaterialParams p;
  const FieldState s = initialize_state(mesh, p, {0.079, 0.1, 3});
  auto run = [&](double dt) {
    SolverConfig cfg;
    cfg.dt_init = cfg.dt_max = dt;
    cfg.dt_min = dt / 4;
    cfg.t_end = 10.0;
    return advance(s, mesh, p, cfg, Model::passive_only).final_state;
  };
  const FieldState a = run(0.5), b = run(0.25), c = run(0.125);
  const double ratio = max_diff(a, b) / max_diff(b, c);
  EXPECT_GT(ratio, 1.7);
  EXPECT_LT(ratio, 2.3);
}

TEST(SolverConfig, ValidationRejectsInconsistentSteps) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt_growth = 0.9;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SolverConfig{};
  c.dt_min = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = SolverConfig{};
  c.newton_tol_abs = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}
