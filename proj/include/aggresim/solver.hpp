#pragma once

#include <Eigen/SparseLU>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "aggresim/assembly.hpp"

namespace aggresim {

struct SolverConfig {
  double dt_init = 0.5;
  double dt_growth = 1.2;
  double dt_shrink = 0.5;
  double dt_min = 1e-4;
  double dt_max = 20.0;
  double newton_tol_abs = 1e-11;
  double newton_tol_rel = 1e-12;
  int newton_max_iter = 15;
  /// A residual that stops decreasing once below newton_stagnation_rel * ||R0||
  /// has reached the rounding floor; the best iterate is accepted. The floor
  /// grows like 1/dt, so a fixed absolute tolerance alone fails at small steps.
  double newton_stagnation_rel = 1e-8;
  int fast_iter_threshold = 4;
  double t_end = 2000.0;
  /// Require every field block to meet the tolerance on its own instead of
  /// applying it to the mixed vector.
  bool scaled_norm = false;

  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct StepReport {
  bool accepted = false;
  int newton_iters = 0;
  std::vector<double> residual_history;
  double dt_used = 0.0;
  /// Why the step failed; empty on success.
  std::string failure;
};

/// Sparse LU with the symbolic analysis cached across calls on one pattern.
class SparseDirectSolver {
 public:
  /// Throws SingularSystem if the factorization fails or the solution misses
  /// the residual bound 1e-10 ||rhs||.
  Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& rhs);

 private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  bool analyzed_ = false;
  Eigen::Index rows_ = -1;
  Eigen::Index nnz_ = -1;
};

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& tangent, const Eigen::VectorXd& rhs);

/// Uniform base density with a relative uniform(-amp, amp) fluctuation per corner node.
struct InitialCondition {
  double base_density = 0.079;
  double amplitude = 0.001;
  std::uint64_t seed = 1;

  bool operator==(const InitialCondition&) const = default;
};

FieldState initialize_state(const Mesh& mesh, const MaterialParams& params, const InitialCondition& ic,
                            int quadrature_points = 9);

/// Throws InadmissibleState naming the first violation: c outside
/// (0, 1/(pi R^2)) at a node, p < 0, or a non-finite value.
void check_admissible(const FieldState& state, const MaterialParams& params, Model model);

/// Global Newton iteration for one backward-Euler step. Failures (iteration
/// limit, increasing residual, inadmissible iterate, singular tangent) come
/// back as a report with accepted = false.
std::pair<FieldState, StepReport> newton_solve(const FieldState& guess, const FieldState& prev, double dt,
                                               const Assembler& assembler, const SolverConfig& config,
                                               SparseDirectSolver* linear = nullptr);

std::pair<FieldState, StepReport> newton_solve(const FieldState& guess, const FieldState& prev, double dt,
                                               const Mesh& mesh, const MaterialParams& params,
                                               const SolverConfig& config, Model model = Model::full);

struct StepInfo {
  int step = 0;
  double time = 0.0;
  StepReport report;
  int rejected_before = 0;
  /// The step landed exactly on one of the requested stop times.
  bool at_stop = false;
};

/// Called after each accepted step; returning false stops the run.
using StepCallback = std::function<bool(const FieldState&, const StepInfo&)>;

struct AdvanceResult {
  FieldState final_state;
  std::vector<StepInfo> steps;
  int rejected = 0;
  bool completed = false;
};

/// Backward-Euler stepping from state_0.time to config.t_end with adaptive dt.
/// Steps are shortened to land exactly on each of `stop_times` (ascending).
/// Throws ConvergenceFailure when a step is rejected at dt_min.
AdvanceResult advance(const FieldState& state_0, const Assembler& assembler, const SolverConfig& config,
                      const StepCallback& callback = {}, const std::vector<double>& stop_times = {});

AdvanceResult advance(const FieldState& state_0, const Mesh& mesh, const MaterialParams& params,
                      const SolverConfig& config, Model model, const StepCallback& callback = {},
                      const std::vector<double>& stop_times = {});

}  // namespace aggresim
