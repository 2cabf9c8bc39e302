#include "aggresim/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "aggresim/error.hpp"

namespace aggresim {

void SolverConfig::validate() const {
  if (!(dt_shrink > 0.0 && dt_shrink < 1.0)) throw InvalidArgument("dt_shrink must lie in (0, 1)");
  if (!(dt_growth > 1.0)) throw InvalidArgument("dt_growth must exceed 1");
  if (!(dt_min > 0.0)) throw InvalidArgument("dt_min must be positive");
  if (!(dt_min <= dt_init && dt_init <= dt_max)) throw InvalidArgument("dt_min <= dt_init <= dt_max violated");
  if (!(newton_tol_abs > 0.0) || !(newton_tol_rel > 0.0)) throw InvalidArgument("Newton tolerances must be positive");
  if (newton_max_iter < 1) throw InvalidArgument("newton_max_iter must be at least 1");
  if (!(newton_stagnation_rel >= 0.0 && newton_stagnation_rel < 1.0))
    throw InvalidArgument("newton_stagnation_rel must lie in [0, 1)");
  if (fast_iter_threshold < 0) throw InvalidArgument("fast_iter_threshold must be non-negative");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be non-negative");
}

Eigen::VectorXd SparseDirectSolver::solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& rhs) {
  if (a.rows() != a.cols() || a.rows() != rhs.size()) throw InvalidArgument("linear_solve: dimension mismatch");
  if (!analyzed_ || a.rows() != rows_ || a.nonZeros() != nnz_) {
    lu_.analyzePattern(a);
    analyzed_ = true;
    rows_ = a.rows();
    nnz_ = a.nonZeros();
  }
  lu_.factorize(a);
  if (lu_.info() != Eigen::Success) throw SingularSystem("linear_solve: singular matrix (" + lu_.lastErrorMessage() + ")");
  Eigen::VectorXd x = lu_.solve(rhs);
  const double bound = 1e-10 * rhs.norm();
  double res = (a * x - rhs).norm();
  // One step of iterative refinement before giving up.
  if (res > bound) {
    x -= lu_.solve(a * x - rhs);
    res = (a * x - rhs).norm();
  }
  if (!x.allFinite() || res > bound) {
    std::ostringstream msg;
    msg << "linear_solve: near-singular matrix, residual " << res << " exceeds " << bound;
    throw SingularSystem(msg.str());
  }
  return x;
}

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& tangent, const Eigen::VectorXd& rhs) {
  SparseDirectSolver s;
  return s.solve(tangent, rhs);
}

FieldState initialize_state(const Mesh& mesh, const MaterialParams& params, const InitialCondition& ic,
                            int quadrature_points) {
  if (!(ic.base_density > 0.0 && ic.base_density < params.max_density())) {
    std::ostringstream msg;
    msg << "initial density " << ic.base_density << " outside (0, " << params.max_density() << ")";
    throw InvalidArgument(msg.str());
  }
  if (!(ic.amplitude >= 0.0 && ic.amplitude < 1.0)) throw InvalidArgument("perturbation amplitude must lie in [0, 1)");
  FieldState s = reference_state(mesh, quadrature_points);
  std::mt19937_64 rng(ic.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& c : s.c) c = ic.base_density * (1.0 + ic.amplitude * dist(rng));
  for (double c : s.c)
    if (!(c < params.max_density())) throw InvalidArgument("perturbed initial density exceeds the packing bound");
  return s;
}

void check_admissible(const FieldState& state, const MaterialParams& params, Model model) {
  const double cmax = params.max_density();
  for (std::size_t i = 0; i < state.c.size(); ++i) {
    if (!(state.c[i] > 0.0 && state.c[i] < cmax)) {
      std::ostringstream msg;
      msg << "density " << state.c[i] << " at corner " << i << " outside (0, " << cmax << ")";
      throw InadmissibleState(msg.str());
    }
  }
  for (const Vec2& y : state.y)
    if (!y.allFinite()) throw InadmissibleState("non-finite deformation");
  if (model != Model::full) return;
  for (std::size_t i = 0; i < state.p.size(); ++i)
    if (!(state.p[i] >= 0.0)) {
      std::ostringstream msg;
      msg << "negative bound pili density " << state.p[i] << " at corner " << i;
      throw InadmissibleState(msg.str());
    }
  for (const Vec2& g : state.g)
    if (!g.allFinite()) throw InadmissibleState("non-finite gradient field");
}

namespace {

bool converged_blocks(const Eigen::VectorXd& r, const Eigen::VectorXd& r0, const Assembler& a, const SolverConfig& cfg) {
  const ResidualBlocks b = split_residual(r, a.mesh(), a.dofs());
  const ResidualBlocks b0 = split_residual(r0, a.mesh(), a.dofs());
  auto norm_s = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  auto norm_v = [](const std::vector<Vec2>& v) {
    double s = 0.0;
    for (const Vec2& x : v) s += x.squaredNorm();
    return std::sqrt(s);
  };
  auto ok = [&](double n, double n0) { return n < std::max(cfg.newton_tol_abs, cfg.newton_tol_rel * n0); };
  return ok(norm_s(b.c), norm_s(b0.c)) && ok(norm_v(b.y), norm_v(b0.y)) && ok(norm_s(b.p), norm_s(b0.p)) &&
         ok(norm_v(b.g), norm_v(b0.g));
}

}  // namespace

std::pair<FieldState, StepReport> newton_solve(const FieldState& guess, const FieldState& prev, double dt,
                                               const Assembler& assembler, const SolverConfig& config,
                                               SparseDirectSolver* linear) {
  SparseDirectSolver local_solver;
  SparseDirectSolver& lin = linear != nullptr ? *linear : local_solver;
  StepReport rep;
  rep.dt_used = dt;
  FieldState state = guess;
  state.time = prev.time + dt;
  const DofMap& dofs = assembler.dofs();
  Eigen::VectorXd u = pack(state, assembler.mesh(), dofs);
  Eigen::VectorXd r0;
  std::vector<Mat2> active, previous_active;
  FieldState previous;
  try {
    for (int it = 0;; ++it) {
      GlobalSystem sys = assembler.assemble(state, prev, dt, &active);
      const double norm = sys.residual.norm();
      if (!std::isfinite(norm)) throw InadmissibleState("non-finite residual");
      rep.residual_history.push_back(norm);
      if (it == 0) r0 = sys.residual;
      const bool done = config.scaled_norm ? converged_blocks(sys.residual, r0, assembler, config)
                                           : norm < std::max(config.newton_tol_abs, config.newton_tol_rel * r0.norm());
      if (done) {
        state.S_a = std::move(active);
        check_admissible(state, assembler.params(), assembler.model());
        rep.accepted = true;
        rep.newton_iters = it;
        return {std::move(state), std::move(rep)};
      }
      if (it > 0 && !(norm < rep.residual_history[static_cast<std::size_t>(it - 1)])) {
        const double last = rep.residual_history[static_cast<std::size_t>(it - 1)];
        if (last <= config.newton_stagnation_rel * rep.residual_history.front()) {
          // Rounding floor: fall back to the previous iterate.
          previous.S_a = std::move(previous_active);
          check_admissible(previous, assembler.params(), assembler.model());
          rep.residual_history.pop_back();
          rep.accepted = true;
          rep.newton_iters = it - 1;
          return {std::move(previous), std::move(rep)};
        }
        std::ostringstream msg;
        msg << "residual increased at iteration " << it << " (" << rep.residual_history[static_cast<std::size_t>(it - 1)]
            << " -> " << norm << ")";
        throw ConvergenceFailure(msg.str());
      }
      if (it >= config.newton_max_iter) throw ConvergenceFailure("Newton iteration limit reached");
      previous = state;
      previous_active = active;
      u -= lin.solve(sys.tangent, sys.residual);
      unpack(u, assembler.mesh(), dofs, state);
      rep.newton_iters = it + 1;
    }
  } catch (const Error& e) {
    rep.accepted = false;
    rep.failure = e.what();
  }
  return {std::move(state), std::move(rep)};
}

std::pair<FieldState, StepReport> newton_solve(const FieldState& guess, const FieldState& prev, double dt,
                                               const Mesh& mesh, const MaterialParams& params,
                                               const SolverConfig& config, Model model) {
  const Assembler a(mesh, model, params, AssemblyOptions{});
  return newton_solve(guess, prev, dt, a, config);
}

AdvanceResult advance(const FieldState& state_0, const Assembler& assembler, const SolverConfig& config,
                      const StepCallback& callback, const std::vector<double>& stop_times) {
  config.validate();
  check_admissible(state_0, assembler.params(), assembler.model());
  AdvanceResult out;
  out.final_state = state_0;
  FieldState& current = out.final_state;
  SparseDirectSolver linear;
  double dt = config.dt_init;
  int rejected_in_row = 0;
  // Relative slack so rounding in the accumulated time cannot force a sliver step.
  const double t_eps = 1e-12 * std::max(1.0, config.t_end);
  while (current.time < config.t_end - t_eps) {
    double target = config.t_end;
    for (double ts : stop_times)
      if (ts > current.time + t_eps && ts < target) {
        target = ts;
        break;
      }
    const double remaining = target - current.time;
    const double dt_step = std::min(dt, remaining);
    auto [next, rep] = newton_solve(current, current, dt_step, assembler, config, &linear);
    if (!rep.accepted) {
      ++out.rejected;
      ++rejected_in_row;
      if (dt_step <= config.dt_min * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "time step rejected at dt_min: t = " << current.time << ", dt = " << dt_step
            << ", reason: " << rep.failure << ", residuals:";
        for (double r : rep.residual_history) msg << ' ' << r;
        throw ConvergenceFailure(msg.str());
      }
      dt = std::max(dt_step * config.dt_shrink, config.dt_min);
      continue;
    }
    const bool landed = dt_step >= remaining;
    if (landed) next.time = target;
    current = std::move(next);
    StepInfo info;
    info.step = static_cast<int>(out.steps.size()) + 1;
    info.time = current.time;
    info.report = std::move(rep);
    info.rejected_before = rejected_in_row;
    info.at_stop = landed;
    rejected_in_row = 0;
    if (info.report.newton_iters <= config.fast_iter_threshold) dt = std::min(dt * config.dt_growth, config.dt_max);
    out.steps.push_back(info);
    if (callback && !callback(current, out.steps.back())) return out;
  }
  out.completed = true;
  return out;
}

AdvanceResult advance(const FieldState& state_0, const Mesh& mesh, const MaterialParams& params,
                      const SolverConfig& config, Model model, const StepCallback& callback,
                      const std::vector<double>& stop_times) {
  AssemblyOptions opts;
  opts.threads = threads_from_environment();
  const Assembler a(mesh, model, params, opts);
  return advance(state_0, a, config, callback, stop_times);
}

}  // namespace aggresim
