#pragma once

#include "aggresim/tensor.hpp"

namespace aggresim {

/// Physical constants in internal units (um, s, pN).
struct MaterialParams {
  double R = 1.0;           ///< cell radius
  double E_mod = 1.0;       ///< cell bulk modulus
  double xi = 10.0;         ///< substrate friction coefficient
  double k_on = 0.0178;     ///< pili binding rate
  double k_off = 0.01;      ///< pili unbinding rate
  double ell0 = 2.0;        ///< average pili length
  double f_p = 18.0;        ///< pili pair force
  double lambda_pen = 1.0;  ///< gradient-continuity penalty

  /// Densest admissible packing 1/(pi R^2).
  double max_density() const;
  /// Throws InvalidArgument naming the first violated bound.
  void validate() const;

  bool operator==(const MaterialParams&) const = default;
};

// ---------------------------------------------------------------------------
// Pili pair kinetics between two cells at fixed distance l.

/// dn/dt = k_on e^{-l/ell0} / (2 pi ell0^2) - k_off n
double pili_pair_rate(double n, double l, const MaterialParams& params);

/// Closed-form solution with n(0) = 0.
double pili_pair_closed_form(double l, double t, const MaterialParams& params);

// ---------------------------------------------------------------------------
// Passive (excluded-volume) stress.

/// E pi R^2 c / (1 - pi R^2 c); throws InadmissibleState outside [0, 1/(pi R^2)).
double passive_pressure(double c, const MaterialParams& params);
/// d/dc of passive_pressure.
double passive_pressure_deriv(double c, const MaterialParams& params);

/// P^p = -passive_pressure(c) K
Mat2 passive_piola(double c, const Mat2& K, const MaterialParams& params);

// ---------------------------------------------------------------------------
// Pili-formation second Piola-Kirchhoff stress, material form.

/// grad_g holds d g_i / d X_j.
Mat2 pili_formation_stress(double c, const Vec2& g, const Mat2& grad_g, const Mat2& F, double J, const Mat2& B,
                           const MaterialParams& params);

/// Directional derivative of pili_formation_stress along (dc, dg, dgrad_g, dF).
Mat2 pili_formation_stress_deriv(double c, const Vec2& g, const Mat2& grad_g, const Mat2& F, const MaterialParams& params,
                                 double dc, const Vec2& dg, const Mat2& dgrad_g, const Mat2& dF);

/// Spatial (Eulerian) pili-formation Cauchy stress from density, its spatial
/// gradient and Hessian.
Mat2 pili_formation_cauchy(double c, const Vec2& grad_c, const Mat2& hess_c, const MaterialParams& params);

// ---------------------------------------------------------------------------
// Gradient-continuity penalty.

/// psi_2 = 1/2 lambda J |F^{-T} grad_X c - g|^2
double penalty_energy(const Vec2& grad_c, const Vec2& g, const Mat2& F, const MaterialParams& params);

/// P_bar = d psi_2 / dF. The density value does not enter.
Mat2 penalty_stress(double c, const Vec2& grad_c, const Vec2& g, const Mat2& F, double J, const Mat2& B,
                    const MaterialParams& params);

Mat2 penalty_stress_deriv(const Vec2& grad_c, const Vec2& g, const Mat2& F, const MaterialParams& params,
                          const Vec2& dgrad_c, const Vec2& dg, const Mat2& dF);

// ---------------------------------------------------------------------------
// Active stress evolution  dS/dt = -(S:dE/dt) S / (ell0 p0 f_p) + S_f - k_off S.

/// Right-hand side of the evolution law.
Mat2 active_stress_rate(const Mat2& S, const Mat2& E_rate, const Mat2& S_f, double p0, const MaterialParams& params);

/// K^{-1} : rhs for K = beta I^sym + alpha C (x) D (Sherman-Morrison).
/// Throws SingularSystem when beta or beta + alpha D:C vanishes.
Mat2 sherman_morrison_apply(double beta, double alpha, const Mat2& C, const Mat2& D, const Mat2& rhs);

struct ActiveStressOptions {
  double tol_local = 1e-12;
  int max_local = 20;
  double p_floor = 1e-12;
};

struct ActiveStressResult {
  Mat2 S = Mat2::Zero();
  int iterations = 0;
  /// Tangent coefficients of the local residual at the converged S.
  double alpha = 0.0;
  double beta = 0.0;
  /// Bound-pili density actually used (after the floor clamp).
  double p_used = 0.0;
  bool clamped = false;
};

/// Backward-Euler update of the active stress by local Newton iteration.
/// Throws ConvergenceFailure or SingularSystem; the caller rejects the step.
ActiveStressResult active_stress_update(const Mat2& S_n, const Mat2& dE, const Mat2& S_f, double p0, double dt,
                                        const MaterialParams& params, const ActiveStressOptions& opts = {});

/// Residual of the discrete evolution law, used by the local solver and tests.
Mat2 active_stress_residual(const Mat2& S, const Mat2& S_n, const Mat2& dE, const Mat2& S_f, double p_used, double dt,
                            const MaterialParams& params);

/// Sensitivity of the converged update by implicit differentiation:
/// dS = K^{-1} : (dS_f - alpha S (S:d dE) + (alpha / p) S (S:dE) dp).
Mat2 active_stress_deriv(const ActiveStressResult& res, const Mat2& dE, const Mat2& d_dE, const Mat2& dS_f, double dp);

}  // namespace aggresim
