#include "aggresim/constitutive.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "aggresim/error.hpp"

namespace aggresim {

namespace {

constexpr double kPi = std::numbers::pi;

// Finv of a 2x2 matrix; callers guarantee det > 0.
Mat2 inverse2(const Mat2& F) {
  Mat2 inv;
  inv << F(1, 1), -F(0, 1), -F(1, 0), F(0, 0);
  return inv / F.determinant();
}

double area_fraction(double c, const MaterialParams& p) { return kPi * p.R * p.R * c; }

}  // namespace

double MaterialParams::max_density() const { return 1.0 / (kPi * R * R); }

void MaterialParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be strictly positive");
  };
  positive(R, "R");
  positive(E_mod, "E_mod");
  positive(xi, "xi");
  positive(k_on, "k_on");
  positive(k_off, "k_off");
  positive(ell0, "ell0");
  positive(f_p, "f_p");
  if (!(lambda_pen >= 0.0) || !std::isfinite(lambda_pen)) throw InvalidArgument("lambda_pen must be non-negative");
}

double pili_pair_rate(double n, double l, const MaterialParams& p) {
  return p.k_on * std::exp(-l / p.ell0) / (2.0 * kPi * p.ell0 * p.ell0) - p.k_off * n;
}

double pili_pair_closed_form(double l, double t, const MaterialParams& p) {
  const double steady = p.k_on * std::exp(-l / p.ell0) / (2.0 * kPi * p.ell0 * p.ell0 * p.k_off);
  return steady * (-std::expm1(-p.k_off * t));
}

double passive_pressure(double c, const MaterialParams& p) {
  if (c < 0.0) {
    std::ostringstream msg;
    msg << "invalid state: negative cell density " << c;
    throw InadmissibleState(msg.str());
  }
  const double phi = area_fraction(c, p);
  if (!(phi < 1.0)) {
    std::ostringstream msg;
    msg << "passive stress singularity: density " << c << " reaches the packing bound " << p.max_density();
    throw InadmissibleState(msg.str());
  }
  return p.E_mod * phi / (1.0 - phi);
}

double passive_pressure_deriv(double c, const MaterialParams& p) {
  const double phi = area_fraction(c, p);
  const double denom = 1.0 - phi;
  return p.E_mod * kPi * p.R * p.R / (denom * denom);
}

Mat2 passive_piola(double c, const Mat2& K, const MaterialParams& params) {
  return -passive_pressure(c, params) * K;
}

Mat2 pili_formation_stress(double c, const Vec2& g, const Mat2& grad_g, const Mat2& F, double J, const Mat2& B,
                           const MaterialParams& params) {
  const Mat2 finv = inverse2(F);
  const double kappa = 0.5 * params.f_p * params.k_on * params.ell0;
  const double m = 0.75 * params.ell0 * params.ell0;
  const Vec2 a = finv * g;
  const Mat2 H = finv * grad_g * B;
  const double s = c * c - m * g.squaredNorm() + m * c * ddot(grad_g, finv.transpose());
  const Mat2 T = s * B - 2.0 * m * outer(a, a) + m * c * (H + H.transpose());
  return kappa * J * sym(T);
}

Mat2 pili_formation_stress_deriv(double c, const Vec2& g, const Mat2& grad_g, const Mat2& F, const MaterialParams& params,
                                 double dc, const Vec2& dg, const Mat2& dgrad_g, const Mat2& dF) {
  const Mat2 finv = inverse2(F);
  const double J = F.determinant();
  const Mat2 B = finv * finv.transpose();
  const double kappa = 0.5 * params.f_p * params.k_on * params.ell0;
  const double m = 0.75 * params.ell0 * params.ell0;

  const Vec2 a = finv * g;
  const Mat2 H = finv * grad_g * B;
  const double tr = (grad_g * finv).trace();
  const double s = c * c - m * g.squaredNorm() + m * c * tr;
  const Mat2 T = s * B - 2.0 * m * outer(a, a) + m * c * (H + H.transpose());

  const Mat2 dfinv = -finv * dF * finv;
  const double dJ = J * (finv * dF).trace();
  const Mat2 dB = dfinv * finv.transpose() + finv * dfinv.transpose();
  const Vec2 da = dfinv * g + finv * dg;
  const Mat2 dH = dfinv * grad_g * B + finv * dgrad_g * B + finv * grad_g * dB;
  const double dtr = (dgrad_g * finv).trace() + (grad_g * dfinv).trace();
  const double ds = 2.0 * c * dc - 2.0 * m * g.dot(dg) + m * (dc * tr + c * dtr);
  const Mat2 dT = ds * B + s * dB - 2.0 * m * (outer(da, a) + outer(a, da)) +
                  m * dc * (H + H.transpose()) + m * c * (dH + dH.transpose());
  return kappa * sym(dJ * T + J * dT);
}

Mat2 pili_formation_cauchy(double c, const Vec2& grad_c, const Mat2& hess_c, const MaterialParams& params) {
  const double kappa = 0.5 * params.f_p * params.k_on * params.ell0;
  const double m = 0.75 * params.ell0 * params.ell0;
  const Mat2 I = Mat2::Identity();
  return kappa * (c * c * I - m * (2.0 * outer(grad_c, grad_c) + grad_c.squaredNorm() * I) +
                  m * (c * hess_c.trace() * I + 2.0 * c * hess_c));
}

double penalty_energy(const Vec2& grad_c, const Vec2& g, const Mat2& F, const MaterialParams& params) {
  const Mat2 finv = inverse2(F);
  const Vec2 w = finv.transpose() * grad_c - g;
  return 0.5 * params.lambda_pen * F.determinant() * w.squaredNorm();
}

Mat2 penalty_stress(double /*c*/, const Vec2& grad_c, const Vec2& g, const Mat2& F, double J, const Mat2& B,
                    const MaterialParams& params) {
  const Mat2 finv = inverse2(F);
  const Vec2 a = finv.transpose() * grad_c;
  const Vec2 w = a - g;
  const Vec2 u = B * grad_c - finv * g;
  const double lam = params.lambda_pen;
  return 0.5 * lam * J * w.squaredNorm() * finv.transpose() - lam * J * outer(a, u);
}

Mat2 penalty_stress_deriv(const Vec2& grad_c, const Vec2& g, const Mat2& F, const MaterialParams& params,
                          const Vec2& dgrad_c, const Vec2& dg, const Mat2& dF) {
  const Mat2 finv = inverse2(F);
  const double J = F.determinant();
  const double lam = params.lambda_pen;
  const Vec2 a = finv.transpose() * grad_c;
  const Vec2 w = a - g;
  const Vec2 u = finv * w;

  const Mat2 dfinv = -finv * dF * finv;
  const double dJ = J * (finv * dF).trace();
  const Vec2 da = dfinv.transpose() * grad_c + finv.transpose() * dgrad_c;
  const Vec2 dw = da - dg;
  const Vec2 du = dfinv * w + finv * dw;

  const Mat2 P = lam * J * (0.5 * w.squaredNorm() * finv.transpose() - outer(a, u));
  return (dJ / J) * P +
         lam * J * (w.dot(dw) * finv.transpose() + 0.5 * w.squaredNorm() * dfinv.transpose() - outer(da, u) - outer(a, du));
}

Mat2 active_stress_rate(const Mat2& S, const Mat2& E_rate, const Mat2& S_f, double p0, const MaterialParams& params) {
  return -ddot(S, E_rate) / (params.ell0 * p0 * params.f_p) * S + S_f - params.k_off * S;
}

Mat2 sherman_morrison_apply(double beta, double alpha, const Mat2& C, const Mat2& D, const Mat2& rhs) {
  const double denom = beta + alpha * ddot(D, C);
  const double scale = std::abs(beta) + std::abs(alpha * ddot(D, C));
  if (beta == 0.0 || std::abs(denom) <= 1e-14 * scale) {
    std::ostringstream msg;
    msg << "Sherman-Morrison: singular tangent (beta = " << beta << ", beta + alpha D:C = " << denom << ")";
    throw SingularSystem(msg.str());
  }
  const Mat2 r = sym(rhs);
  return r / beta - (alpha * ddot(D, r) / (beta * denom)) * sym(C);
}

Mat2 active_stress_residual(const Mat2& S, const Mat2& S_n, const Mat2& dE, const Mat2& S_f, double p_used, double dt,
                            const MaterialParams& params) {
  const double alpha = 1.0 / (params.ell0 * p_used * params.f_p * dt);
  return (S - S_n) / dt + alpha * ddot(S, dE) * S - S_f + params.k_off * S;
}

ActiveStressResult active_stress_update(const Mat2& S_n, const Mat2& dE, const Mat2& S_f, double p0, double dt,
                                        const MaterialParams& params, const ActiveStressOptions& opts) {
  if (!(dt > 0.0)) throw InvalidArgument("active_stress_update: dt must be positive");
  ActiveStressResult res;
  res.clamped = !(p0 > opts.p_floor);
  res.p_used = res.clamped ? opts.p_floor : p0;
  res.alpha = 1.0 / (params.ell0 * res.p_used * params.f_p * dt);
  const Mat2 dE_sym = sym(dE);

  // Start from the solution with the quadratic coupling dropped.
  Mat2 S = sym((S_n / dt + S_f) / (1.0 / dt + params.k_off));
  bool converged = false;
  for (int it = 0; it < opts.max_local; ++it) {
    const Mat2 R = active_stress_residual(S, S_n, dE_sym, S_f, res.p_used, dt, params);
    const double rnorm = R.norm();
    if (converged) break;
    if (!std::isfinite(rnorm)) break;
    const double beta = 1.0 / dt + params.k_off + res.alpha * ddot(S, dE_sym);
    const Mat2 dS = -sherman_morrison_apply(beta, res.alpha, S, dE_sym, R);
    S = sym(S + dS);
    res.iterations = it + 1;
    // One extra correction after reaching the tolerance polishes S to
    // rounding level, so the consistent tangent sees the exact solution.
    if (rnorm < opts.tol_local || dS.norm() <= 1e-15 * S.norm()) converged = true;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "active stress local Newton did not converge in " << opts.max_local << " iterations";
    throw ConvergenceFailure(msg.str());
  }
  res.S = S;
  res.beta = 1.0 / dt + params.k_off + res.alpha * ddot(S, dE_sym);
  return res;
}

Mat2 active_stress_deriv(const ActiveStressResult& res, const Mat2& dE, const Mat2& d_dE, const Mat2& dS_f, double dp) {
  const Mat2& S = res.S;
  const Mat2 dE_sym = sym(dE);
  Mat2 rhs = dS_f - res.alpha * ddot(S, sym(d_dE)) * S;
  if (!res.clamped) rhs += (res.alpha / res.p_used) * ddot(S, dE_sym) * dp * S;
  return sherman_morrison_apply(res.beta, res.alpha, S, dE_sym, rhs);
}

}  // namespace aggresim
