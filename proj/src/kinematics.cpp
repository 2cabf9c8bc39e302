#include "aggresim/kinematics.hpp"

#include <cassert>
#include <sstream>

#include "aggresim/error.hpp"

namespace aggresim {

Mat2 deformation_gradient(std::span<const Vec2> nodal_y, std::span<const Vec2> grad_material) {
  assert(nodal_y.size() == grad_material.size());
  Mat2 f = Mat2::Zero();
  for (std::size_t i = 0; i < nodal_y.size(); ++i) f += outer(nodal_y[i], grad_material[i]);
  return f;
}

QuadratureKinematics derived_measures(const Mat2& F) {
  QuadratureKinematics k;
  k.F = F;
  k.J = F.determinant();
  if (!(k.J > 0.0)) {
    std::ostringstream msg;
    msg << "element inversion: det F = " << k.J;
    throw InadmissibleState(msg.str());
  }
  // Explicit 2x2 inverse keeps K = J F^{-T} exact to rounding.
  k.Finv << F(1, 1), -F(0, 1), -F(1, 0), F(0, 0);
  k.K = k.Finv.transpose();
  k.Finv /= k.J;
  k.B = k.Finv * k.Finv.transpose();
  k.B = sym(k.B);
  k.E = sym(0.5 * (F.transpose() * F - Mat2::Identity()));
  return k;
}

Mat2 strain_increment(const Mat2& e_next, const Mat2& e_prev) { return sym(e_next - e_prev); }

}  // namespace aggresim
