#pragma once

#include <span>

#include "aggresim/tensor.hpp"

namespace aggresim {

/// Deformation measures at one quadrature point.
struct QuadratureKinematics {
  Mat2 F = Mat2::Identity();
  double J = 1.0;
  /// Cofactor J F^{-T}.
  Mat2 K = Mat2::Identity();
  /// Piola deformation tensor F^{-1} F^{-T} (inverse right Cauchy-Green).
  Mat2 B = Mat2::Identity();
  /// Green-Lagrange strain, stored symmetrized.
  Mat2 E = Mat2::Zero();
  Mat2 Finv = Mat2::Identity();
};

/// F = sum_i y^i (x) grad_X M^i.
Mat2 deformation_gradient(std::span<const Vec2> nodal_y, std::span<const Vec2> grad_material);

/// Throws InadmissibleState when det F <= 0 (element inversion).
QuadratureKinematics derived_measures(const Mat2& F);

/// E_next - E_prev, symmetrized.
Mat2 strain_increment(const Mat2& e_next, const Mat2& e_prev);

}  // namespace aggresim
