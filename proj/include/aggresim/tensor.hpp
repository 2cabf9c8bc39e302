#pragma once

#include <Eigen/Dense>

namespace aggresim {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Fourth-order tensor on 2x2 tensors, stored as a 4x4 matrix over the
/// row-major flattening (i,j) -> 2*i + j. Entry (flat(i,j), flat(k,l)) holds
/// the (ijkl) component, e.g. dA_ij / dF_kl.
using Tensor4 = Eigen::Matrix4d;
using Flat2 = Eigen::Vector4d;

constexpr int flat(int i, int j) { return 2 * i + j; }

inline Flat2 flatten(const Mat2& a) { return {a(0, 0), a(0, 1), a(1, 0), a(1, 1)}; }

inline Mat2 unflatten(const Flat2& v) {
  Mat2 a;
  a << v(0), v(1), v(2), v(3);
  return a;
}

/// A : B
inline double ddot(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

inline Mat2 sym(const Mat2& a) { return 0.5 * (a + a.transpose()); }

inline Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

/// Unit basis tensor e_k (x) e_l.
inline Mat2 unit_tensor(int k, int l) {
  Mat2 e = Mat2::Zero();
  e(k, l) = 1.0;
  return e;
}

/// (A (x) B)_ijkl = A_ij B_kl
inline Tensor4 dyad(const Mat2& a, const Mat2& b) { return flatten(a) * flatten(b).transpose(); }

/// Symmetric fourth-order identity 1/2 [d_ik d_jl + d_il d_jk].
inline Tensor4 identity_sym() {
  Tensor4 t = Tensor4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      t(flat(i, j), flat(i, j)) += 0.5;
      t(flat(i, j), flat(j, i)) += 0.5;
    }
  return t;
}

// Derivatives of kinematic quantities with respect to F, in index form.
// finv is F^{-1}.
namespace dF {

/// dJ/dF = J F^{-T}
inline Mat2 det(double J, const Mat2& finv) { return J * finv.transpose(); }

/// d(F^{-1})_ij / dF_kl = -F^{-1}_ik F^{-1}_lj
inline Tensor4 inverse(const Mat2& finv) {
  Tensor4 t;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) t(flat(i, j), flat(k, l)) = -finv(i, k) * finv(l, j);
  return t;
}

/// d(F^{-T})_ij / dF_kl = -F^{-1}_jk F^{-1}_li
inline Tensor4 inverse_transpose(const Mat2& finv) {
  Tensor4 t;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) t(flat(i, j), flat(k, l)) = -finv(j, k) * finv(l, i);
  return t;
}

/// K = J F^{-T}:  dK_ij / dF_kl = J [F^{-T}_ij F^{-T}_kl - F^{-1}_jk F^{-1}_li]
inline Tensor4 cofactor(double J, const Mat2& finv) {
  return J * (dyad(finv.transpose(), finv.transpose()) + inverse_transpose(finv));
}

/// B = F^{-1} F^{-T}:  dB_ij / dF_kl = -F^{-1}_ik B_lj - B_il F^{-1}_jk
inline Tensor4 piola_deformation(const Mat2& finv) {
  const Mat2 b = finv * finv.transpose();
  Tensor4 t;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          t(flat(i, j), flat(k, l)) = -finv(i, k) * b(l, j) - b(i, l) * finv(j, k);
  return t;
}

/// E = 1/2 (F^T F - I):  dE_ij / dF_kl = 1/2 [d_il F_kj + F_ki d_jl]
inline Tensor4 green_lagrange(const Mat2& f) {
  Tensor4 t = Tensor4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          t(flat(i, j), flat(k, l)) = 0.5 * ((i == l ? f(k, j) : 0.0) + (j == l ? f(k, i) : 0.0));
  return t;
}

}  // namespace dF

}  // namespace aggresim
