#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "aggresim/assembly.hpp"

namespace testing_support {

using namespace aggresim;

inline Mat2 random_sym(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat2 a;
  a(0, 0) = u(rng);
  a(1, 1) = u(rng);
  a(0, 1) = a(1, 0) = u(rng);
  return a;
}

inline Mat2 random_mat(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat2 a;
  a << u(rng), u(rng), u(rng), u(rng);
  return a;
}

inline Vec2 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng)};
}

/// Random admissible (next, prev) pair with mild distortion.
struct StatePair {
  FieldState next, prev;
};

inline StatePair random_pair(const Mesh& mesh, std::mt19937_64& rng, double distortion = 0.1) {
  std::uniform_real_distribution<double> uc(0.05, 0.15), up(0.002, 0.02);
  const Vec2 h = mesh.element_size();
  StatePair s{reference_state(mesh, 9), reference_state(mesh, 9)};
  for (std::size_t i = 0; i < s.next.c.size(); ++i) {
    s.next.c[i] = uc(rng);
    s.prev.c[i] = uc(rng);
    s.next.p[i] = up(rng);
    s.prev.p[i] = up(rng);
    s.next.g[i] = random_vec(rng, 0.02);
    s.prev.g[i] = random_vec(rng, 0.02);
  }
  for (std::size_t n = 0; n < s.next.y.size(); ++n) {
    const Vec2 d = random_vec(rng, distortion).cwiseProduct(h);
    s.prev.y[n] += d;
    s.next.y[n] += d + random_vec(rng, 0.3 * distortion).cwiseProduct(h);
  }
  for (Mat2& S : s.prev.S_a) S = random_sym(rng, 0.01);
  s.prev.time = 0.0;
  s.next.time = 0.5;
  return s;
}

/// Central-difference Jacobian of the assembled residual.
inline Eigen::MatrixXd fd_tangent(const Assembler& a, const FieldState& next, const FieldState& prev, double dt,
                                  double eps = 1e-6) {
  const Eigen::VectorXd u0 = pack(next, a.mesh(), a.dofs());
  const int n = static_cast<int>(u0.size());
  Eigen::MatrixXd K(n, n);
  FieldState work = next;
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd u = u0;
    const double h = eps * std::max(1.0, std::abs(u0(j)));
    u(j) = u0(j) + h;
    unpack(u, a.mesh(), a.dofs(), work);
    const Eigen::VectorXd rp = a.residual(work, prev, dt);
    u(j) = u0(j) - h;
    unpack(u, a.mesh(), a.dofs(), work);
    const Eigen::VectorXd rm = a.residual(work, prev, dt);
    K.col(j) = (rp - rm) / (2.0 * h);
  }
  return K;
}

}  // namespace testing_support
