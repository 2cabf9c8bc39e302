#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "aggresim/constitutive.hpp"
#include "aggresim/kinematics.hpp"
#include "aggresim/mesh.hpp"

namespace aggresim {

/// Nodal unknowns at one time level plus the active stress history.
/// c, p and g are indexed by corner-set index, y by unique node, S_a by
/// element * quadrature_points + q.
struct FieldState {
  std::vector<double> c;
  std::vector<Vec2> y;
  std::vector<double> p;
  std::vector<Vec2> g;
  std::vector<Mat2> S_a;
  double time = 0.0;
};

/// y = X, every other field zero.
FieldState reference_state(const Mesh& mesh, int quadrature_points);

Eigen::VectorXd pack(const FieldState& state, const Mesh& mesh, const DofMap& dofs);
/// Writes the DOF vector into state; S_a and time are left untouched.
void unpack(const Eigen::VectorXd& u, const Mesh& mesh, const DofMap& dofs, FieldState& state);

struct GlobalSystem {
  Eigen::VectorXd residual;
  Eigen::SparseMatrix<double> tangent;
  DofMap dof_map;
};

/// Per-node views of the residual blocks. c/p/g entries follow the corner
/// set, y entries the unique nodes; absent blocks are empty.
struct ResidualBlocks {
  std::vector<double> c;
  std::vector<Vec2> y;
  std::vector<double> p;
  std::vector<Vec2> g;
};

ResidualBlocks split_residual(const Eigen::VectorXd& r, const Mesh& mesh, const DofMap& dofs);

enum class ActiveTangent {
  analytic,          ///< implicit differentiation of the local update
  finite_difference  ///< central differences of the local update (verification)
};

struct AssemblyOptions {
  ActiveTangent active_tangent = ActiveTangent::analytic;
  ActiveStressOptions local;
  /// 0 = hardware concurrency, else the worker count.
  int threads = 1;
};

/// Worker count from AGGRESIM_THREADS (0 or unset = auto).
int threads_from_environment();

/// Four-field (or passive-only two-field) residual and consistent tangent on a
/// periodic mesh. The mesh must outlive the assembler.
class Assembler {
 public:
  Assembler(const Mesh& mesh, Model model, MaterialParams params, AssemblyOptions options = {});

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return dofs_; }
  const ShapeTable& shapes() const { return shapes_; }
  Model model() const { return model_; }
  const MaterialParams& params() const { return params_; }
  int quadrature_points() const { return static_cast<int>(shapes_.rule.size()); }

  /// Residual and tangent at `next`. When active_out is non-null it receives the
  /// updated active stress at every quadrature point.
  GlobalSystem assemble(const FieldState& next, const FieldState& prev, double dt,
                        std::vector<Mat2>* active_out = nullptr) const;

  Eigen::VectorXd residual(const FieldState& next, const FieldState& prev, double dt,
                           std::vector<Mat2>* active_out = nullptr) const;

  /// Material gradients of the shape functions and the volume weight at one
  /// quadrature point of element e.
  struct PointGeometry {
    std::array<Vec2, 4> dN;
    std::array<Vec2, 9> dM;
    double dV = 0.0;
  };
  const PointGeometry& geometry(int e, int q) const {
    return geometry_[static_cast<std::size_t>(e * quadrature_points() + q)];
  }

 private:
  struct ElementOutput;
  void evaluate_element(int e, const FieldState& next, const FieldState& prev, double dt, bool with_tangent,
                        ElementOutput& out, Mat2* active_out) const;
  void run(const FieldState& next, const FieldState& prev, double dt, bool with_tangent, Eigen::VectorXd& r,
           Eigen::SparseMatrix<double>* k, std::vector<Mat2>* active_out) const;

  const Mesh* mesh_;
  Model model_;
  MaterialParams params_;
  AssemblyOptions options_;
  DofMap dofs_;
  ShapeTable shapes_;
  std::vector<PointGeometry> geometry_;
  std::vector<std::vector<int>> element_dofs_;
  Eigen::SparseMatrix<double> pattern_;
  /// Per element, row-major local (a, b) -> offset into the tangent value array.
  std::vector<std::vector<int>> scatter_;
};

// Free-function views of the individual residual blocks.
std::vector<double> residual_cell(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                  const MaterialParams& params, Model model = Model::full);
std::vector<Vec2> residual_momentum(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                    const MaterialParams& params, Model model = Model::full);
std::vector<double> residual_pili(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                  const MaterialParams& params);
std::vector<Vec2> residual_gradient(const FieldState& next, const Mesh& mesh, const MaterialParams& params);

GlobalSystem assemble_tangent(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                              const MaterialParams& params, std::vector<Mat2>* active_out = nullptr);
GlobalSystem assemble_passive_only(const FieldState& next, const FieldState& prev, double dt, const Mesh& mesh,
                                   const MaterialParams& params);

}  // namespace aggresim
