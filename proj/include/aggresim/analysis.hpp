#pragma once

#include "aggresim/assembly.hpp"

namespace aggresim {

struct Diagnostics {
  double time = 0.0;
  double total_cell_number = 0.0;
  double c_min = 0.0;
  double c_max = 0.0;
  double delta_c = 0.0;
  double constraint_violation = 0.0;
};

/// Integral of J c over the reference domain, 3x3 Gauss per element.
double total_cell_number(const FieldState& state, const Mesh& mesh);

struct DensityExtremes {
  double c_min = 0.0;
  double c_max = 0.0;
  double delta_c = 0.0;
};

/// Nodal extremes; throws InvalidArgument on an empty field.
DensityExtremes density_extremes(const FieldState& state);

struct StabilityOnset {
  double value = 0.0;
  bool separates = false;
};

/// Linear-stability indicator of a uniform state at density c_init.
StabilityOnset stability_onset(const MaterialParams& params, double c_init);

/// L2 norm of F^{-T} grad_X c - g over the reference domain. Zero when the
/// state carries no gradient field (passive-only runs).
double constraint_violation(const FieldState& state, const Mesh& mesh, Model model = Model::full);

Diagnostics compute_diagnostics(const FieldState& state, const Mesh& mesh, Model model);

/// Finite-element fields evaluated at a material point (wrapped periodically).
struct FieldSample {
  double c = 0.0;
  Vec2 y = Vec2::Zero();
  /// y - X; periodic.
  Vec2 u = Vec2::Zero();
  double p = 0.0;
  Vec2 g = Vec2::Zero();
};

FieldSample sample_fields(const FieldState& state, const Mesh& mesh, const Vec2& X);

struct BridgeMeasurement {
  bool detected = false;
  double h = 0.0;
  /// Positions of the two boundary loci in the measuring frame.
  Vec2 lower = Vec2::Zero();
  Vec2 upper = Vec2::Zero();
};

/// Where bridge distances are measured: between material points of the
/// undeformed body, or between their deformed positions.
enum class Frame { material, spatial };

/// Bridge extent along `axis` (0 = x, 1 = y) across the material line
/// X_{1-axis} = midline. The boundary loci are the extrema of the positive and
/// negative lobes of g_axis on that line where |g_axis| reaches 96 % of its
/// maximum over the domain; h is their distance through the dense side,
/// measured in `frame`. A negative midline selects the domain center.
BridgeMeasurement bridge_length(const FieldState& state, const Mesh& mesh, int axis = 1, double midline = -1.0,
                                double threshold = 0.96, Frame frame = Frame::material);

struct RecenterResult {
  FieldState state;
  /// Applied translation of the deformed configuration.
  Vec2 shift = Vec2::Zero();
};

/// Translates the configuration so the circular centroid of J c sits at the
/// domain center. The shifted state carries no active-stress history.
RecenterResult recenter_periodic(const FieldState& state, const Mesh& mesh);

/// Circular (first Fourier mode) centroid of the deformed density field;
/// an axis with a vanishing mode reports the domain center.
Vec2 periodic_centroid(const FieldState& state, const Mesh& mesh);

}  // namespace aggresim
