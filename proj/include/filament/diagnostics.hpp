#pragma once

#include "filament/density.hpp"
#include "filament/eigenfield.hpp"
#include "filament/flow.hpp"
#include "filament/ridge.hpp"

namespace filament {

/// (1/a~'(x)) grad f(x)^T G~(x) (d2 fhat(x) - E d2 fhat(x)), population
/// quantities from the model. Exactly 0 when grad f(x) = 0.
double phi1(const DensityField& model, const KdeField& kde, const Vector2d& x, const DegeneracyGuard& guard = {});

/// Same with d2 fhat(x) supplied, for callers that already evaluated the estimate.
double phi1_from(const DensityField& model, const Vector3d& d2_hat, double h, const Vector2d& x,
                 const DegeneracyGuard& guard = {});

struct Phi2Terms {
  double curvature = 0.0;  // <V, Xhat(theta) - x>_{Hessian} / a~'
  double bias = 0.0;       // <(E grad fhat - grad f)(Xhat(theta)), V> / a~'
  double value() const { return curvature + bias; }
};

/// The two-term approximation for filament points with vanishing gradient.
/// `estimate` drives Xhat; `h` is the bandwidth of the expectation term.
Phi2Terms phi2(const DensityField& model, const DensityField& estimate, double h, const Vector2d& x0,
               const FlowSettings& flow, const DegeneracyGuard& guard = {});

/// (a~')^{-1} V V^T Hessian - I.
Matrix2d gamma_matrix(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard = {});

/// (1/2) mu2 (f30 + f12, f03 + f21).
Vector2d bias_vector(const DensityField& field, const Vector2d& x, double mu2);

struct DeviationReport {
  Vector2d full_dev = Vector2d::Zero();
  double normal_comp = 0.0;
  double tangential_comp = 0.0;
  double theta_diff = 0.0;
  double linearization_residual = 0.0;
};

/// Deviation of est_hit from true_hit in the frame (V, V_perp) at the true hit.
DeviationReport decompose(const DensityField& model, const FilamentHit& true_hit, const FilamentHit& est_hit,
                          const DegeneracyGuard& guard = {});

}  // namespace filament
