#pragma once

// Second-eigenvector field of the Hessian in the packed (u, v, w) encoding.
//
//   G(u, v, w) = (2u - 2w + 2v - 2S, w - u + 4v - S),  S = sqrt((w - u)^2 + 4v^2)
//   J(u, v, w) = (u + w - S) / 2
//
// G is evaluated without cancellation: whichever of u - w - S and w - u - S
// is a difference of like-signed terms is rewritten as -4v^2 / (|u - w| + S).

#include <cmath>

#include "filament/density.hpp"
#include "filament/errors.hpp"
#include "filament/types.hpp"

namespace filament {

struct DegeneracyGuard {
  double delta = 1e-8;

  template <typename Derived>
  bool accepts(const Eigen::MatrixBase<Derived>& d2) const {
    return std::abs(d2(0) - d2(2)) > delta || std::abs(d2(1)) > delta;
  }
};

template <typename Scalar>
Scalar eigen_gap_root(Scalar u, Scalar v, Scalar w) {
  using std::hypot;
  return hypot(w - u, Scalar(2) * v);
}

template <typename Scalar>
Vec2<Scalar> g_map(Scalar u, Scalar v, Scalar w) {
  const Scalar s = eigen_gap_root(u, v, w);
  Scalar umw;  // u - w - S
  Scalar wmu;  // w - u - S
  if (u >= w) {
    umw = (s > Scalar(0)) ? Scalar(-4) * v * v / (u - w + s) : Scalar(0);
    wmu = (w - u) - s;
  } else {
    umw = (u - w) - s;
    wmu = Scalar(-4) * v * v / (w - u + s);
  }
  return Vec2<Scalar>(Scalar(2) * umw + Scalar(2) * v, wmu + Scalar(4) * v);
}

template <typename Derived>
auto g_map(const Eigen::MatrixBase<Derived>& d2) {
  return g_map(d2(0), d2(1), d2(2));
}

template <typename Scalar>
Scalar j_map(Scalar u, Scalar v, Scalar w) {
  const Scalar s = eigen_gap_root(u, v, w);
  const Scalar sum = u + w;
  if (sum <= Scalar(0)) return (sum - s) / Scalar(2);
  // lambda2 = det / lambda1 when lambda1 is the large-magnitude root.
  const Scalar l1 = (sum + s) / Scalar(2);
  return (u * w - v * v) / l1;
}

template <typename Derived>
auto j_map(const Eigen::MatrixBase<Derived>& d2) {
  return j_map(d2(0), d2(1), d2(2));
}

template <typename Scalar>
Scalar lambda1(Scalar u, Scalar v, Scalar w) {
  const Scalar s = eigen_gap_root(u, v, w);
  const Scalar sum = u + w;
  if (sum >= Scalar(0)) return (sum + s) / Scalar(2);
  const Scalar l2 = (sum - s) / Scalar(2);
  return (u * w - v * v) / l2;
}

/// Jacobian of G; throws DegeneracyError outside Q_delta.
template <typename Scalar>
Mat23<Scalar> grad_g(Scalar u, Scalar v, Scalar w, const DegeneracyGuard& guard = {}) {
  if (!(std::abs(u - w) > guard.delta || std::abs(v) > guard.delta))
    throw DegeneracyError("grad_g: (u, v, w) outside the non-degeneracy region",
                          Vector3d(double(u), double(v), double(w)));
  const Scalar s = eigen_gap_root(u, v, w);
  const Scalar du = (u - w) / s;  // dS/du
  const Scalar dv = Scalar(4) * v / s;  // dS/dv
  Mat23<Scalar> jac;
  jac << Scalar(2) - Scalar(2) * du, Scalar(2) - Scalar(2) * dv, Scalar(-2) + Scalar(2) * du,
      Scalar(-1) - du, Scalar(4) - dv, Scalar(1) + du;
  return jac;
}

template <typename Derived>
auto grad_g(const Eigen::MatrixBase<Derived>& d2, const DegeneracyGuard& guard = {}) {
  return grad_g(d2(0), d2(1), d2(2), guard);
}

struct EigenFrame {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Vector2d v = Vector2d::Zero();
  Vector2d v_perp = Vector2d::Zero();
  double eigen_residual = 0.0;
  FieldJet jet;
};

/// Frame from an already evaluated jet; throws DegeneracyError outside Q_delta.
EigenFrame frame_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard = {});
EigenFrame frame_at(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard = {});

/// grad V = grad G(d2f) grad d2f.
Matrix2d grad_v_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard = {});
Matrix2d grad_v(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard = {});

/// <grad f, V>_{grad V} + lambda2 |V|^2, the t-derivative of a(t) along the flow.
double a_tilde_prime_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard = {});
double a_tilde_prime(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard = {});

}  // namespace filament
