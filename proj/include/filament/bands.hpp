#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Eigenvalues>

#include "filament/density.hpp"
#include "filament/eigenfield.hpp"
#include "filament/kernel.hpp"
#include "filament/ridge.hpp"

namespace filament {

struct BandIngredients {
  /// A(x) = grad G(d2f)^T grad f
  Vector3d a_vec = Vector3d::Zero();
  double a_tilde_prime = 0.0;
  double g = 0.0;
  /// W(x) = A(x) / a~'(x)
  Vector3d w_vec = Vector3d::Zero();
  double norm_a_r = 0.0;
  double f = 0.0;
  double v_norm = 0.0;
  double lambda2 = 0.0;
};

/// Throws FlatFilamentError when |A|_R = 0, std::domain_error when f(x) <= 0.
BandIngredients ingredients_at(const DensityField& field, const Vector2d& x, const KernelConstants& constants,
                               const DegeneracyGuard& guard = {});

template <typename Derived>
Mat2<typename Derived::Scalar> omega_at(const Eigen::MatrixBase<Derived>& a, typename Derived::Scalar b1) {
  using Scalar = typename Derived::Scalar;
  const Scalar a1 = a(0);
  const Scalar a2 = a(1);
  const Scalar a3 = a(2);
  Mat2<Scalar> omega;
  omega(0, 0) = b1 * a1 * a1 + a2 * a2 + a3 * a3 + Scalar(2) * a1 * a3;
  omega(0, 1) = Scalar(2) * a1 * a2 + Scalar(2) * a2 * a3;
  omega(1, 0) = omega(0, 1);
  omega(1, 1) = b1 * a3 * a3 + a2 * a2 + a1 * a1 + Scalar(2) * a1 * a3;
  return omega;
}

/// Symmetric square root of a positive semidefinite 2x2 matrix.
template <typename Derived>
Mat2<typename Derived::Scalar> sqrt_psd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> es(m.eval());
  const Vec2<Scalar> root = es.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// |Omega^{1/2} M| / |A|_R at each vertex, with unit tangents M from central
/// differences (one-sided at open ends).
std::vector<double> c_integrand(const Polyline& polyline, const DensityField& field,
                                const KernelConstants& constants, const DegeneracyGuard& guard = {});

/// c = log( sqrt(b2 / 2) / pi * int_L |Omega^{1/2} M| / |A|_R ds ), trapezoid in arc length.
double constant_c(const Polyline& polyline, const DensityField& field, const KernelConstants& constants,
                  const DegeneracyGuard& guard = {});

/// sqrt(2 log(1/h)) + (z + c) / sqrt(2 log(1/h)); requires 0 < h < 1.
double b_h_of(double z, double h, double c);

/// z with exp(-2 exp(-z)) = 1 - alpha.
double z_from_level(double alpha);

struct BandResult {
  double c = 0.0;
  double b_h = 0.0;
  double z = 0.0;
  double h = 0.0;
  std::size_t n = 0;
  std::vector<double> g;
  std::vector<double> radii;
};

/// radius_i = b_h(z) / (sqrt(n h^6) |g(vertex_i)|).
BandResult band_radii(const FilamentEstimate& estimate, const DensityField& field,
                      const KernelConstants& constants, std::size_t n, double h, double z,
                      const DegeneracyGuard& guard = {});

/// sqrt(f W^T R W) / sqrt(n h^6).
double pointwise_sd(const DensityField& field, const Vector2d& x, const KernelConstants& constants,
                    std::size_t n, double h, const DegeneracyGuard& guard = {});

}  // namespace filament
