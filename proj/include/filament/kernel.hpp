#pragma once

// The compactly supported kernel K(z) = (6/pi)(1 - |z|^2)^5 on the unit disk,
// its partial derivatives through third order, and the kernel constants.
//
// K depends on z only through rho = |z|^2, K = k(rho), so every partial is
//   d_a K         = 2 z_a k'
//   d_ab K        = 4 z_a z_b k'' + 2 delta_ab k'
//   d_abc K       = 8 z_a z_b z_c k''' + 4 k'' (delta_ab z_c + delta_ac z_b + delta_bc z_a)
// with k^(m)(rho) = c (-1)^m 5!/(5-m)! (1 - rho)^(5-m) inside the disk.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "filament/types.hpp"

namespace filament {

struct Kernel {
  static constexpr double support_radius = 1.0;
  static constexpr int max_order = 3;
  static constexpr double normalization = 6.0 / std::numbers::pi;
};

/// k(rho) and its first `Order` derivatives in rho; all zero for rho >= 1.
template <typename Scalar, int Order = 3>
std::array<Scalar, Order + 1> kernel_radial(Scalar rho) {
  static_assert(Order >= 0 && Order <= 5);
  std::array<Scalar, Order + 1> k{};
  if (!(rho < Scalar(1))) return k;
  const Scalar t = Scalar(1) - rho;
  constexpr std::array<double, 6> falling{1.0, -5.0, 20.0, -60.0, 120.0, -120.0};
  Scalar tp[6];
  tp[0] = Scalar(1);
  for (int p = 1; p <= 5; ++p) tp[p] = tp[p - 1] * t;
  for (int m = 0; m <= Order; ++m) k[m] = Scalar(Kernel::normalization * falling[m]) * tp[5 - m];
  return k;
}

template <typename Scalar>
Scalar kernel_value(const Vec2<Scalar>& z) {
  return kernel_radial<Scalar, 0>(z.squaredNorm())[0];
}

/// Exact K^(i,j)(z) = d^(i+j) K / dz1^i dz2^j for i + j <= 3.
template <typename Scalar>
Scalar kernel_partial(const Vec2<Scalar>& z, int i, int j) {
  if (i < 0 || j < 0 || i + j > Kernel::max_order)
    throw std::invalid_argument("kernel_partial: unsupported derivative order");
  const auto k = kernel_radial<Scalar, 3>(z.squaredNorm());
  const Scalar z1 = z(0);
  const Scalar z2 = z(1);
  switch (i * 4 + j) {
    case 0: return k[0];
    case 4: return Scalar(2) * z1 * k[1];
    case 1: return Scalar(2) * z2 * k[1];
    case 8: return Scalar(4) * z1 * z1 * k[2] + Scalar(2) * k[1];
    case 5: return Scalar(4) * z1 * z2 * k[2];
    case 2: return Scalar(4) * z2 * z2 * k[2] + Scalar(2) * k[1];
    case 12: return Scalar(8) * z1 * z1 * z1 * k[3] + Scalar(12) * z1 * k[2];
    case 9: return Scalar(8) * z1 * z1 * z2 * k[3] + Scalar(4) * z2 * k[2];
    case 6: return Scalar(8) * z1 * z2 * z2 * k[3] + Scalar(4) * z1 * k[2];
    default: return Scalar(8) * z2 * z2 * z2 * k[3] + Scalar(12) * z2 * k[2];
  }
}

/// All partials of K through third order at one point.
template <typename Scalar>
struct KernelJet {
  Scalar value{};
  Vec2<Scalar> grad = Vec2<Scalar>::Zero();
  /// (K^(2,0), K^(1,1), K^(0,2))
  Vec3<Scalar> d2 = Vec3<Scalar>::Zero();
  /// Row r is the gradient of d2(r): [[K30, K21], [K21, K12], [K12, K03]].
  Mat32<Scalar> grad_d2 = Mat32<Scalar>::Zero();
};

template <typename Scalar>
KernelJet<Scalar> kernel_jet(const Vec2<Scalar>& z) {
  KernelJet<Scalar> jet;
  const Scalar rho = z.squaredNorm();
  if (!(rho < Scalar(1))) return jet;
  const auto k = kernel_radial<Scalar, 3>(rho);
  const Scalar z1 = z(0);
  const Scalar z2 = z(1);
  jet.value = k[0];
  jet.grad << Scalar(2) * z1 * k[1], Scalar(2) * z2 * k[1];
  jet.d2 << Scalar(4) * z1 * z1 * k[2] + Scalar(2) * k[1], Scalar(4) * z1 * z2 * k[2],
      Scalar(4) * z2 * z2 * k[2] + Scalar(2) * k[1];
  const Scalar k30 = Scalar(8) * z1 * z1 * z1 * k[3] + Scalar(12) * z1 * k[2];
  const Scalar k21 = Scalar(8) * z1 * z1 * z2 * k[3] + Scalar(4) * z2 * k[2];
  const Scalar k12 = Scalar(8) * z1 * z2 * z2 * k[3] + Scalar(4) * z1 * k[2];
  const Scalar k03 = Scalar(8) * z2 * z2 * z2 * k[3] + Scalar(12) * z2 * k[2];
  jet.grad_d2 << k30, k21, k21, k12, k12, k03;
  return jet;
}

/// d2K(z) = (K^(2,0), K^(1,1), K^(0,2))(z).
template <typename Scalar>
Vec3<Scalar> kernel_d2(const Vec2<Scalar>& z) {
  const auto k = kernel_radial<Scalar, 2>(z.squaredNorm());
  return Vec3<Scalar>(Scalar(4) * z(0) * z(0) * k[2] + Scalar(2) * k[1], Scalar(4) * z(0) * z(1) * k[2],
                      Scalar(4) * z(1) * z(1) * k[2] + Scalar(2) * k[1]);
}

struct KernelConstants {
  /// int K(z) z1^2 dz
  double mu2 = 0.0;
  /// R = int d2K d2K^T dz
  Matrix3d r_matrix = Matrix3d::Zero();
  /// int [K^(3,0)]^2 / int [K^(1,2)]^2
  double b1 = 0.0;
  /// (1/2) int [K^(1,2)]^2
  double b2 = 0.0;
  double integral_of_k = 0.0;
  int quadrature_nodes = 0;
};

/// Constants by polar quadrature over the unit disk; `quadrature_nodes` >= 16
/// radial nodes (twice as many angular nodes).
KernelConstants compute_constants(int quadrature_nodes = 64);

/// Process-wide constants at the default resolution, computed on first use.
const KernelConstants& kernel_constants();

/// ||a||_R = sqrt(a^T R a).
inline double r_norm(const Vector3d& a, const KernelConstants& constants) {
  return std::sqrt(a.dot(constants.r_matrix * a));
}

}  // namespace filament
