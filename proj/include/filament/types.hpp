#pragma once

#include <Eigen/Core>

namespace filament {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar>
using Mat23 = Eigen::Matrix<Scalar, 2, 3>;
template <typename Scalar>
using Mat32 = Eigen::Matrix<Scalar, 3, 2>;

using Vector2d = Eigen::Vector2d;
using Vector3d = Eigen::Vector3d;
using Matrix2d = Eigen::Matrix2d;
using Matrix3d = Eigen::Matrix3d;
using Matrix23d = Mat23<double>;
using Matrix32d = Mat32<double>;

/// Symmetric 2x2 matrix from its packed (u, v, w) = (m11, m12, m22) form.
template <typename Derived>
Mat2<typename Derived::Scalar> unpack_symmetric(const Eigen::MatrixBase<Derived>& d2) {
  Mat2<typename Derived::Scalar> m;
  m << d2(0), d2(1), d2(1), d2(2);
  return m;
}

}  // namespace filament
