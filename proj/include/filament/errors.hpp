#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "filament/types.hpp"

namespace filament {

/// The Hessian encoding d2 = (u, v, w) left the non-degeneracy region Q_delta.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const Vector2d& x, const Vector3d& d2);
  DegeneracyError(const std::string& what, const Vector3d& d2);

  const Vector2d& where() const noexcept { return x_; }
  const Vector3d& d2() const noexcept { return d2_; }

 private:
  Vector2d x_ = Vector2d::Constant(std::numeric_limits<double>::quiet_NaN());
  Vector3d d2_;
};

/// A(x) = grad G^T grad f vanished, so g(x) and the band are undefined there.
class FlatFilamentError : public std::runtime_error {
 public:
  explicit FlatFilamentError(const Vector2d& x);
  const Vector2d& where() const noexcept { return x_; }

 private:
  Vector2d x_;
};

/// Invalid user configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many Monte Carlo replicates failed (CLI exit code 3).
class ExperimentFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace filament
