#pragma once

#include <cstddef>
#include <type_traits>
#include <vector>

#include "filament/types.hpp"

namespace filament {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(std::size_t n);

/// Product rule over a disk: Gauss-Legendre in radius times the uniform
/// (trapezoid) rule in angle. Exact for polynomials in (z1, z2) times powers
/// of (1 - |z|^2) up to the radial/angular degrees the node counts allow.
class DiskRule {
 public:
  DiskRule(std::size_t radial_nodes, std::size_t angular_nodes,
           const Vector2d& center = Vector2d::Zero(), double radius = 1.0);

  std::size_t size() const noexcept { return weights_.size(); }
  const Vector2d& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  template <typename F>
  auto integrate(F&& integrand) const {
    using Result = std::decay_t<decltype(integrand(points_[0]))>;
    Result acc = integrand(points_[0]) * weights_[0];
    for (std::size_t i = 1; i < points_.size(); ++i) acc += integrand(points_[i]) * weights_[i];
    return acc;
  }

 private:
  std::vector<Vector2d> points_;
  std::vector<double> weights_;
};

}  // namespace filament
