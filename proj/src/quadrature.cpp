#include "filament/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace filament {

namespace {

// Returns (P_n(x), P_{n-1}(x)) by the three-term recurrence.
std::pair<double, double> legendre_pair(std::size_t n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = p2;
  }
  return {p1, p0};
}

}  // namespace

GaussLegendre gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      const auto [pn, pm] = legendre_pair(n, x);
      dp = nd * (x * pn - pm) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const auto [pn, pm] = legendre_pair(n, x);
    dp = nd * (x * pn - pm) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

DiskRule::DiskRule(std::size_t radial_nodes, std::size_t angular_nodes, const Vector2d& center,
                   double radius) {
  if (radial_nodes == 0 || angular_nodes == 0 || !(radius > 0.0))
    throw std::invalid_argument("DiskRule: node counts and radius must be positive");
  const GaussLegendre gl = gauss_legendre(radial_nodes);
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(angular_nodes);
  points_.reserve(radial_nodes * angular_nodes);
  weights_.reserve(radial_nodes * angular_nodes);
  for (std::size_t i = 0; i < radial_nodes; ++i) {
    const double r = 0.5 * radius * (gl.nodes[i] + 1.0);
    const double wr = 0.5 * radius * gl.weights[i] * r;
    for (std::size_t j = 0; j < angular_nodes; ++j) {
      // Half-cell offset keeps the rule symmetric under z -> -z for even counts.
      const double phi = dphi * (static_cast<double>(j) + 0.5);
      points_.emplace_back(center + r * Vector2d(std::cos(phi), std::sin(phi)));
      weights_.push_back(wr * dphi);
    }
  }
}

}  // namespace filament
