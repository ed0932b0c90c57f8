#include "filament/kernel.hpp"

#include <stdexcept>

#include "filament/quadrature.hpp"

namespace filament {

KernelConstants compute_constants(int quadrature_nodes) {
  if (quadrature_nodes < 16) throw std::invalid_argument("compute_constants: need at least 16 nodes");
  const DiskRule rule(static_cast<std::size_t>(quadrature_nodes), 2 * static_cast<std::size_t>(quadrature_nodes));

  KernelConstants c;
  c.quadrature_nodes = quadrature_nodes;
  double k30_sq = 0.0;
  double k12_sq = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector2d& z = rule.point(i);
    const double w = rule.weight(i);
    const KernelJet<double> jet = kernel_jet(z);
    c.integral_of_k += w * jet.value;
    c.mu2 += w * jet.value * z(0) * z(0);
    c.r_matrix.noalias() += w * jet.d2 * jet.d2.transpose();
    k30_sq += w * jet.grad_d2(0, 0) * jet.grad_d2(0, 0);
    k12_sq += w * jet.grad_d2(2, 0) * jet.grad_d2(2, 0);
  }
  c.r_matrix = 0.5 * (c.r_matrix + c.r_matrix.transpose()).eval();
  c.b1 = k30_sq / k12_sq;
  c.b2 = 0.5 * k12_sq;
  return c;
}

const KernelConstants& kernel_constants() {
  static const KernelConstants constants = compute_constants();
  return constants;
}

}  // namespace filament
