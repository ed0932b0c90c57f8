#include "filament/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "filament/density.hpp"

namespace filament {

double phi1_from(const DensityField& model, const Vector3d& d2_hat, double h, const Vector2d& x,
                 const DegeneracyGuard& guard) {
  const FieldJet jet = model.eval_all(x);
  if (jet.grad.isZero(0.0)) return 0.0;
  const Vector3d a = grad_g(jet.d2, guard).transpose() * jet.grad;
  return a.dot(d2_hat - expected_d2(model, x, h)) / a_tilde_prime_from_jet(jet, x, guard);
}

double phi1(const DensityField& model, const KdeField& kde, const Vector2d& x, const DegeneracyGuard& guard) {
  return phi1_from(model, kde.d2(x), kde.bandwidth(), x, guard);
}

Phi2Terms phi2(const DensityField& model, const DensityField& estimate, double h, const Vector2d& x0,
               const FlowSettings& flow, const DegeneracyGuard& guard) {
  const FilamentHit truth = find_theta(model, x0, flow, guard, flow.t_max);
  if (!truth.found) throw std::runtime_error("phi2: no filament point on the true curve");
  const Vector2d x = truth.point;

  // Xhat at the true time theta.
  Vector2d x_hat = x0;
  if (truth.theta != 0.0) {
    FlowSettings settings = flow;
    settings.direction = truth.theta > 0.0 ? Direction::forward : Direction::backward;
    settings.t_max = std::abs(truth.theta);
    settings.step = std::min(flow.step, settings.t_max);
    const Trajectory traj = trace(estimate, x0, settings, guard);
    const std::size_t last = truth.theta > 0.0 ? traj.size() - 1 : 0;
    if (std::abs(std::abs(traj.times[last]) - settings.t_max) > 1e-12)
      throw std::runtime_error("phi2: estimated curve stopped before the true theta");
    x_hat = traj.points[last];
  }

  const FieldJet jet = model.eval_all(x);
  const EigenFrame frame = frame_from_jet(jet, x, guard);
  const double ap = a_tilde_prime_from_jet(jet, x, guard);
  const Vector2d bias = expected_grad(model, x_hat, h) - model.grad(x_hat);
  Phi2Terms terms;
  terms.curvature = frame.v.dot(unpack_symmetric(jet.d2) * (x_hat - x)) / ap;
  terms.bias = bias.dot(frame.v) / ap;
  return terms;
}

Matrix2d gamma_matrix(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard) {
  const FieldJet jet = field.eval_all(x);
  const EigenFrame frame = frame_from_jet(jet, x, guard);
  const double ap = a_tilde_prime_from_jet(jet, x, guard);
  if (ap == 0.0) throw std::domain_error("gamma_matrix: a~' vanishes");
  return (frame.v * frame.v.transpose()) * unpack_symmetric(jet.d2) / ap - Matrix2d::Identity();
}

Vector2d bias_vector(const DensityField& field, const Vector2d& x, double mu2) {
  const Matrix32d t = field.grad_d2(x);
  // t = [[f30, f21], [f21, f12], [f12, f03]]
  return 0.5 * mu2 * Vector2d(t(0, 0) + t(2, 0), t(2, 1) + t(1, 0));
}

DeviationReport decompose(const DensityField& model, const FilamentHit& true_hit, const FilamentHit& est_hit,
                          const DegeneracyGuard& guard) {
  if (!true_hit.found || !est_hit.found) throw std::invalid_argument("decompose: both hits must be found");
  const EigenFrame frame = frame_at(model, true_hit.point, guard);
  const Vector2d unit_v = frame.v.normalized();
  const Vector2d unit_perp(-unit_v(1), unit_v(0));
  DeviationReport r;
  r.full_dev = est_hit.point - true_hit.point;
  r.normal_comp = r.full_dev.dot(unit_v);
  r.tangential_comp = r.full_dev.dot(unit_perp);
  r.theta_diff = est_hit.theta - true_hit.theta;
  r.linearization_residual = (r.full_dev - frame.v * r.theta_diff).norm();
  return r;
}

}  // namespace filament
