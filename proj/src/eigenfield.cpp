#include "filament/eigenfield.hpp"

namespace filament {

EigenFrame frame_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard) {
  if (!guard.accepts(jet.d2)) throw DegeneracyError(x, jet.d2);
  const double u = jet.d2(0);
  const double v = jet.d2(1);
  const double w = jet.d2(2);
  EigenFrame frame;
  frame.jet = jet;
  frame.lambda1 = lambda1(u, v, w);
  frame.lambda2 = j_map(u, v, w);
  frame.v = g_map(u, v, w);
  frame.v_perp = Vector2d(-frame.v(1), frame.v(0));
  frame.eigen_residual = (unpack_symmetric(jet.d2) * frame.v - frame.lambda2 * frame.v).norm();
  return frame;
}

EigenFrame frame_at(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard) {
  return frame_from_jet(field.eval_all(x), x, guard);
}

Matrix2d grad_v_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard) {
  if (!guard.accepts(jet.d2)) throw DegeneracyError(x, jet.d2);
  return grad_g(jet.d2, guard) * jet.grad_d2;
}

Matrix2d grad_v(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard) {
  return grad_v_from_jet(field.eval_all(x), x, guard);
}

double a_tilde_prime_from_jet(const FieldJet& jet, const Vector2d& x, const DegeneracyGuard& guard) {
  const EigenFrame frame = frame_from_jet(jet, x, guard);
  const Matrix2d dv = grad_v_from_jet(jet, x, guard);
  return jet.grad.dot(dv * frame.v) + frame.lambda2 * frame.v.squaredNorm();
}

double a_tilde_prime(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard) {
  return a_tilde_prime_from_jet(field.eval_all(x), x, guard);
}

}  // namespace filament
