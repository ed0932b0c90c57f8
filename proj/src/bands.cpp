#include "filament/bands.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace filament {

BandIngredients ingredients_at(const DensityField& field, const Vector2d& x, const KernelConstants& constants,
                               const DegeneracyGuard& guard) {
  const FieldJet jet = field.eval_all(x);
  if (!(jet.f > 0.0)) throw std::domain_error("ingredients_at: density is not positive");
  const EigenFrame frame = frame_from_jet(jet, x, guard);
  const Matrix23d gt = grad_g(jet.d2, guard);
  const Matrix2d dv = gt * jet.grad_d2;

  BandIngredients b;
  b.f = jet.f;
  b.lambda2 = frame.lambda2;
  b.v_norm = frame.v.norm();
  b.a_vec = gt.transpose() * jet.grad;
  b.norm_a_r = r_norm(b.a_vec, constants);
  if (!(b.norm_a_r > 0.0)) throw FlatFilamentError(x);
  b.a_tilde_prime = jet.grad.dot(dv * frame.v) + frame.lambda2 * frame.v.squaredNorm();
  b.w_vec = b.a_vec / b.a_tilde_prime;
  b.g = b.a_tilde_prime / (std::sqrt(b.f) * b.v_norm * b.norm_a_r);
  return b;
}

namespace {

std::vector<Vector2d> unit_tangents(const Polyline& line) {
  const auto& p = line.points;
  const std::size_t m = p.size();
  std::vector<Vector2d> t(m);
  for (std::size_t i = 0; i < m; ++i) {
    Vector2d d;
    if (line.closed) {
      d = p[(i + 1) % m] - p[(i + m - 1) % m];
    } else if (i == 0) {
      d = p[1] - p[0];
    } else if (i + 1 == m) {
      d = p[m - 1] - p[m - 2];
    } else {
      d = p[i + 1] - p[i - 1];
    }
    t[i] = d.normalized();
  }
  return t;
}

}  // namespace

std::vector<double> c_integrand(const Polyline& polyline, const DensityField& field,
                                const KernelConstants& constants, const DegeneracyGuard& guard) {
  if (polyline.points.size() < 2) throw std::invalid_argument("constant_c: need at least two vertices");
  const auto tangents = unit_tangents(polyline);
  std::vector<double> out(polyline.points.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const BandIngredients b = ingredients_at(field, polyline.points[i], constants, guard);
    const Matrix2d root = sqrt_psd(omega_at(b.a_vec, constants.b1));
    out[i] = (root * tangents[i]).norm() / b.norm_a_r;
  }
  return out;
}

double constant_c(const Polyline& polyline, const DensityField& field, const KernelConstants& constants,
                  const DegeneracyGuard& guard) {
  const auto values = c_integrand(polyline, field, constants, guard);
  const auto& p = polyline.points;
  double integral = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) integral += 0.5 * (values[i - 1] + values[i]) * (p[i] - p[i - 1]).norm();
  if (polyline.closed && p.size() > 2) integral += 0.5 * (values.back() + values.front()) * (p.front() - p.back()).norm();
  return std::log(std::sqrt(constants.b2 / 2.0) / std::numbers::pi * integral);
}

double b_h_of(double z, double h, double c) {
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("b_h_of: need 0 < h < 1");
  const double root = std::sqrt(2.0 * std::log(1.0 / h));
  return root + (z + c) / root;
}

double z_from_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("z_from_level: need 0 < alpha < 1");
  return -std::log(-0.5 * std::log1p(-alpha));
}

BandResult band_radii(const FilamentEstimate& estimate, const DensityField& field,
                      const KernelConstants& constants, std::size_t n, double h, double z,
                      const DegeneracyGuard& guard) {
  const auto& vertices = estimate.polyline.points;
  if (vertices.empty()) throw std::invalid_argument("band_radii: empty polyline");
  BandResult band;
  band.z = z;
  band.h = h;
  band.n = n;
  band.c = constant_c(estimate.polyline, field, constants, guard);
  band.b_h = b_h_of(z, h, band.c);
  const double scale = std::sqrt(static_cast<double>(n) * std::pow(h, 6));
  for (const auto& x : vertices) {
    const double g = ingredients_at(field, x, constants, guard).g;
    band.g.push_back(g);
    band.radii.push_back(band.b_h / (scale * std::abs(g)));
  }
  return band;
}

double pointwise_sd(const DensityField& field, const Vector2d& x, const KernelConstants& constants,
                    std::size_t n, double h, const DegeneracyGuard& guard) {
  const BandIngredients b = ingredients_at(field, x, constants, guard);
  const double var = b.f * b.w_vec.dot(constants.r_matrix * b.w_vec);
  return std::sqrt(var) / std::sqrt(static_cast<double>(n) * std::pow(h, 6));
}

}  // namespace filament
