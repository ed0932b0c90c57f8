#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "filament/types.hpp"

namespace filament {

/// f, grad f, d2f = (f20, f11, f02) and grad d2f at one point.
struct FieldJet {
  double f = 0.0;
  Vector2d grad = Vector2d::Zero();
  Vector3d d2 = Vector3d::Zero();
  /// Row r is grad of d2(r): [[f30, f21], [f21, f12], [f12, f03]].
  Matrix32d grad_d2 = Matrix32d::Zero();
};

class DensityField {
 public:
  virtual ~DensityField() = default;
  virtual FieldJet eval_all(const Vector2d& x) const = 0;

  double f(const Vector2d& x) const { return eval_all(x).f; }
  Vector2d grad(const Vector2d& x) const { return eval_all(x).grad; }
  Vector3d d2(const Vector2d& x) const { return eval_all(x).d2; }
  Matrix32d grad_d2(const Vector2d& x) const { return eval_all(x).grad_d2; }
};

struct PointCloud {
  std::vector<Vector2d> points;

  std::size_t n() const noexcept { return points.size(); }
  std::size_t size() const noexcept { return points.size(); }
};

/// Kernel density estimate with derivatives through third order. Samples are
/// binned on a uniform grid of cell size h so a query visits a 3x3 block.
class KdeField final : public DensityField {
 public:
  KdeField(PointCloud cloud, double h);

  FieldJet eval_all(const Vector2d& x) const override;
  /// Same estimate by a plain loop over every sample.
  FieldJet eval_naive(const Vector2d& x) const;

  double bandwidth() const noexcept { return h_; }
  std::size_t n() const noexcept { return n_; }
  const PointCloud& cloud() const noexcept { return cloud_; }

 private:
  PointCloud cloud_;
  double h_;
  std::size_t n_;
  Vector2d origin_;
  long nx_ = 1;
  long ny_ = 1;
  std::vector<std::size_t> cell_start_;
  std::vector<Vector2d> binned_;
};

KdeField build_kde(PointCloud cloud, double h);

class AnalyticModel : public DensityField {
 public:
  virtual PointCloud sample(std::size_t n, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

/// Centered Gaussian with covariance diag(sigma1^2, sigma2^2), sigma1 > sigma2.
/// Its filament is the major (x1) axis.
class ElongatedGaussian final : public AnalyticModel {
 public:
  ElongatedGaussian(double sigma1, double sigma2);

  FieldJet eval_all(const Vector2d& x) const override;
  PointCloud sample(std::size_t n, std::uint64_t seed) const override;
  std::string name() const override { return "elongated_gaussian"; }

  double sigma1() const noexcept { return s1_; }
  double sigma2() const noexcept { return s2_; }

 private:
  double s1_;
  double s2_;
};

/// f(x) = C exp(-(|x| - r0)^2 / (2 s^2)); the filament is the circle |x| = r0.
class Ring final : public AnalyticModel {
 public:
  Ring(double r0, double s);

  FieldJet eval_all(const Vector2d& x) const override;
  PointCloud sample(std::size_t n, std::uint64_t seed) const override;
  std::string name() const override { return "ring"; }

  double r0() const noexcept { return r0_; }
  double s() const noexcept { return s_; }
  double normalization() const noexcept { return c_; }
  /// Mean of |X| under the model.
  double mean_radius() const;

 private:
  double r0_;
  double s_;
  double c_;
};

/// E d2 fhat(x) = h^-2 int d2K(z) f(x - hz) dz, by quadrature over the unit disk.
Vector3d expected_d2(const DensityField& model, const Vector2d& x, double h, int nodes = 48);
/// E grad fhat(x) = h^-1 int grad K(z) f(x - hz) dz.
Vector2d expected_grad(const DensityField& model, const Vector2d& x, double h, int nodes = 48);

/// h = (beta / n)^(1/9).
double default_bandwidth(std::size_t n, double beta);

/// Two numeric columns per row, comma separated, optional single header line.
PointCloud read_points_csv(const std::string& path);
PointCloud parse_points_csv(std::istream& in);
void write_points_csv(const std::string& path, const PointCloud& cloud);

}  // namespace filament
