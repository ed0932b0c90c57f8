#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "filament/density.hpp"
#include "filament/errors.hpp"
#include "filament/kernel.hpp"
#include "oracles.hpp"

using namespace filament;
using oracle::max_fd_error;

namespace {

PointCloud uniform_cloud(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(gen), u(gen));
  return c;
}

// Gaussian density, first and second derivatives written out independently.
struct GaussOracle {
  double s1, s2;
  double f(double x, double y) const {
    return std::exp(-x * x / (2 * s1 * s1) - y * y / (2 * s2 * s2)) / (2 * std::numbers::pi * s1 * s2);
  }
  Vector3d d2(double x, double y) const {
    const double F = f(x, y);
    const double a = 1 / (s1 * s1);
    const double b = 1 / (s2 * s2);
    return Vector3d((x * x * a * a - a) * F, x * y * a * b * F, (y * y * b * b - b) * F);
  }
};

}  // namespace

TEST_CASE("single point kde at its own location") {
  PointCloud c;
  c.points.emplace_back(0, 0);
  const KdeField kde(c, 1.0);
  CHECK(kde.f(Vector2d(0, 0)) == doctest::Approx(6.0 / std::numbers::pi));
  CHECK(kde.grad(Vector2d(0, 0)).norm() == 0.0);
}

TEST_CASE("kde rejects bad input") {
  PointCloud c;
  CHECK_THROWS(KdeField(c, 1.0));
  c.points.emplace_back(0, 0);
  CHECK_THROWS(KdeField(c, 0.0));
  CHECK_THROWS(KdeField(c, -1.0));
}

TEST_CASE("binned kde equals the naive sum") {
  const KdeField kde(uniform_cloud(1000, -1, 1, 3), 0.3);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  double worst = 0.0;
  for (int q = 0; q < 50; ++q) {
    const Vector2d x(u(gen), u(gen));
    const FieldJet a = kde.eval_all(x);
    const FieldJet b = kde.eval_naive(x);
    const double scale = std::abs(b.f) + b.grad.norm() + b.d2.norm() + b.grad_d2.norm() + 1e-300;
    worst = std::max(worst, (std::abs(a.f - b.f) + (a.grad - b.grad).norm() + (a.d2 - b.d2).norm() +
                             (a.grad_d2 - b.grad_d2).norm()) /
                                scale);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("query away from all samples is zero") {
  const KdeField kde(uniform_cloud(100, 0, 1, 5), 0.2);
  const FieldJet j = kde.eval_all(Vector2d(5, 5));
  CHECK(j.f == 0.0);
  CHECK(j.grad.norm() == 0.0);
  CHECK(j.d2.norm() == 0.0);
  CHECK(j.grad_d2.norm() == 0.0);
}

TEST_CASE("kde derivatives match finite differences") {
  const KdeField kde(uniform_cloud(500, -1, 1, 6), 0.5);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vector2d> xs;
  for (int i = 0; i < 200; ++i) xs.emplace_back(u(gen), u(gen));
  double grad_err = 0.0;
  const double e = 1e-4;
  for (const auto& x : xs) {
    const Vector2d fd((kde.f(x + Vector2d(e, 0)) - kde.f(x - Vector2d(e, 0))) / (2 * e),
                      (kde.f(x + Vector2d(0, e)) - kde.f(x - Vector2d(0, e))) / (2 * e));
    grad_err = std::max(grad_err, (fd - kde.grad(x)).cwiseAbs().maxCoeff());
  }
  CHECK(grad_err < 1e-5);
  // Third-order terms carry 1/(n h^5); a smaller step keeps truncation below the bound.
  CHECK(max_fd_error(kde, xs, 1e-5) < 1e-5);
}

TEST_CASE("analytic model derivatives match finite differences") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<Vector2d> xs;
  for (int i = 0; i < 200; ++i) xs.emplace_back(u(gen), u(gen));
  CHECK(max_fd_error(ElongatedGaussian(2, 1), xs, 1e-4) < 1e-5);
  CHECK(max_fd_error(Ring(1, 0.1), xs, 1e-5) < 1e-5);
}

TEST_CASE("kde derivative normalization scales as h^(-2-k)") {
  PointCloud c;
  c.points.emplace_back(0, 0);
  const Vector2d z(0.2, 0.1);
  const double c_scale = 2.0;
  const FieldJet a = KdeField(c, 1.0).eval_all(z);
  const FieldJet b = KdeField(c, c_scale).eval_all(z * c_scale);
  CHECK(b.f == doctest::Approx(a.f * std::pow(c_scale, -2)));
  CHECK(b.grad(0) == doctest::Approx(a.grad(0) * std::pow(c_scale, -3)));
  CHECK(b.d2(1) == doctest::Approx(a.d2(1) * std::pow(c_scale, -4)));
  CHECK(b.grad_d2(0, 0) == doctest::Approx(a.grad_d2(0, 0) * std::pow(c_scale, -5)));
}

TEST_CASE("kde is nonnegative and integrates to one") {
  const double h = 0.4;
  const KdeField kde(ElongatedGaussian(1.0, 0.5).sample(300, 9), h);
  const double step = h / 4;
  double total = 0.0;
  double lowest = 0.0;
  for (double x = -6; x <= 6; x += step)
    for (double y = -4; y <= 4; y += step) {
      const double v = kde.f(Vector2d(x, y));
      lowest = std::min(lowest, v);
      total += v * step * step;
    }
  CHECK(lowest >= 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("elongated gaussian closed form") {
  const ElongatedGaussian eg(2, 1);
  const GaussOracle oracle{2, 1};
  const FieldJet j = eg.eval_all(Vector2d(0, 0));
  const double f0 = 1.0 / (4 * std::numbers::pi);
  CHECK(j.f == doctest::Approx(f0));
  CHECK(j.grad.norm() == 0.0);
  CHECK(j.d2(0) == doctest::Approx(-f0 / 4));
  CHECK(j.d2(1) == 0.0);
  CHECK(j.d2(2) == doctest::Approx(-f0));
  const Vector3d d2 = eg.d2(Vector2d(0.7, -0.4));
  const Vector3d want = oracle.d2(0.7, -0.4);
  CHECK((d2 - want).norm() < 1e-14);
  CHECK_THROWS_AS(ElongatedGaussian(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(ElongatedGaussian(1, 2), std::invalid_argument);
}

TEST_CASE("ring has zero gradient on its circle and integrates to one") {
  const Ring ring(1, 0.1);
  CHECK(ring.grad(Vector2d(1, 0)).norm() < 1e-14);
  CHECK(ring.grad(Vector2d(0, -1)).norm() < 1e-13);
  // Polar trapezoid over the radial profile as an independent normalization check.
  double total = 0.0;
  const double dr = 1e-4;
  for (double r = 0.2; r < 1.8; r += dr) total += ring.f(Vector2d(r, 0)) * 2 * std::numbers::pi * r * dr;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  CHECK_THROWS_AS(Ring(0.3, 0.1), std::invalid_argument);
}

TEST_CASE("expected d2 has O(h^2) bias") {
  const ElongatedGaussian eg(2, 1);
  const Vector2d x(0.3, 0.2);
  const Vector3d truth = eg.d2(x);
  const double e1 = (expected_d2(eg, x, 0.1) - truth).norm();
  const double e2 = (expected_d2(eg, x, 0.05) - truth).norm();
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("expected d2 of a locally constant density vanishes") {
  // Flat plateau: uniform on [-5, 5]^2 seen from the center with h = 1.
  struct Plateau final : DensityField {
    FieldJet eval_all(const Vector2d& x) const override {
      FieldJet j;
      j.f = x.cwiseAbs().maxCoeff() <= 5 ? 0.01 : 0.0;
      return j;
    }
  };
  CHECK(expected_d2(Plateau(), Vector2d(0, 0), 1.0).norm() < 1e-12);
}

TEST_CASE("expected d2 agrees with monte carlo kde average") {
  const ElongatedGaussian eg(2, 1);
  const Vector2d x(0.3, 0);
  const double h = 0.2;
  const std::size_t reps = 2000;
  const std::size_t n = 200;
  Vector3d sum = Vector3d::Zero();
  Vector3d sum2 = Vector3d::Zero();
  for (std::size_t r = 0; r < reps; ++r) {
    const Vector3d d = KdeField(eg.sample(n, 1000 + r), h).d2(x);
    sum += d;
    sum2 += d.cwiseProduct(d);
  }
  const Vector3d mean = sum / reps;
  const Vector3d se = ((sum2 / reps - mean.cwiseProduct(mean)) / reps).cwiseSqrt();
  const Vector3d want = expected_d2(eg, x, h);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(mean(k) - want(k)) < 3 * se(k));
}

TEST_CASE("sampling is deterministic and has the right moments") {
  const ElongatedGaussian eg(2, 1);
  const PointCloud a = eg.sample(1000, 11);
  const PointCloud b = eg.sample(1000, 11);
  REQUIRE(a.n() == b.n());
  bool same = true;
  for (std::size_t i = 0; i < a.n(); ++i) same = same && a.points[i] == b.points[i];
  CHECK(same);

  const PointCloud big = eg.sample(100000, 12);
  Eigen::Vector2d m = Eigen::Vector2d::Zero();
  for (const auto& p : big.points) m += p;
  m /= big.n();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : big.points) cov += (p - m) * (p - m).transpose();
  cov /= big.n() - 1;
  CHECK(cov(0, 0) == doctest::Approx(4.0).epsilon(0.05));
  CHECK(cov(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(cov(0, 1)) < 0.05);

  const Ring ring(1, 0.1);
  const PointCloud rc = ring.sample(100000, 13);
  double mr = 0.0;
  for (const auto& p : rc.points) mr += p.norm();
  mr /= rc.n();
  CHECK(std::abs(mr - ring.mean_radius()) < 0.01);
}

TEST_CASE("ring mean radius against a direct radial sum") {
  const Ring ring(1, 0.1);
  double num = 0.0;
  double den = 0.0;
  for (double r = 0.3; r < 1.7; r += 1e-5) {
    const double w = r * std::exp(-(r - 1) * (r - 1) / 0.02);
    num += r * w;
    den += w;
  }
  CHECK(ring.mean_radius() == doctest::Approx(num / den).epsilon(1e-8));
}

TEST_CASE("default bandwidth") {
  CHECK(default_bandwidth(512, 512) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(default_bandwidth(10000, 1) == doctest::Approx(std::pow(10.0, -4.0 / 9.0)));
  CHECK(default_bandwidth(2000, 1) / default_bandwidth(1000, 1) == doctest::Approx(std::pow(2.0, -1.0 / 9.0)));
}

TEST_CASE("csv parsing") {
  std::istringstream ok("x,y\n1,2\n-3.5, 4e-1\n");
  const PointCloud c = parse_points_csv(ok);
  REQUIRE(c.n() == 2);
  CHECK(c.points[1](1) == doctest::Approx(0.4));

  std::istringstream bad("1,2\n3,oops\n");
  try {
    parse_points_csv(bad);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  std::istringstream late_header("1,2\nx,y\n");
  CHECK_THROWS_AS(parse_points_csv(late_header), ConfigError);
}
