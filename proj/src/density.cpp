#include "filament/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "filament/errors.hpp"
#include "filament/kernel.hpp"
#include "filament/quadrature.hpp"
#include "filament/rng.hpp"

namespace filament {

namespace {

void accumulate(FieldJet& acc, const KernelJet<double>& k) {
  acc.f += k.value;
  acc.grad += k.grad;
  acc.d2 += k.d2;
  acc.grad_d2 += k.grad_d2;
}

void scale_kde(FieldJet& jet, double n, double h) {
  const double s0 = 1.0 / (n * h * h);
  jet.f *= s0;
  jet.grad *= s0 / h;
  jet.d2 *= s0 / (h * h);
  jet.grad_d2 *= s0 / (h * h * h);
}

}  // namespace

KdeField::KdeField(PointCloud cloud, double h) : cloud_(std::move(cloud)), h_(h), n_(cloud_.size()) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("build_kde: bandwidth must be positive");
  if (n_ == 0) throw std::invalid_argument("build_kde: empty point cloud");

  Vector2d lo = cloud_.points.front();
  Vector2d hi = lo;
  for (const auto& p : cloud_.points) {
    if (!p.allFinite()) throw std::invalid_argument("build_kde: non-finite sample");
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  origin_ = lo;
  nx_ = static_cast<long>(std::floor((hi(0) - lo(0)) / h_)) + 1;
  ny_ = static_cast<long>(std::floor((hi(1) - lo(1)) / h_)) + 1;
  if (static_cast<double>(nx_) * static_cast<double>(ny_) > 1e8)
    throw std::invalid_argument("build_kde: bin grid too large for this bandwidth");

  const auto cell_of = [&](const Vector2d& p) {
    const long cx = std::min(nx_ - 1, static_cast<long>((p(0) - origin_(0)) / h_));
    const long cy = std::min(ny_ - 1, static_cast<long>((p(1) - origin_(1)) / h_));
    return static_cast<std::size_t>(cy * nx_ + cx);
  };
  const std::size_t cells = static_cast<std::size_t>(nx_ * ny_);
  cell_start_.assign(cells + 1, 0);
  for (const auto& p : cloud_.points) ++cell_start_[cell_of(p) + 1];
  for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  binned_.resize(n_);
  for (const auto& p : cloud_.points) binned_[fill[cell_of(p)]++] = p;
}

FieldJet KdeField::eval_all(const Vector2d& x) const {
  FieldJet jet;
  const long cx = static_cast<long>(std::floor((x(0) - origin_(0)) / h_));
  const long cy = static_cast<long>(std::floor((x(1) - origin_(1)) / h_));
  const double inv_h = 1.0 / h_;
  for (long j = std::max(0L, cy - 1); j <= std::min(ny_ - 1, cy + 1); ++j) {
    for (long i = std::max(0L, cx - 1); i <= std::min(nx_ - 1, cx + 1); ++i) {
      const std::size_t c = static_cast<std::size_t>(j * nx_ + i);
      for (std::size_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
        const Vector2d z = (x - binned_[k]) * inv_h;
        if (z.squaredNorm() >= 1.0) continue;
        accumulate(jet, kernel_jet(z));
      }
    }
  }
  scale_kde(jet, static_cast<double>(n_), h_);
  return jet;
}

FieldJet KdeField::eval_naive(const Vector2d& x) const {
  FieldJet jet;
  for (const auto& p : cloud_.points) accumulate(jet, kernel_jet(Vector2d((x - p) / h_)));
  scale_kde(jet, static_cast<double>(n_), h_);
  return jet;
}

KdeField build_kde(PointCloud cloud, double h) { return KdeField(std::move(cloud), h); }

ElongatedGaussian::ElongatedGaussian(double sigma1, double sigma2) : s1_(sigma1), s2_(sigma2) {
  if (!(sigma1 > sigma2 && sigma2 > 0.0))
    throw std::invalid_argument("elongated_gaussian: need sigma1 > sigma2 > 0");
}

FieldJet ElongatedGaussian::eval_all(const Vector2d& x) const {
  const Vector2d inv_var(1.0 / (s1_ * s1_), 1.0 / (s2_ * s2_));
  const Vector2d a = -x.cwiseProduct(inv_var);
  const double f =
      std::exp(-0.5 * x.cwiseProduct(x).dot(inv_var)) / (2.0 * std::numbers::pi * s1_ * s2_);
  FieldJet jet;
  jet.f = f;
  jet.grad = a * f;
  jet.d2 << (a(0) * a(0) - inv_var(0)) * f, a(0) * a(1) * f, (a(1) * a(1) - inv_var(1)) * f;
  const double f30 = (a(0) * a(0) * a(0) - 3.0 * a(0) * inv_var(0)) * f;
  const double f21 = (a(0) * a(0) * a(1) - a(1) * inv_var(0)) * f;
  const double f12 = (a(0) * a(1) * a(1) - a(0) * inv_var(1)) * f;
  const double f03 = (a(1) * a(1) * a(1) - 3.0 * a(1) * inv_var(1)) * f;
  jet.grad_d2 << f30, f21, f21, f12, f12, f03;
  return jet;
}

PointCloud ElongatedGaussian::sample(std::size_t n, std::uint64_t seed) const {
  auto gen = make_stream(seed);
  std::normal_distribution<double> normal;
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = normal(gen);
    const double z2 = normal(gen);
    cloud.points.emplace_back(s1_ * z1, s2_ * z2);
  }
  return cloud;
}

namespace {

// int_0^inf r^p exp(-(r - r0)^2 / (2 s^2)) dr over the effective support.
double radial_moment(double r0, double s, int p) {
  const double a = std::max(0.0, r0 - 12.0 * s);
  const double b = r0 + 12.0 * s;
  static const GaussLegendre gl = gauss_legendre(200);
  double acc = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
    const double rho = (r - r0) / s;
    acc += gl.weights[i] * std::pow(r, p) * std::exp(-0.5 * rho * rho);
  }
  return 0.5 * (b - a) * acc;
}

}  // namespace

Ring::Ring(double r0, double s) : r0_(r0), s_(s) {
  if (!(s > 0.0 && r0 > 3.0 * s)) throw std::invalid_argument("ring: need r0 > 3 s > 0");
  c_ = 1.0 / (2.0 * std::numbers::pi * radial_moment(r0_, s_, 1));
}

double Ring::mean_radius() const { return radial_moment(r0_, s_, 2) / radial_moment(r0_, s_, 1); }

FieldJet Ring::eval_all(const Vector2d& x) const {
  FieldJet jet;
  const double r = x.norm();
  const double rho = (r - r0_) / s_;
  const double e = c_ * std::exp(-0.5 * rho * rho);
  jet.f = e;
  if (r < 1e-12) return jet;

  // Radial profile F(r) and its derivatives.
  const double f1 = -rho / s_ * e;
  const double f2 = (rho * rho - 1.0) / (s_ * s_) * e;
  const double f3 = (3.0 * rho - rho * rho * rho) / (s_ * s_ * s_) * e;
  const double r2 = r * r;
  const double q = f1 / r;
  const double p = f2 / r2 - f1 / (r2 * r);
  const double m = f3 / (r2 * r) - 3.0 * f2 / (r2 * r2) + 3.0 * f1 / (r2 * r2 * r);

  const double x1 = x(0);
  const double x2 = x(1);
  jet.grad = q * x;
  jet.d2 << p * x1 * x1 + q, p * x1 * x2, p * x2 * x2 + q;
  const double f30 = m * x1 * x1 * x1 + 3.0 * p * x1;
  const double f21 = m * x1 * x1 * x2 + p * x2;
  const double f12 = m * x1 * x2 * x2 + p * x1;
  const double f03 = m * x2 * x2 * x2 + 3.0 * p * x2;
  jet.grad_d2 << f30, f21, f21, f12, f12, f03;
  return jet;
}

PointCloud Ring::sample(std::size_t n, std::uint64_t seed) const {
  auto gen = make_stream(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  // Radius: proposal r0 + s N accepted with probability r / r_cap.
  const double r_cap = r0_ + 10.0 * s_;
  PointCloud cloud;
  cloud.points.reserve(n);
  while (cloud.points.size() < n) {
    const double r = r0_ + s_ * normal(gen);
    if (r <= 0.0) continue;
    if (uniform(gen) * r_cap > r) continue;
    const double phi = 2.0 * std::numbers::pi * uniform(gen);
    cloud.points.emplace_back(r * std::cos(phi), r * std::sin(phi));
  }
  return cloud;
}

Vector3d expected_d2(const DensityField& model, const Vector2d& x, double h, int nodes) {
  if (!(h > 0.0)) throw std::invalid_argument("expected_d2: bandwidth must be positive");
  const DiskRule rule(static_cast<std::size_t>(nodes), 2 * static_cast<std::size_t>(nodes));
  Vector3d acc = Vector3d::Zero();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector2d& z = rule.point(i);
    acc += rule.weight(i) * model.f(x - h * z) * kernel_d2(z);
  }
  return acc / (h * h);
}

Vector2d expected_grad(const DensityField& model, const Vector2d& x, double h, int nodes) {
  if (!(h > 0.0)) throw std::invalid_argument("expected_grad: bandwidth must be positive");
  const DiskRule rule(static_cast<std::size_t>(nodes), 2 * static_cast<std::size_t>(nodes));
  Vector2d acc = Vector2d::Zero();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector2d& z = rule.point(i);
    const double k1 = kernel_radial<double, 1>(z.squaredNorm())[1];
    acc += rule.weight(i) * model.f(x - h * z) * 2.0 * k1 * z;
  }
  return acc / h;
}

double default_bandwidth(std::size_t n, double beta) {
  if (n < 2 || !(beta > 0.0)) throw std::invalid_argument("default_bandwidth: need n >= 2 and beta > 0");
  return std::pow(beta / static_cast<double>(n), 1.0 / 9.0);
}

namespace {

bool parse_row(const std::string& line, Vector2d& out) {
  std::istringstream ss(line);
  std::string a;
  std::string b;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) return false;
  std::string rest;
  if (std::getline(ss, rest) && rest.find_first_not_of(" \t\r") != std::string::npos) return false;
  const auto to_double = [](const std::string& s, double& v) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return false;
    const char* begin = s.c_str() + first;
    char* end = nullptr;
    v = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0' && std::isfinite(v);
  };
  return to_double(a, out(0)) && to_double(b, out(1));
}

}  // namespace

PointCloud parse_points_csv(std::istream& in) {
  PointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Vector2d p;
    if (parse_row(line, p)) {
      cloud.points.push_back(p);
    } else if (line_no == 1) {
      continue;  // header
    } else {
      throw ConfigError("malformed CSV row at line " + std::to_string(line_no) + ": '" + line + "'");
    }
  }
  if (cloud.points.empty()) throw ConfigError("CSV contains no data rows");
  return cloud;
}

PointCloud read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open CSV file: " + path);
  return parse_points_csv(in);
}

void write_points_csv(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out << "x,y\n" << std::setprecision(17);
  for (const auto& p : cloud.points) out << p(0) << ',' << p(1) << '\n';
}

}  // namespace filament
