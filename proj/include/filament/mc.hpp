#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "filament/bands.hpp"
#include "filament/density.hpp"
#include "filament/diagnostics.hpp"
#include "filament/flow.hpp"
#include "filament/kernel.hpp"
#include "filament/ridge.hpp"

namespace filament {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Exceptions are
/// rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

/// Seed of replicate `rep` at sample size `n`.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n, std::size_t rep);

struct ExperimentConfig {
  std::shared_ptr<const AnalyticModel> model;
  std::vector<std::size_t> n_grid;
  double beta = 1.0;
  std::size_t reps = 1;
  std::vector<double> z_grid;
  std::uint64_t seed = 0;
  std::vector<Vector2d> starts;
  /// Flow for the true field; the estimate uses the same settings except for
  /// the step, which is kde_step_factor * h when positive.
  FlowSettings flow;
  double kde_step_factor = 0.25;
  double a_star = 1.0;
  DegeneracyGuard guard;
  unsigned threads = 1;
  /// Fraction of replicates allowed to fail before the run errors.
  double max_failure_rate = 0.1;
};

/// Throws ConfigError on an unusable configuration.
void validate(const ExperimentConfig& config, std::size_t min_grid = 1);

FlowSettings kde_flow(const ExperimentConfig& config, double h);

struct ReplicateFailure {
  std::size_t rep = 0;
  std::string reason;
};

struct SupDeviationLevel {
  std::size_t n = 0;
  double h = 0.0;
  double c = 0.0;
  std::vector<double> sup;  // per retained replicate, ordered by replicate id
  std::vector<std::size_t> rep_ids;
  std::vector<std::size_t> unpaired_starts;  // per retained replicate
  std::vector<double> b_h;  // per z
  std::vector<double> cdf;  // empirical P(sup < b_h(z)) per z
  std::vector<double> limit;  // exp(-2 exp(-z)) per z
  std::vector<ReplicateFailure> failures;
};

struct SupDeviationResult {
  std::vector<FilamentHit> true_hits;
  std::vector<SupDeviationLevel> levels;
};

SupDeviationResult run_sup_deviation(const ExperimentConfig& config);

struct PointwiseRecord {
  std::size_t rep = 0;
  double projection = 0.0;  // sqrt(n h^6) <dev, V/|V|>
  double theta_diff = 0.0;
  double phi1 = 0.0;
  DeviationReport report;
};

struct PointwiseLevel {
  std::size_t n = 0;
  double h = 0.0;
  std::vector<PointwiseRecord> records;
  std::vector<ReplicateFailure> failures;
  double mean = 0.0;
  double variance = 0.0;
  double standard_error = 0.0;
  /// f |W|_R^2 |V|^2 at the true hit.
  double theoretical_variance = 0.0;
  double theoretical_variance_alt = 0.0;
  /// corr(theta_hat - theta, -phi1)
  double phi1_correlation = 0.0;
  double median_residual_ratio = 0.0;
  double median_tangential_ratio = 0.0;
};

struct PointwiseResult {
  FilamentHit true_hit;
  std::vector<PointwiseLevel> levels;
};

PointwiseResult run_pointwise(const ExperimentConfig& config, const Vector2d& x_star);

/// Least-squares slope of y on x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct RateLevel {
  std::size_t n = 0;
  double h = 0.0;
  double rate = 0.0;  // sqrt(log n / (n h^5))
  std::vector<double> errors;
  double median_error = 0.0;
  std::vector<ReplicateFailure> failures;
};

struct RateResult {
  std::vector<RateLevel> levels;
  double slope = 0.0;
};

/// Sup over t of |Xhat(t) - X(t)| from config.starts.front().
RateResult run_rate(const ExperimentConfig& config);

struct GaussFieldConfig {
  std::vector<double> h_grid;
  double noise_spacing = 1.0 / 16.0;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  Polyline filament;
  std::vector<double> z_grid;
  std::size_t probes = 20;
  double cell_budget = 1e7;
  unsigned threads = 1;
  DegeneracyGuard guard;
};

struct GaussFieldLevel {
  double h = 0.0;
  double c = 0.0;
  std::size_t cells = 0;
  std::size_t sample_points = 0;
  std::vector<double> probe_variance;  // exact variance of the discretized field
  std::vector<double> sup;
  std::vector<double> b_h;
  std::vector<double> cdf;
  std::vector<double> limit;
  double b_h_zero = 0.0;
  double cdf_at_zero = 0.0;
  double ks = 0.0;
};

struct GaussFieldResult {
  std::vector<GaussFieldLevel> levels;
};

GaussFieldResult simulate_gauss_field(const GaussFieldConfig& config, const DensityField& field,
                                      const KernelConstants& constants);

/// One-sample Kolmogorov-Smirnov distance of `values` to the distribution `cdf`.
double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf);

/// r_h(x + y, x) for the rescaled field at x = x_star / h, by quadrature.
double covariance_rh(const DensityField& field, const KernelConstants& constants, const Vector2d& x_star,
                     double h, const Vector2d& y, bool swap = false, int nodes = 200,
                     const DegeneracyGuard& guard = {});

struct CovarianceReport {
  Vector2d x_star = Vector2d::Zero();
  double h = 0.0;
  Matrix2d fitted = Matrix2d::Zero();
  Matrix2d lambda1 = Matrix2d::Zero();  // derived form
  Matrix2d lambda1_printed = Matrix2d::Zero();
  Matrix2d lambda2 = Matrix2d::Zero();
  double residual_lambda2 = 0.0;  // |fitted - L2|_F / |L2|_F
  double residual_full = 0.0;     // against L1 + L2
  double residual_printed = 0.0;  // against printed L1 + L2
  double symmetry_error = 0.0;
  double self_correlation = 0.0;  // r_h(x, x)
  std::vector<double> eps;
};

CovarianceReport covariance_expansion_check(const DensityField& field, const KernelConstants& constants,
                                            const Vector2d& x_star, double h,
                                            const std::vector<double>& eps = {0.01, 0.02, 0.03, 0.04, 0.05},
                                            const DegeneracyGuard& guard = {});

}  // namespace filament
