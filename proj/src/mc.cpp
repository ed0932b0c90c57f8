#include "filament/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "filament/errors.hpp"
#include "filament/quadrature.hpp"
#include "filament/rng.hpp"

namespace filament {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t n, std::size_t rep) {
  return splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(n) * 0x100000001b3ULL + rep));
}

void validate(const ExperimentConfig& config, std::size_t min_grid) {
  if (!config.model) throw ConfigError("experiment: no model");
  if (config.reps < 1) throw ConfigError("experiment: reps must be at least 1");
  if (config.n_grid.size() < min_grid)
    throw ConfigError("experiment: n_grid needs at least " + std::to_string(min_grid) + " entries");
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    if (config.n_grid[i] < 2) throw ConfigError("experiment: sample sizes must be at least 2");
    if (i > 0 && config.n_grid[i] <= config.n_grid[i - 1]) throw ConfigError("experiment: n_grid must increase");
  }
  if (!(config.beta > 0.0)) throw ConfigError("experiment: beta must be positive");
  if (config.starts.empty()) throw ConfigError("experiment: no start points");
  if (!(std::abs(config.a_star) <= config.flow.t_max)) throw ConfigError("experiment: need |a_star| <= t_max");
}

FlowSettings kde_flow(const ExperimentConfig& config, double h) {
  FlowSettings flow = config.flow;
  if (config.kde_step_factor > 0.0) flow.step = config.kde_step_factor * h;
  flow.step = std::min(flow.step, flow.t_max);
  return flow;
}

namespace {

double sqrt_nh6(std::size_t n, double h) { return std::sqrt(static_cast<double>(n) * std::pow(h, 6)); }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

void check_failures(std::size_t failed, std::size_t reps, double max_rate, const std::string& what) {
  if (static_cast<double>(failed) >= max_rate * static_cast<double>(reps) && failed > 0)
    throw ExperimentFailure(what + ": " + std::to_string(failed) + " of " + std::to_string(reps) +
                            " replicates failed");
}

double limit_law(double z) { return std::exp(-2.0 * std::exp(-z)); }

}  // namespace

SupDeviationResult run_sup_deviation(const ExperimentConfig& config) {
  validate(config);
  const AnalyticModel& model = *config.model;
  const KernelConstants& constants = kernel_constants();

  SupDeviationResult result;
  std::vector<Vector2d> true_points;
  std::vector<double> true_g;
  for (const auto& s : config.starts) {
    FilamentHit hit;
    try {
      hit = find_theta(model, s, config.flow, config.guard, config.a_star);
    } catch (const std::exception&) {
      hit.start = s;
    }
    result.true_hits.push_back(hit);
    if (hit.found) {
      true_points.push_back(hit.point);
      true_g.push_back(ingredients_at(model, hit.point, constants, config.guard).g);
    } else {
      true_g.push_back(0.0);
    }
  }
  if (true_points.empty()) throw ConfigError("sup deviation: no start reaches the true filament");
  const Polyline truth = assemble_polyline(true_points, 1e-3);
  const double c = constant_c(truth, model, constants, config.guard);

  for (const std::size_t n : config.n_grid) {
    SupDeviationLevel level;
    level.n = n;
    level.h = default_bandwidth(n, config.beta);
    level.c = c;
    const FlowSettings flow = kde_flow(config, level.h);
    const double scale = sqrt_nh6(n, level.h);

    std::vector<double> sup(config.reps, -1.0);
    std::vector<std::size_t> unpaired(config.reps, 0);
    std::vector<std::string> reason(config.reps);
    parallel_for(config.reps, config.threads, [&](std::size_t rep) {
      try {
        const KdeField kde(model.sample(n, replicate_seed(config.seed, n, rep)), level.h);
        double best = -1.0;
        for (std::size_t i = 0; i < config.starts.size(); ++i) {
          const FilamentHit& t = result.true_hits[i];
          if (!t.found) continue;
          FilamentHit e;
          try {
            e = find_theta(kde, config.starts[i], flow, config.guard, config.a_star);
          } catch (const std::exception&) {
          }
          if (!e.found) {
            ++unpaired[rep];
            continue;
          }
          best = std::max(best, std::abs(true_g[i]) * scale * (e.point - t.point).norm());
        }
        if (best < 0.0) reason[rep] = "no estimated hit paired with a true hit";
        sup[rep] = best;
      } catch (const std::exception& ex) {
        reason[rep] = ex.what();
      }
    });
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      if (!reason[rep].empty()) {
        level.failures.push_back({rep, reason[rep]});
      } else {
        level.sup.push_back(sup[rep]);
        level.rep_ids.push_back(rep);
        level.unpaired_starts.push_back(unpaired[rep]);
      }
    }
    check_failures(level.failures.size(), config.reps, config.max_failure_rate, "sup deviation");
    if (level.h < 1.0) {
      for (const double z : config.z_grid) {
        const double b = b_h_of(z, level.h, c);
        const auto below = std::count_if(level.sup.begin(), level.sup.end(), [&](double s) { return s < b; });
        level.b_h.push_back(b);
        level.cdf.push_back(static_cast<double>(below) / static_cast<double>(level.sup.size()));
        level.limit.push_back(limit_law(z));
      }
    }
    result.levels.push_back(std::move(level));
  }
  return result;
}

PointwiseResult run_pointwise(const ExperimentConfig& config, const Vector2d& x_star) {
  validate(config);
  const AnalyticModel& model = *config.model;
  const KernelConstants& constants = kernel_constants();

  PointwiseResult result;
  result.true_hit = find_theta(model, x_star, config.flow, config.guard, config.a_star);
  if (!result.true_hit.found) throw ConfigError("pointwise: x_star does not reach the true filament");
  const Vector2d x = result.true_hit.point;
  const FieldJet jet = model.eval_all(x);
  const BandIngredients ing = ingredients_at(model, x, constants, config.guard);
  const double v2 = ing.v_norm * ing.v_norm;
  const double theory = ing.f * ing.w_vec.dot(constants.r_matrix * ing.w_vec) * v2;
  const double theory_alt = ing.f * ing.norm_a_r * ing.norm_a_r / (ing.a_tilde_prime * ing.a_tilde_prime) * v2;

  for (const std::size_t n : config.n_grid) {
    PointwiseLevel level;
    level.n = n;
    level.h = default_bandwidth(n, config.beta);
    level.theoretical_variance = theory;
    level.theoretical_variance_alt = theory_alt;
    const FlowSettings flow = kde_flow(config, level.h);
    const double scale = sqrt_nh6(n, level.h);
    const Vector3d centre = expected_d2(model, x, level.h);

    std::vector<std::optional<PointwiseRecord>> records(config.reps);
    std::vector<std::string> reason(config.reps);
    parallel_for(config.reps, config.threads, [&](std::size_t rep) {
      try {
        const KdeField kde(model.sample(n, replicate_seed(config.seed, n, rep)), level.h);
        const FilamentHit est = find_theta(kde, x_star, flow, config.guard, config.a_star);
        if (!est.found) {
          reason[rep] = "no ridge crossing on the estimated curve";
          return;
        }
        PointwiseRecord r;
        r.rep = rep;
        r.report = decompose(model, result.true_hit, est, config.guard);
        r.projection = scale * r.report.normal_comp;
        r.theta_diff = r.report.theta_diff;
        r.phi1 = jet.grad.isZero(0.0) ? 0.0 : ing.a_vec.dot(kde.d2(x) - centre) / ing.a_tilde_prime;
        records[rep] = r;
      } catch (const std::exception& ex) {
        reason[rep] = ex.what();
      }
    });
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      if (records[rep]) {
        level.records.push_back(*records[rep]);
      } else {
        level.failures.push_back({rep, reason[rep]});
      }
    }
    check_failures(level.failures.size(), config.reps, config.max_failure_rate, "pointwise");

    const auto m = static_cast<double>(level.records.size());
    double sum = 0.0;
    for (const auto& r : level.records) sum += r.projection;
    level.mean = sum / m;
    double ss = 0.0;
    for (const auto& r : level.records) ss += (r.projection - level.mean) * (r.projection - level.mean);
    level.variance = m > 1 ? ss / (m - 1.0) : 0.0;
    level.standard_error = std::sqrt(level.variance / m);

    double mt = 0.0;
    double mp = 0.0;
    for (const auto& r : level.records) {
      mt += r.theta_diff;
      mp -= r.phi1;
    }
    mt /= m;
    mp /= m;
    double stt = 0.0;
    double spp = 0.0;
    double stp = 0.0;
    for (const auto& r : level.records) {
      const double a = r.theta_diff - mt;
      const double b = -r.phi1 - mp;
      stt += a * a;
      spp += b * b;
      stp += a * b;
    }
    level.phi1_correlation = (stt > 0.0 && spp > 0.0) ? stp / std::sqrt(stt * spp) : 0.0;

    std::vector<double> residuals;
    std::vector<double> devs;
    std::vector<double> tangential;
    for (const auto& r : level.records) {
      residuals.push_back(r.report.linearization_residual);
      devs.push_back(r.report.full_dev.norm());
      if (r.report.normal_comp != 0.0)
        tangential.push_back(std::abs(r.report.tangential_comp) / std::abs(r.report.normal_comp));
    }
    level.median_residual_ratio = median(residuals) / median(devs);
    level.median_tangential_ratio = median(tangential);
    result.levels.push_back(std::move(level));
  }
  return result;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need matching sizes >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

namespace {

// Sup distance over the time window both trajectories cover.
double path_deviation(const Trajectory& a, const Trajectory& b) {
  const std::size_t back = std::min(a.origin, b.origin);
  const std::size_t fwd = std::min(a.size() - 1 - a.origin, b.size() - 1 - b.origin);
  double sup = 0.0;
  for (std::size_t k = 0; k <= back + fwd; ++k) {
    const std::size_t ia = a.origin - back + k;
    const std::size_t ib = b.origin - back + k;
    sup = std::max(sup, (a.points[ia] - b.points[ib]).norm());
  }
  return sup;
}

}  // namespace

RateResult run_rate(const ExperimentConfig& config) {
  validate(config, 3);
  const AnalyticModel& model = *config.model;
  const Vector2d x0 = config.starts.front();

  RateResult result;
  std::vector<double> log_rate;
  std::vector<double> log_err;
  for (const std::size_t n : config.n_grid) {
    RateLevel level;
    level.n = n;
    level.h = default_bandwidth(n, config.beta);
    level.rate = std::sqrt(std::log(static_cast<double>(n)) / (static_cast<double>(n) * std::pow(level.h, 5)));
    const FlowSettings flow = kde_flow(config, level.h);
    const Trajectory truth = trace(model, x0, flow, config.guard);

    std::vector<double> errors(config.reps, -1.0);
    std::vector<std::string> reason(config.reps);
    parallel_for(config.reps, config.threads, [&](std::size_t rep) {
      try {
        const KdeField kde(model.sample(n, replicate_seed(config.seed, n, rep)), level.h);
        errors[rep] = path_deviation(trace(kde, x0, flow, config.guard), truth);
      } catch (const std::exception& ex) {
        reason[rep] = ex.what();
      }
    });
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      if (reason[rep].empty()) {
        level.errors.push_back(errors[rep]);
      } else {
        level.failures.push_back({rep, reason[rep]});
      }
    }
    check_failures(level.failures.size(), config.reps, config.max_failure_rate, "rate");
    level.median_error = median(level.errors);
    log_rate.push_back(std::log(level.rate));
    log_err.push_back(std::log(level.median_error));
    result.levels.push_back(std::move(level));
  }
  result.slope = fit_slope(log_rate, log_err);
  return result;
}

double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw std::invalid_argument("ks_distance: no values");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = cdf(values[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

namespace {

std::vector<Vector2d> sample_polyline(const Polyline& line, double spacing) {
  std::vector<Vector2d> out;
  std::vector<Vector2d> pts = line.points;
  if (line.closed && pts.size() > 2) pts.push_back(pts.front());
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Vector2d a = pts[i - 1];
    const Vector2d b = pts[i];
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a).norm() / spacing)));
    for (std::size_t k = 0; k < pieces; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
  }
  if (!line.closed || pts.size() <= 2) out.push_back(pts.back());
  return out;
}

struct SparseRow {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

}  // namespace

GaussFieldResult simulate_gauss_field(const GaussFieldConfig& config, const DensityField& field,
                                      const KernelConstants& constants) {
  if (config.filament.points.size() < 2) throw ConfigError("gaussfield: filament needs at least two vertices");
  if (config.reps < 1) throw ConfigError("gaussfield: reps must be at least 1");
  if (!(config.noise_spacing > 0.0 && config.noise_spacing <= 0.125))
    throw ConfigError("gaussfield: noise_spacing must be in (0, 1/8]");
  for (const double h : config.h_grid)
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("gaussfield: bandwidths must lie in (0, 1)");

  const double c = constant_c(config.filament, field, constants, config.guard);
  const double delta = config.noise_spacing;

  GaussFieldResult result;
  for (std::size_t level_id = 0; level_id < config.h_grid.size(); ++level_id) {
    const double h = config.h_grid[level_id];
    GaussFieldLevel level;
    level.h = h;
    level.c = c;

    // Sample L_h at half the noise spacing (rescaled units).
    const std::vector<Vector2d> original = sample_polyline(config.filament, 0.5 * delta * h);
    std::vector<Vector2d> xs;
    std::vector<Vector3d> weights_a;
    Vector2d lo = Vector2d::Constant(std::numeric_limits<double>::infinity());
    Vector2d hi = -lo;
    for (const auto& p : original) {
      const BandIngredients b = ingredients_at(field, p, constants, config.guard);
      xs.push_back(p / h);
      weights_a.push_back(b.a_vec / b.norm_a_r);
      lo = lo.cwiseMin(xs.back());
      hi = hi.cwiseMax(xs.back());
    }
    lo.array() -= 1.0 + delta;
    hi.array() += 1.0 + delta;
    const auto nx = static_cast<std::size_t>(std::ceil((hi(0) - lo(0)) / delta));
    const auto ny = static_cast<std::size_t>(std::ceil((hi(1) - lo(1)) / delta));
    if (static_cast<double>(nx) * static_cast<double>(ny) > config.cell_budget)
      throw ConfigError("gaussfield: noise grid of " + std::to_string(nx * ny) + " cells exceeds the cell budget");
    level.cells = nx * ny;
    level.sample_points = xs.size();

    std::vector<SparseRow> rows(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const Vector2d& x = xs[j];
      const auto i0 = static_cast<long>(std::floor((x(0) - 1.0 - lo(0)) / delta));
      const auto i1 = static_cast<long>(std::ceil((x(0) + 1.0 - lo(0)) / delta));
      const auto k0 = static_cast<long>(std::floor((x(1) - 1.0 - lo(1)) / delta));
      const auto k1 = static_cast<long>(std::ceil((x(1) + 1.0 - lo(1)) / delta));
      for (long k = std::max(0L, k0); k <= std::min<long>(static_cast<long>(ny) - 1, k1); ++k) {
        for (long i = std::max(0L, i0); i <= std::min<long>(static_cast<long>(nx) - 1, i1); ++i) {
          const Vector2d s = lo + delta * Vector2d(static_cast<double>(i) + 0.5, static_cast<double>(k) + 0.5);
          const Vector2d z = x - s;
          if (z.squaredNorm() >= 1.0) continue;
          rows[j].index.push_back(static_cast<std::size_t>(k) * nx + static_cast<std::size_t>(i));
          rows[j].weight.push_back(weights_a[j].dot(kernel_d2(z)) * delta);
        }
      }
    }
    const std::size_t probes = std::min(config.probes, xs.size());
    for (std::size_t p = 0; p < probes; ++p) {
      const std::size_t j = probes > 1 ? p * (xs.size() - 1) / (probes - 1) : 0;
      double var = 0.0;
      for (const double w : rows[j].weight) var += w * w;
      level.probe_variance.push_back(var);
    }

    level.sup.assign(config.reps, 0.0);
    parallel_for(config.reps, config.threads, [&](std::size_t rep) {
      auto gen = make_stream(config.seed, level_id * 0x9e3779b97f4a7c15ULL + rep);
      std::normal_distribution<double> normal;
      std::vector<double> noise(level.cells);
      for (auto& z : noise) z = normal(gen);
      double sup = 0.0;
      for (const auto& row : rows) {
        double u = 0.0;
        for (std::size_t q = 0; q < row.index.size(); ++q) u += row.weight[q] * noise[row.index[q]];
        sup = std::max(sup, std::abs(u));
      }
      level.sup[rep] = sup;
    });

    const double root = std::sqrt(2.0 * std::log(1.0 / h));
    const auto transformed_cdf = [&](double m) { return limit_law((m - root) * root - c); };
    for (const double z : config.z_grid) {
      const double b = b_h_of(z, h, c);
      const auto below = std::count_if(level.sup.begin(), level.sup.end(), [&](double s) { return s < b; });
      level.b_h.push_back(b);
      level.cdf.push_back(static_cast<double>(below) / static_cast<double>(config.reps));
      level.limit.push_back(limit_law(z));
    }
    level.b_h_zero = b_h_of(0.0, h, c);
    level.cdf_at_zero = static_cast<double>(std::count_if(level.sup.begin(), level.sup.end(),
                                                          [&](double s) { return s < level.b_h_zero; })) /
                        static_cast<double>(config.reps);
    level.ks = ks_distance(level.sup, transformed_cdf);
    result.levels.push_back(std::move(level));
  }
  return result;
}

namespace {

Vector3d a_of(const DensityField& field, const Vector2d& x, const DegeneracyGuard& guard) {
  const FieldJet jet = field.eval_all(x);
  return grad_g(jet.d2, guard).transpose() * jet.grad;
}

// int d2K(u + y) d2K(u)^T du over the lens where both factors are nonzero.
Matrix3d shifted_gram(const Vector2d& y, int nodes) {
  const double d2 = y.squaredNorm();
  if (d2 >= 4.0) return Matrix3d::Zero();
  const DiskRule rule(static_cast<std::size_t>(nodes), 2 * static_cast<std::size_t>(nodes), -0.5 * y,
                      std::sqrt(1.0 - 0.25 * d2));
  Matrix3d m = Matrix3d::Zero();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector2d& u = rule.point(i);
    m.noalias() += rule.weight(i) * kernel_d2(Vector2d(u + y)) * kernel_d2(u).transpose();
  }
  return m;
}

// int (a1^T d2K(u + y) - a0^T d2K(u))^2 du over the union of both supports.
double difference_energy(const Vector3d& a1, const Vector3d& a0, const Vector2d& y, int nodes) {
  const DiskRule rule(static_cast<std::size_t>(nodes), 2 * static_cast<std::size_t>(nodes), -0.5 * y,
                      1.0 + 0.5 * y.norm());
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vector2d& u = rule.point(i);
    const double d = a1.dot(kernel_d2(Vector2d(u + y))) - a0.dot(kernel_d2(u));
    acc += rule.weight(i) * d * d;
  }
  return acc;
}

}  // namespace

double covariance_rh(const DensityField& field, const KernelConstants& constants, const Vector2d& x_star,
                     double h, const Vector2d& y, bool swap, int nodes, const DegeneracyGuard& guard) {
  const Vector3d a0 = a_of(field, x_star, guard);
  const Vector3d a1 = a_of(field, x_star + h * y, guard);
  const double n0 = r_norm(a0, constants);
  const double n1 = r_norm(a1, constants);
  if (!swap) return a1.dot(shifted_gram(y, nodes) * a0) / (n0 * n1);
  // r_h(x, x + y): the same integral with the roles of the two points exchanged.
  return a0.dot(shifted_gram(-y, nodes) * a1) / (n0 * n1);
}

CovarianceReport covariance_expansion_check(const DensityField& field, const KernelConstants& constants,
                                            const Vector2d& x_star, double h, const std::vector<double>& eps,
                                            const DegeneracyGuard& guard) {
  if (eps.size() < 2) throw std::invalid_argument("covariance_expansion_check: need two or more displacements");
  CovarianceReport rep;
  rep.x_star = x_star;
  rep.h = h;
  rep.eps = eps;
  const int nodes = 200;

  const Vector3d a0 = a_of(field, x_star, guard);
  const double n0 = r_norm(a0, constants);
  const Vector2d dirs[3] = {Vector2d(1, 0), Vector2d(0, 1), Vector2d(1, 1).normalized()};
  double q[3];
  for (int d = 0; d < 3; ++d) {
    std::vector<double> e2;
    std::vector<double> ratio;
    for (const double e : eps) {
      const Vector2d y = e * dirs[d];
      const Vector3d a1 = a_of(field, x_star + h * y, guard);
      const double n1 = r_norm(a1, constants);
      const double energy = difference_energy(a1, a0, y, nodes);
      const double one_minus_r = (energy - (n1 - n0) * (n1 - n0)) / (2.0 * n1 * n0);
      e2.push_back(e * e);
      ratio.push_back(one_minus_r / (e * e));
    }
    const double slope = fit_slope(e2, ratio);
    const double mean_x = std::accumulate(e2.begin(), e2.end(), 0.0) / static_cast<double>(e2.size());
    const double mean_y = std::accumulate(ratio.begin(), ratio.end(), 0.0) / static_cast<double>(ratio.size());
    q[d] = mean_y - slope * mean_x;
  }
  rep.fitted << q[0], q[2] - 0.5 * (q[0] + q[1]), q[2] - 0.5 * (q[0] + q[1]), q[1];

  const double a2 = 1.0 / (n0 * n0);
  rep.lambda2 = a2 * constants.b2 * omega_at(a0, constants.b1);

  // grad A_h = h grad A(h x), by central differences in the original units.
  const double step = 1e-5;
  Matrix32d grad_a;
  for (int k = 0; k < 2; ++k) {
    const Vector2d dx = step * Vector2d::Unit(k);
    grad_a.col(k) = (a_of(field, x_star + dx, guard) - a_of(field, x_star - dx, guard)) / (2.0 * step);
  }
  grad_a *= h;
  const Matrix3d& r = constants.r_matrix;
  const Eigen::RowVector2d cross = a0.transpose() * r * grad_a;
  const Matrix2d quad = grad_a.transpose() * r * grad_a;
  rep.lambda1 = 0.5 * a2 * (quad - a2 * cross.transpose() * cross);
  rep.lambda1_printed = 0.5 * a2 * (quad + 2.0 * cross.transpose() * cross);

  rep.residual_lambda2 = (rep.fitted - rep.lambda2).norm() / rep.lambda2.norm();
  rep.residual_full = (rep.fitted - rep.lambda1 - rep.lambda2).norm() / (rep.lambda1 + rep.lambda2).norm();
  rep.residual_printed =
      (rep.fitted - rep.lambda1_printed - rep.lambda2).norm() / (rep.lambda1_printed + rep.lambda2).norm();

  const Vector2d y_probe(0.03, -0.02);
  rep.symmetry_error = std::abs(covariance_rh(field, constants, x_star, h, y_probe, false, nodes, guard) -
                                covariance_rh(field, constants, x_star, h, y_probe, true, nodes, guard));
  rep.self_correlation = covariance_rh(field, constants, x_star, h, Vector2d::Zero(), false, nodes, guard);
  return rep;
}

}  // namespace filament
