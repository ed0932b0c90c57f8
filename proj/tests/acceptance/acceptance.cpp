// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the exit
// status is nonzero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "filament/bands.hpp"
#include "filament/diagnostics.hpp"
#include "filament/errors.hpp"
#include "filament/mc.hpp"
#include "filament/quadrature.hpp"
#include "oracles.hpp"

using namespace filament;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Vector2d> circle(double r, int count) {
  std::vector<Vector2d> out;
  for (int k = 0; k < count; ++k) {
    const double phi = 2 * std::numbers::pi * k / count;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi));
  }
  return out;
}

Polyline axis_segment(double from, double to, int vertices) {
  Polyline p;
  for (int i = 0; i < vertices; ++i) p.points.emplace_back(from + (to - from) * i / (vertices - 1), 0.0);
  return p;
}

FlowSettings ring_flow(double step = 1e-3) {
  FlowSettings s;
  s.step = step;
  s.t_max = 1.0;
  s.normalize_v = true;
  return s;
}

FlowSettings eg_flow(double step = 1e-3, double t_max = 20.0) {
  FlowSettings s;
  s.step = step;
  s.t_max = t_max;
  return s;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  const auto t0 = std::chrono::steady_clock::now();
  const KernelConstants c = compute_constants(64);
  const DiskRule rule(64, 128);
  const auto sq = [&](int i, int j) {
    return rule.integrate([=](const Vector2d& z) { return std::pow(kernel_partial(z, i, j), 2); });
  };
  const auto cross4 = [&](int i4, int j4, int i2, int j2) {
    return rule.integrate(
        [=](const Vector2d& z) { return oracle::kernel_partial4(z, i4, j4) * kernel_partial(z, i2, j2); });
  };
  const double k21 = sq(2, 1), k12 = sq(1, 2), k30 = sq(3, 0), k03 = sq(0, 3);
  // Integration by parts moves an odd number of derivatives, hence the sign.
  const double ibp = std::max({std::abs(cross4(4, 0, 0, 2) + k12), std::abs(cross4(3, 1, 1, 1) + k12),
                               std::abs(cross4(2, 2, 0, 2) + k12), std::abs(cross4(4, 0, 2, 0) + k30)});
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix3d>(c.r_matrix).eigenvalues().minCoeff();
  const double secs = seconds_since(t0);
  const double e_int = std::abs(c.integral_of_k - 1.0);
  const double e_mu2 = std::abs(c.mu2 - 1.0 / 14.0);
  const double e_sym = std::max(std::abs(k21 - k12), std::abs(k30 - k03));
  const bool pass = e_int < 1e-8 && e_mu2 < 1e-6 && e_sym < 1e-8 && ibp < 1e-6 && c.b1 > 1.0 &&
                    min_eig >= -1e-10 && secs < 10.0;
  return {pass, fmt("|int K - 1| = %.1e, |mu2 - 1/14| = %.1e, symmetry %.1e, by-parts %.1e, b1 = %.6f, "
                    "min eig R = %.3g, %.1f s",
                    e_int, e_mu2, e_sym, ibp, c.b1, min_eig, secs)};
}

Outcome a2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  double kernel_err = 0.0;
  const double e = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const Vector2d z(u(gen), u(gen));
    for (int order = 1; order <= 3; ++order) {
      for (int i = 0; i <= order; ++i) {
        const int j = order - i;
        const double fd =
            i > 0 ? (kernel_partial<double>(z + Vector2d(e, 0), i - 1, j) -
                     kernel_partial<double>(z - Vector2d(e, 0), i - 1, j)) / (2 * e)
                  : (kernel_partial<double>(z + Vector2d(0, e), i, j - 1) -
                     kernel_partial<double>(z - Vector2d(0, e), i, j - 1)) / (2 * e);
        kernel_err = std::max(kernel_err, std::abs(fd - kernel_partial(z, i, j)));
      }
    }
  }
  std::uniform_real_distribution<double> w(-1.5, 1.5);
  std::vector<Vector2d> xs;
  for (int i = 0; i < 200; ++i) xs.emplace_back(w(gen), w(gen));
  PointCloud cloud;
  std::uniform_real_distribution<double> c(-1, 1);
  for (int i = 0; i < 500; ++i) cloud.points.emplace_back(c(gen), c(gen));
  const KdeField kde(cloud, 0.5);
  const double kde_err = oracle::max_fd_error(kde, xs, 1e-5);
  const double eg_err = oracle::max_fd_error(ElongatedGaussian(2, 1), xs, 1e-4);
  const double ring_err = oracle::max_fd_error(Ring(1, 0.1), xs, 1e-5);
  const double secs = seconds_since(t0);
  const bool pass = kernel_err < 1e-5 && kde_err < 1e-5 && eg_err < 1e-5 && ring_err < 1e-5 && secs < 30.0;
  return {pass, fmt("max FD error: kernel %.1e, kde %.1e, elongated gaussian %.1e, ring %.1e (200 points each), %.1f s",
                    kernel_err, kde_err, eg_err, ring_err, secs)};
}

Outcome a3() {
  const ElongatedGaussian eg(2, 1);
  const Ring ring(1, 0.1);
  const DegeneracyGuard q{0.01};
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst = 0.0, worst_l = 0.0;
  for (const DensityField* field : {static_cast<const DensityField*>(&eg), static_cast<const DensityField*>(&ring)}) {
    const double peak = field == &eg ? eg.f(Vector2d(0, 0)) : ring.normalization();
    int used = 0;
    while (used < 10000) {
      const Vector2d x(u(gen), u(gen));
      const FieldJet jet = field->eval_all(x);
      if (!q.accepts(jet.d2 / peak)) continue;
      ++used;
      const EigenFrame fr = frame_from_jet(jet, x);
      Matrix2d m;
      m << jet.d2(0), jet.d2(1), jet.d2(1), jet.d2(2);
      worst = std::max(worst, (m * fr.v - fr.lambda2 * fr.v).norm() / (m.norm() * fr.v.norm()));
      worst_l = std::max(worst_l, std::abs(Eigen::SelfAdjointEigenSolver<Matrix2d>(m).eigenvalues()(0) - fr.lambda2));
    }
  }
  return {worst <= 1e-9 && worst_l <= 1e-12,
          fmt("relative eigen residual %.1e, lambda2 vs solver %.1e (10^4 points per model)", worst, worst_l)};
}

Outcome a4() {
  const ElongatedGaussian eg(2, 1);
  const Vector2d x0(0.5, 0.8);
  const auto endpoint = [&](double step) {
    FlowSettings s = eg_flow(step, 40.0);
    s.direction = Direction::forward;
    return trace(eg, x0, s).points.back();
  };
  const Vector2d ref = endpoint(0.05);
  const double ratio = (endpoint(2.0) - ref).norm() / (endpoint(1.0) - ref).norm();

  const Ring ring(1, 0.1);
  double reversal = 0.0;
  for (const auto& [field, start] : {std::pair<const DensityField*, Vector2d>{&eg, Vector2d(0.5, 0.3)},
                                     std::pair<const DensityField*, Vector2d>{&ring, Vector2d(0.95, 0.1)}}) {
    FlowSettings s = field == &ring ? ring_flow() : eg_flow(1e-3, 1.0);
    if (field == &ring) s.t_max = 0.04;
    s.direction = Direction::forward;
    const Vector2d end = trace(*field, start, s).points.back();
    s.direction = Direction::backward;
    reversal = std::max(reversal, (trace(*field, end, s).points.front() - start).norm());
  }
  return {ratio >= 8.0 && ratio <= 32.0 && reversal < 1e-8,
          fmt("step-halving error ratio %.2f, forward/backward return %.1e", ratio, reversal)};
}

Outcome a5() {
  const auto t0 = std::chrono::steady_clock::now();
  const Ring ring(1, 0.1);
  const FilamentEstimate r = estimate_filament(ring, circle(0.95, 36), ring_flow(), {}, 1.0);
  double ring_err = r.failures.empty() ? 0.0 : 1e9;
  for (const auto& h : r.hits) ring_err = std::max(ring_err, h.found ? std::abs(h.point.norm() - 1.0) : 1e9);

  const ElongatedGaussian eg(2, 1);
  std::vector<Vector2d> starts;
  for (double x : {0.5, 1.0, 1.5, 2.0})
    for (double y : {-0.6, -0.3, 0.3, 0.6}) starts.emplace_back(x, y);
  const FilamentEstimate e = estimate_filament(eg, starts, eg_flow(), {}, 20.0);
  double eg_err = e.failures.empty() ? 0.0 : 1e9;
  for (const auto& h : e.hits) eg_err = std::max(eg_err, h.found ? std::abs(h.point(1)) : 1e9);

  Polyline truth;
  truth.points = circle(1.0, 720);
  truth.closed = true;
  std::vector<double> medians;
  for (std::size_t n : {1000, 4000, 16000}) {
    const double h = default_bandwidth(n, 1.0);
    std::vector<double> d;
    for (std::size_t rep = 0; rep < 20; ++rep) {
      const KdeField kde(ring.sample(n, replicate_seed(5, n, rep)), h);
      const FilamentEstimate est = estimate_filament(kde, circle(0.95, 36), ring_flow(h / 4), {}, 1.0);
      d.push_back(est.polyline.points.size() < 2 ? std::numeric_limits<double>::infinity()
                                                 : hausdorff(est.polyline, truth));
    }
    std::sort(d.begin(), d.end());
    medians.push_back(0.5 * (d[9] + d[10]));
  }
  const double secs = seconds_since(t0);
  const bool trend = medians[1] < medians[0] && medians[2] < medians[1] && medians[2] < medians[0] / 1.5;
  return {ring_err < 1e-4 && eg_err < 1e-6 && trend && secs < 300.0,
          fmt("ring |r - 1| max %.1e, gaussian |y| max %.1e, KDE median Hausdorff %.4f -> %.4f -> %.4f, %.0f s",
              ring_err, eg_err, medians[0], medians[1], medians[2], secs)};
}

Outcome a6() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c;
  c.model = std::make_shared<ElongatedGaussian>(2, 1);
  c.n_grid = {2000, 8000, 32000};
  c.beta = 1.0;
  c.reps = 50;
  c.seed = 6;
  c.starts = {Vector2d(0.5, 0.3)};
  c.flow = eg_flow(1e-3, 2.0);
  c.a_star = 2.0;
  const RateResult r = run_rate(c);
  const double secs = seconds_since(t0);
  bool decreasing = true;
  for (std::size_t i = 1; i < r.levels.size(); ++i)
    decreasing = decreasing && r.levels[i].median_error < r.levels[i - 1].median_error;
  return {r.slope >= 0.7 && r.slope <= 1.3 && secs < 600.0,
          fmt("slope %.3f (median errors %.3f, %.3f, %.3f; %s), %.0f s", r.slope, r.levels[0].median_error,
              r.levels[1].median_error, r.levels[2].median_error, decreasing ? "decreasing" : "not decreasing",
              secs)};
}

// Shared by A7 and A11.
ExperimentConfig pointwise_config(std::vector<std::size_t> n_grid, std::size_t reps) {
  ExperimentConfig c;
  c.model = std::make_shared<ElongatedGaussian>(2, 1);
  c.n_grid = std::move(n_grid);
  c.beta = 5e4 * std::pow(1.5, 9);  // h = 1.5 at n = 5e4
  c.reps = reps;
  c.seed = 7;
  c.starts = {Vector2d(3.0, 0.0)};
  c.flow = eg_flow(1e-2, 15.0);
  c.a_star = 15.0;
  return c;
}

const PointwiseResult& pointwise_5e4() {
  static const PointwiseResult r = run_pointwise(pointwise_config({50000}, 400), Vector2d(3.0, 0.0));
  return r;
}

Outcome a7() {
  const auto t0 = std::chrono::steady_clock::now();
  const PointwiseLevel& l = pointwise_5e4().levels[0];
  const double secs = seconds_since(t0);
  const double ratio = l.variance / l.theoretical_variance;
  const bool centred = std::abs(l.mean) < 3 * l.standard_error;
  return {centred && ratio >= 0.75 && ratio <= 1.25 && secs < 900.0,
          fmt("n = %zu, h = %.3f, %zu reps (%zu failed): mean %.3f (3 SE = %.3f), variance ratio %.3f, %.0f s", l.n,
              l.h, l.records.size(), l.failures.size(), l.mean, 3 * l.standard_error, ratio, secs)};
}

Outcome a8() {
  const auto t0 = std::chrono::steady_clock::now();
  const PointwiseResult r = run_pointwise(pointwise_config({4000, 16000, 64000}, 100), Vector2d(3.0, 0.0));
  const auto& lv = r.levels;
  const bool decreasing =
      lv[1].median_residual_ratio < lv[0].median_residual_ratio && lv[2].median_residual_ratio < lv[1].median_residual_ratio;
  return {decreasing && lv[2].median_tangential_ratio < 1.0,
          fmt("median residual ratio %.3f -> %.3f -> %.3f, median |tangential|/|normal| %.3f at n = %zu, %.0f s",
              lv[0].median_residual_ratio, lv[1].median_residual_ratio, lv[2].median_residual_ratio,
              lv[2].median_tangential_ratio, lv[2].n, seconds_since(t0))};
}

Outcome a9() {
  const auto t0 = std::chrono::steady_clock::now();
  const ElongatedGaussian eg(2, 1);
  GaussFieldConfig c;
  c.h_grid = {0.5, 0.25, 0.125};
  c.reps = 500;
  c.seed = 9;
  c.z_grid = {0.0};
  c.filament = axis_segment(0.5, 2.0, 31);
  const GaussFieldResult r = simulate_gauss_field(c, eg, kernel_constants());
  double var_err = 0.0;
  for (const auto& l : r.levels)
    for (double v : l.probe_variance) var_err = std::max(var_err, std::abs(v - 1.0));
  const auto& lv = r.levels;
  const bool ks_down = lv[1].ks < lv[0].ks && lv[2].ks < lv[1].ks;
  const double p0 = lv[2].cdf_at_zero;
  const double secs = seconds_since(t0);
  return {var_err < 0.03 && ks_down && lv[2].ks < 0.15 && std::abs(p0 - std::exp(-2.0)) <= 0.08 && secs < 1200.0,
          fmt("max |Var U_h - 1| %.1e, KS %.3f -> %.3f -> %.3f, P(sup < b_h(0)) = %.3f vs %.3f at h = 0.125, %.0f s",
              var_err, lv[0].ks, lv[1].ks, lv[2].ks, p0, std::exp(-2.0), secs)};
}

Outcome a10() {
  const ElongatedGaussian eg(2, 1);
  const auto& k = kernel_constants();
  const Vector2d x(1.0, 0.0);
  const double h = 0.01;
  const CovarianceReport rep = covariance_expansion_check(eg, k, x, h);
  // The two kernel supports are disjoint once |y| >= 2.
  double beyond = 0.0;
  for (double r : {2.05, 2.5, 3.0})
    for (double phi : {0.0, 0.7, 1.9, 3.5})
      beyond = std::max(beyond, std::abs(covariance_rh(eg, k, x, h, r * Vector2d(std::cos(phi), std::sin(phi)))));
  const double overlap = covariance_rh(eg, k, x, h, Vector2d(1.5, 0.0));
  return {rep.residual_lambda2 < 0.05 && beyond < 1e-12,
          fmt("fitted vs Lambda2 residual %.4f at h = %.2f, |r_h| beyond |y| = 2 max %.1e (r_h at |y| = 1.5 is %.2e)",
              rep.residual_lambda2, h, beyond, overlap)};
}

Outcome a11() {
  const PointwiseLevel& l = pointwise_5e4().levels[0];
  const ElongatedGaussian eg(2, 1);
  const KdeField kde(eg.sample(5000, 11), 0.5);
  const double at_mode = phi1(eg, kde, Vector2d(0, 0));
  return {l.phi1_correlation > 0.8 && at_mode == 0.0,
          fmt("corr(theta_hat - theta, -phi1) = %.3f at n = %zu, phi1 at the mode = %g", l.phi1_correlation, l.n,
              at_mode)};
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome a12() {
  const std::string cli = FILAMENT_CLI;
  const std::string src = FILAMENT_SOURCE_DIR;
  const std::string tmp = std::string(FILAMENT_BINARY_DIR) + "/acceptance_a12";
  shell("mkdir -p " + tmp);
  const std::string fixture = src + "/tests/fixtures/ring_4000.csv";
  const std::string conf = src + "/tests/fixtures/ring_estimate.conf";
  const auto estimate = [&](const std::string& out) {
    return shell(cli + " --quiet --config " + conf + " --out " + out + " estimate " + fixture);
  };
  const int rc1 = estimate(tmp + "/a.json");
  const int rc2 = estimate(tmp + "/b.json");
  const bool same = !slurp(tmp + "/a.json").empty() && slurp(tmp + "/a.json") == slurp(tmp + "/b.json");
  const int valid = shell("python3 " + src + "/tests/cli/validate_json.py " + tmp + "/a.json");

  const int rc_parse = shell(cli + " --no-such-flag constants 2>/dev/null");
  {
    std::ofstream far(tmp + "/far.conf");
    far << "starts = points:10,10;12,12\n";
  }
  const int rc_degenerate =
      shell(cli + " --quiet --config " + tmp + "/far.conf --out " + tmp + "/far.json estimate " + fixture);
  const bool pass = rc1 == 0 && rc2 == 0 && same && valid == 0 && rc_parse == 1 && rc_degenerate == 3;
  return {pass, fmt("estimate exit %d/%d, identical bytes %s, schema %s, parse error exit %d, degenerate exit %d", rc1,
                    rc2, same ? "yes" : "no", valid == 0 ? "valid" : "invalid", rc_parse, rc_degenerate)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria A1-A12"};
  std::vector<std::string> selected;
  app.add_option("criteria", selected, "Subset to run, e.g. A1 A7 (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::pair<std::string, std::function<Outcome()>>>> all = {
      {"A1", {"kernel identities", a1}},
      {"A2", {"derivative oracles", a2}},
      {"A3", {"eigen contract", a3}},
      {"A4", {"flow order", a4}},
      {"A5", {"analytic filament recovery", a5}},
      {"A6", {"rate check", a6}},
      {"A7", {"pointwise law", a7}},
      {"A8", {"deviation geometry", a8}},
      {"A9", {"gaussian field extreme value", a9}},
      {"A10", {"covariance expansion", a10}},
      {"A11", {"linearization", a11}},
      {"A12", {"command line", a12}},
  };
  int failed = 0;
  for (const auto& [id, entry] : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
    Outcome o;
    try {
      o = entry.second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << entry.first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
