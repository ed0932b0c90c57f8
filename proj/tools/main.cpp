#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "filament/bands.hpp"
#include "filament/errors.hpp"
#include "filament/mc.hpp"
#include "run_config.hpp"

using json = nlohmann::ordered_json;
using namespace filament;
using filament::cli::RunConfig;

namespace {

constexpr int kSchemaVersion = 1;

enum Exit { ok = 0, usage = 1, runtime = 2, degenerate = 3 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

json vec(const Vector2d& v) { return json::array({v(0), v(1)}); }

json points(const std::vector<Vector2d>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(vec(p));
  return a;
}

json polyline_json(const Polyline& p) { return {{"closed", p.closed}, {"points", points(p.points)}}; }

json hit_json(const FilamentHit& h) {
  return {{"start", vec(h.start)}, {"found", h.found},      {"theta", h.theta},
          {"point", vec(h.point)}, {"lambda2", h.lambda2}, {"a_prime", h.a_prime}};
}

json failures_json(const std::vector<ReplicateFailure>& fs) {
  json a = json::array();
  for (const auto& f : fs) a.push_back({{"rep", f.rep}, {"reason", f.reason}});
  return a;
}

json document(const std::string& kind, const RunConfig& config) {
  json d;
  d["schema_version"] = kSchemaVersion;
  d["kind"] = kind;
  json echo = json::object();
  for (const auto& [k, v] : config.entries()) echo[k] = v;
  d["config"] = echo;
  return d;
}

void write_output(const json& doc, const Options& opt) {
  const std::string text = doc.dump(2) + "\n";
  if (opt.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + opt.out);
  out << text;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void note(const Options& opt, const std::string& msg) {
  if (!opt.quiet) std::cerr << msg << "\n";
}

RunConfig load_config(const Options& opt) {
  RunConfig c = opt.config_path.empty() ? RunConfig{} : RunConfig::load(opt.config_path);
  if (opt.seed) c.set("seed", std::to_string(*opt.seed));
  return c;
}

double alpha_of(const RunConfig& c) { return 1.0 - c.number("confidence", 0.95); }

int cmd_constants(const Options& opt) {
  load_config(opt);  // nothing is read, but a bad file is still an error
  const KernelConstants& k = kernel_constants();
  json d;
  d["schema_version"] = kSchemaVersion;
  d["kind"] = "constants";
  d["mu2"] = k.mu2;
  json r = json::array();
  for (int i = 0; i < 3; ++i) r.push_back({k.r_matrix(i, 0), k.r_matrix(i, 1), k.r_matrix(i, 2)});
  d["r_matrix"] = r;
  d["b1"] = k.b1;
  d["b2"] = k.b2;
  d["integral_of_k"] = k.integral_of_k;
  d["quadrature_nodes"] = k.quadrature_nodes;
  write_output(d, opt);
  return ok;
}

int cmd_estimate(const Options& opt, const std::string& csv) {
  const RunConfig config = load_config(opt);
  PointCloud cloud = read_points_csv(csv);
  if (config.has("n") && config.count("n", 0) != cloud.n()) throw ConfigError("n does not match the data");
  const double h = config.number("h", default_bandwidth(cloud.n(), config.number("beta", 1.0)));
  const KdeField kde(std::move(cloud), h);
  const FlowSettings flow = cli::make_flow(config, 0.25 * h);
  const double a_star = config.number("a_star", flow.t_max);
  if (a_star > flow.t_max) throw ConfigError("a_star exceeds t_max");
  const std::vector<Vector2d> starts = cli::make_starts(config);
  std::optional<double> merge;
  if (config.has("merge_radius")) merge = config.number("merge_radius", 0.0);
  note(opt, "estimate: n=" + std::to_string(kde.n()) + " starts=" + std::to_string(starts.size()));
  const FilamentEstimate est = estimate_filament(kde, starts, flow, cli::make_guard(config), a_star, merge);

  json d = document("estimate", config);
  d["n"] = kde.n();
  d["h"] = h;
  d["a_star"] = a_star;
  d["flow"] = {{"step", flow.step}, {"t_max", flow.t_max}, {"normalize_v", flow.normalize_v}};
  d["starts"] = points(starts);
  json hits = json::array();
  for (const auto& hit : est.hits) hits.push_back(hit_json(hit));
  d["hits"] = hits;
  json fails = json::array();
  for (const auto& f : est.failures) fails.push_back({{"index", f.index}, {"reason", f.reason}});
  d["failures"] = fails;
  d["polyline"] = polyline_json(est.polyline);
  write_output(d, opt);
  return est.polyline.points.empty() ? degenerate : ok;
}

int cmd_band(const Options& opt, const std::string& filament_path, const std::string& csv) {
  const RunConfig config = load_config(opt);
  const json fil = read_json(filament_path);
  if (fil.value("kind", "") != "estimate") throw ConfigError(filament_path + " is not a filament document");
  const double h = fil.at("h").get<double>();
  const auto n_doc = fil.at("n").get<std::size_t>();
  if (config.has("h") && config.number("h", 0.0) != h) throw ConfigError("h does not match the filament document");
  if (config.has("n") && config.count("n", 0) != n_doc) throw ConfigError("n is bound to the data");
  PointCloud cloud = read_points_csv(csv);
  if (cloud.n() != n_doc) throw ConfigError("data size does not match the filament document");

  FilamentEstimate est;
  est.polyline.closed = fil.at("polyline").at("closed").get<bool>();
  for (const auto& p : fil.at("polyline").at("points")) est.polyline.points.emplace_back(p[0], p[1]);
  if (est.polyline.points.size() < 2) throw ExperimentFailure("filament has fewer than two vertices");

  const double z = config.has("z") ? config.number("z", 0.0) : z_from_level(alpha_of(config));
  const KdeField kde(std::move(cloud), h);
  const BandResult band = band_radii(est, kde, kernel_constants(), n_doc, h, z, cli::make_guard(config));

  json d = document("band", config);
  d["n"] = n_doc;
  d["h"] = h;
  if (!config.has("z")) d["confidence"] = 1.0 - alpha_of(config);
  d["z"] = band.z;
  d["c"] = band.c;
  d["b_h"] = band.b_h;
  d["polyline"] = polyline_json(est.polyline);
  json verts = json::array();
  for (std::size_t i = 0; i < band.radii.size(); ++i)
    verts.push_back({{"point", vec(est.polyline.points[i])}, {"g", band.g[i]}, {"radius", band.radii[i]}});
  d["vertices"] = verts;
  write_output(d, opt);
  return ok;
}

int cmd_simulate(const Options& opt, const std::string& points_path) {
  const RunConfig config = load_config(opt);
  const auto model = cli::make_model(config);
  if (!config.has("n")) throw ConfigError("simulate needs n");
  const PointCloud cloud = model->sample(config.count("n", 0), config.seed());
  write_points_csv(points_path, cloud);
  Vector2d mean = Vector2d::Zero();
  for (const auto& p : cloud.points) mean += p;
  mean /= static_cast<double>(cloud.n());
  Matrix2d cov = Matrix2d::Zero();
  for (const auto& p : cloud.points) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(cloud.n() - 1);

  json d = document("simulate", config);
  d["model"] = model->name();
  d["n"] = cloud.n();
  d["seed"] = config.seed();
  d["points_path"] = points_path;
  d["mean"] = vec(mean);
  d["covariance"] = json::array({vec(cov.col(0)), vec(cov.col(1))});
  write_output(d, opt);
  return ok;
}

ExperimentConfig experiment(const RunConfig& config) {
  ExperimentConfig e;
  e.model = cli::make_model(config);
  e.n_grid = config.counts("n_grid", config.has("n") ? std::vector<std::size_t>{config.count("n", 0)}
                                                     : std::vector<std::size_t>{});
  e.beta = config.number("beta", 1.0);
  e.reps = config.count("reps", 1);
  e.z_grid = config.numbers("z_grid", {-1.0, 0.0, 1.0, 2.0, 3.0});
  e.seed = config.seed();
  e.starts = cli::make_starts(config);
  e.flow = cli::make_flow(config, 1e-3);
  e.kde_step_factor = config.number("kde_step_factor", 0.25);
  e.a_star = config.number("a_star", e.flow.t_max);
  e.guard = cli::make_guard(config);
  e.threads = static_cast<unsigned>(config.count("threads", 1));
  e.max_failure_rate = config.number("max_failure_rate", 0.1);
  return e;
}

int cmd_mc_sup(const Options& opt) {
  const RunConfig config = load_config(opt);
  const SupDeviationResult r = run_sup_deviation(experiment(config));
  json d = document("mc-sup", config);
  d["seed"] = config.seed();
  json truth = json::array();
  for (const auto& h : r.true_hits) truth.push_back(hit_json(h));
  d["true_hits"] = truth;
  json levels = json::array();
  for (const auto& l : r.levels) {
    json reps = json::array();
    for (std::size_t i = 0; i < l.sup.size(); ++i)
      reps.push_back({{"rep", l.rep_ids[i]}, {"sup", l.sup[i]}, {"unpaired_starts", l.unpaired_starts[i]}});
    json zs = json::array();
    for (std::size_t i = 0; i < l.cdf.size(); ++i)
      zs.push_back({{"b_h", l.b_h[i]}, {"cdf", l.cdf[i]}, {"limit", l.limit[i]}});
    levels.push_back({{"n", l.n}, {"h", l.h}, {"c", l.c}, {"z", zs}, {"reps", reps},
                      {"failures", failures_json(l.failures)}});
  }
  d["z_grid"] = experiment(config).z_grid;
  d["levels"] = levels;
  write_output(d, opt);
  return ok;
}

int cmd_mc_pointwise(const Options& opt) {
  const RunConfig config = load_config(opt);
  const auto x_star = config.point("x_star");
  if (!x_star) throw ConfigError("mc-pointwise needs x_star");
  const PointwiseResult r = run_pointwise(experiment(config), *x_star);
  json d = document("mc-pointwise", config);
  d["seed"] = config.seed();
  d["true_hit"] = hit_json(r.true_hit);
  json levels = json::array();
  for (const auto& l : r.levels) {
    json reps = json::array();
    for (const auto& rec : l.records)
      reps.push_back({{"rep", rec.rep},
                      {"projection", rec.projection},
                      {"theta_diff", rec.theta_diff},
                      {"phi1", rec.phi1},
                      {"normal", rec.report.normal_comp},
                      {"tangential", rec.report.tangential_comp},
                      {"residual", rec.report.linearization_residual}});
    levels.push_back({{"n", l.n},
                      {"h", l.h},
                      {"mean", l.mean},
                      {"variance", l.variance},
                      {"standard_error", l.standard_error},
                      {"theoretical_variance", l.theoretical_variance},
                      {"phi1_correlation", l.phi1_correlation},
                      {"median_residual_ratio", l.median_residual_ratio},
                      {"median_tangential_ratio", l.median_tangential_ratio},
                      {"reps", reps},
                      {"failures", failures_json(l.failures)}});
  }
  d["levels"] = levels;
  write_output(d, opt);
  return ok;
}

int cmd_mc_rate(const Options& opt) {
  const RunConfig config = load_config(opt);
  const RateResult r = run_rate(experiment(config));
  json d = document("mc-rate", config);
  d["seed"] = config.seed();
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"n", l.n},
                      {"h", l.h},
                      {"rate", l.rate},
                      {"median_error", l.median_error},
                      {"errors", l.errors},
                      {"failures", failures_json(l.failures)}});
  d["levels"] = levels;
  d["slope"] = r.slope;
  write_output(d, opt);
  return ok;
}

int cmd_gaussfield(const Options& opt) {
  const RunConfig config = load_config(opt);
  const auto model = cli::make_model(config);
  const FlowSettings flow = cli::make_flow(config, 1e-3);
  const FilamentEstimate truth = estimate_filament(*model, cli::make_starts(config), flow, cli::make_guard(config),
                                                   config.number("a_star", flow.t_max));
  GaussFieldConfig g;
  g.h_grid = config.numbers("h_grid", {0.5, 0.25, 0.125});
  g.noise_spacing = config.number("noise_spacing", g.noise_spacing);
  g.reps = config.count("reps", g.reps);
  g.seed = config.seed();
  g.filament = truth.polyline;
  g.z_grid = config.numbers("z_grid", {-1.0, 0.0, 1.0, 2.0, 3.0});
  g.probes = config.count("probes", g.probes);
  g.cell_budget = config.number("cell_budget", g.cell_budget);
  g.threads = static_cast<unsigned>(config.count("threads", 1));
  g.guard = cli::make_guard(config);
  const GaussFieldResult r = simulate_gauss_field(g, *model, kernel_constants());

  json d = document("gaussfield", config);
  d["seed"] = g.seed;
  d["filament"] = polyline_json(truth.polyline);
  d["z_grid"] = g.z_grid;
  json levels = json::array();
  for (const auto& l : r.levels)
    levels.push_back({{"h", l.h},
                      {"c", l.c},
                      {"cells", l.cells},
                      {"sample_points", l.sample_points},
                      {"probe_variance", l.probe_variance},
                      {"b_h", l.b_h},
                      {"cdf", l.cdf},
                      {"limit", l.limit},
                      {"b_h_zero", l.b_h_zero},
                      {"cdf_at_zero", l.cdf_at_zero},
                      {"ks", l.ks},
                      {"sup", l.sup}});
  d["levels"] = levels;
  write_output(d, opt);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filament estimation along integral curves of a density's second eigenvector field"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  app.add_option("--config", opt.config_path, "Flat key=value configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Overrides the configured seed");
  app.add_option("--out", opt.out, "Write the JSON document here instead of standard output");
  app.add_flag("--quiet", opt.quiet, "No progress messages");

  std::string csv;
  std::string filament_path;
  std::string points_path;
  auto* constants = app.add_subcommand("constants", "Kernel constants");
  auto* estimate = app.add_subcommand("estimate", "Estimate the filament from a point CSV");
  estimate->add_option("points", csv, "Point CSV")->required();
  auto* band = app.add_subcommand("band", "Confidence band around an estimated filament");
  band->add_option("filament", filament_path, "Document written by estimate")->required();
  band->add_option("points", csv, "The point CSV the filament was estimated from")->required();
  auto* simulate = app.add_subcommand("simulate", "Sample a model to a point CSV");
  simulate->add_option("--points", points_path, "CSV destination")->required();
  auto* mc_sup = app.add_subcommand("mc-sup", "Monte Carlo sup-deviation law");
  auto* mc_pointwise = app.add_subcommand("mc-pointwise", "Monte Carlo pointwise variance");
  auto* mc_rate = app.add_subcommand("mc-rate", "Monte Carlo path error rate");
  auto* gaussfield = app.add_subcommand("gaussfield", "Direct Gaussian field simulation");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }
  if (seed_opt->count() > 0) opt.seed = seed;

  try {
    if (*constants) return cmd_constants(opt);
    if (*estimate) return cmd_estimate(opt, csv);
    if (*band) return cmd_band(opt, filament_path, csv);
    if (*simulate) return cmd_simulate(opt, points_path);
    if (*mc_sup) return cmd_mc_sup(opt);
    if (*mc_pointwise) return cmd_mc_pointwise(opt);
    if (*mc_rate) return cmd_mc_rate(opt);
    if (*gaussfield) return cmd_gaussfield(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const ExperimentFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return degenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return runtime;
  }
  return usage;
}
