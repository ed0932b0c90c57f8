#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "filament/errors.hpp"

namespace filament::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(trim(part));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(key + ": '" + s + "' is not a number");
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError(key + ": '" + s + "' is not a non-negative integer");
  return v;
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(to_double(key, part));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

using Check = std::function<void(const std::string& key, const std::string& value)>;

Check positive() {
  return [](const std::string& k, const std::string& v) {
    if (!(to_double(k, v) > 0.0)) throw ConfigError(k + " must be positive");
  };
}

Check in_range(double lo, double hi, bool open_lo, bool open_hi) {
  return [=](const std::string& k, const std::string& v) {
    const double x = to_double(k, v);
    const bool ok = (open_lo ? x > lo : x >= lo) && (open_hi ? x < hi : x <= hi);
    if (!ok) throw ConfigError(k + " out of range");
  };
}

Check any_number() {
  return [](const std::string& k, const std::string& v) { to_double(k, v); };
}

Check at_least(std::uint64_t lo) {
  return [=](const std::string& k, const std::string& v) {
    if (to_unsigned(k, v) < lo) throw ConfigError(k + " must be at least " + std::to_string(lo));
  };
}

Check one_of(std::vector<std::string> choices) {
  return [=](const std::string& k, const std::string& v) {
    for (const auto& c : choices)
      if (v == c) return;
    throw ConfigError(k + ": unknown value '" + v + "'");
  };
}

void check_starts(const std::string& k, const std::string& v) {
  const auto colon = v.find(':');
  const std::string kind = v.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : v.substr(colon + 1);
  if (kind == "circle") {
    const auto p = split(rest, ':');
    if (p.size() != 2 || !(to_double(k, p[0]) > 0.0) || to_unsigned(k, p[1]) < 1)
      throw ConfigError(k + ": expected circle:RADIUS:COUNT");
  } else if (kind == "grid") {
    const auto p = split(rest, ':');
    if (p.size() != 6) throw ConfigError(k + ": expected grid:X0:X1:NX:Y0:Y1:NY");
    if (to_double(k, p[0]) > to_double(k, p[1]) || to_double(k, p[3]) > to_double(k, p[4]) ||
        to_unsigned(k, p[2]) < 1 || to_unsigned(k, p[5]) < 1)
      throw ConfigError(k + ": bad grid");
  } else if (kind == "points") {
    for (const auto& pt : split(rest, ';'))
      if (to_doubles(k, pt).size() != 2) throw ConfigError(k + ": points need two coordinates");
  } else {
    throw ConfigError(k + ": expected circle:, grid: or points:");
  }
}

const std::map<std::string, Check>& schema() {
  static const std::map<std::string, Check> keys = {
      {"model", one_of({"elongated_gaussian", "ring"})},
      {"sigma1", positive()},
      {"sigma2", positive()},
      {"r0", positive()},
      {"s", positive()},
      {"n", at_least(2)},
      {"n_grid",
       [](const std::string& k, const std::string& v) {
         std::uint64_t prev = 0;
         for (const auto& p : split(v, ',')) {
           const auto x = to_unsigned(k, p);
           if (x < 2 || x <= prev) throw ConfigError(k + " must be increasing counts >= 2");
           prev = x;
         }
       }},
      {"h", positive()},
      {"beta", positive()},
      {"seed", [](const std::string& k, const std::string& v) { to_unsigned(k, v); }},
      {"starts", check_starts},
      {"step", positive()},
      {"t_max", positive()},
      {"normalize_v", one_of({"true", "false"})},
      {"bounds",
       [](const std::string& k, const std::string& v) {
         const auto b = to_doubles(k, v);
         if (b.size() != 4 || b[0] >= b[1] || b[2] >= b[3]) throw ConfigError(k + ": expected X0,X1,Y0,Y1");
       }},
      {"a_star", positive()},
      {"delta", in_range(0.0, 1e300, false, false)},
      {"merge_radius", positive()},
      {"confidence", in_range(0.0, 1.0, true, true)},
      {"z", any_number()},
      {"reps", at_least(1)},
      {"z_grid", [](const std::string& k, const std::string& v) { to_doubles(k, v); }},
      {"threads", at_least(1)},
      {"kde_step_factor", in_range(0.0, 1e300, false, false)},
      {"max_failure_rate", in_range(0.0, 1.0, false, false)},
      {"x_star",
       [](const std::string& k, const std::string& v) {
         if (to_doubles(k, v).size() != 2) throw ConfigError(k + ": expected X,Y");
       }},
      {"h_grid",
       [](const std::string& k, const std::string& v) {
         for (double h : to_doubles(k, v))
           if (!(h > 0.0 && h < 1.0)) throw ConfigError(k + ": bandwidths must lie in (0, 1)");
       }},
      {"noise_spacing", in_range(0.0, 0.125, true, false)},
      {"probes", at_least(1)},
      {"cell_budget", positive()},
  };
  return keys;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = schema().find(key);
  if (it == schema().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(key, value);
  values_[key] = value;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (c.has(key)) throw ConfigError("config line " + std::to_string(number) + ": duplicate key '" + key + "'");
    try {
      c.set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string RunConfig::emit() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key, double fallback) const {
  return has(key) ? to_double(key, values_.at(key)) : fallback;
}

std::size_t RunConfig::count(const std::string& key, std::size_t fallback) const {
  return has(key) ? static_cast<std::size_t>(to_unsigned(key, values_.at(key))) : fallback;
}

std::uint64_t RunConfig::seed() const { return has("seed") ? to_unsigned("seed", values_.at("seed")) : 0; }

bool RunConfig::flag(const std::string& key, bool fallback) const {
  return has(key) ? values_.at(key) == "true" : fallback;
}

std::vector<double> RunConfig::numbers(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? to_doubles(key, values_.at(key)) : fallback;
}

std::vector<std::size_t> RunConfig::counts(const std::string& key, const std::vector<std::size_t>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<std::size_t> out;
  for (const auto& p : split(values_.at(key), ',')) out.push_back(static_cast<std::size_t>(to_unsigned(key, p)));
  return out;
}

std::optional<Vector2d> RunConfig::point(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const auto v = to_doubles(key, values_.at(key));
  return Vector2d(v[0], v[1]);
}

std::shared_ptr<const AnalyticModel> make_model(const RunConfig& config) {
  const std::string name = config.text("model", "elongated_gaussian");
  try {
    if (name == "ring") return std::make_shared<Ring>(config.number("r0", 1.0), config.number("s", 0.1));
    return std::make_shared<ElongatedGaussian>(config.number("sigma1", 2.0), config.number("sigma2", 1.0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::vector<Vector2d> make_starts(const RunConfig& config) {
  if (!config.has("starts")) throw ConfigError("no starts configured");
  const std::string v = config.text("starts", "");
  const auto colon = v.find(':');
  const std::string kind = v.substr(0, colon);
  const std::string rest = v.substr(colon + 1);
  std::vector<Vector2d> out;
  if (kind == "circle") {
    const auto p = split(rest, ':');
    const double r = to_double("starts", p[0]);
    const auto count = to_unsigned("starts", p[1]);
    for (std::uint64_t k = 0; k < count; ++k) {
      const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      out.emplace_back(r * std::cos(phi), r * std::sin(phi));
    }
  } else if (kind == "grid") {
    const auto p = split(rest, ':');
    const double x0 = to_double("starts", p[0]), x1 = to_double("starts", p[1]);
    const double y0 = to_double("starts", p[3]), y1 = to_double("starts", p[4]);
    const auto nx = to_unsigned("starts", p[2]), ny = to_unsigned("starts", p[5]);
    for (std::uint64_t j = 0; j < ny; ++j)
      for (std::uint64_t i = 0; i < nx; ++i)
        out.emplace_back(nx > 1 ? x0 + (x1 - x0) * static_cast<double>(i) / static_cast<double>(nx - 1) : x0,
                         ny > 1 ? y0 + (y1 - y0) * static_cast<double>(j) / static_cast<double>(ny - 1) : y0);
  } else {
    for (const auto& pt : split(rest, ';')) {
      const auto xy = to_doubles("starts", pt);
      out.emplace_back(xy[0], xy[1]);
    }
  }
  return out;
}

FlowSettings make_flow(const RunConfig& config, double default_step) {
  FlowSettings s;
  s.step = config.number("step", default_step);
  s.t_max = config.number("t_max", 1.0);
  s.normalize_v = config.flag("normalize_v", false);
  if (config.has("bounds")) {
    const auto b = config.numbers("bounds", {});
    s.bounds.lo = Vector2d(b[0], b[2]);
    s.bounds.hi = Vector2d(b[1], b[3]);
  }
  if (s.step > s.t_max) throw ConfigError("step exceeds t_max");
  return s;
}

DegeneracyGuard make_guard(const RunConfig& config) {
  DegeneracyGuard g;
  g.delta = config.number("delta", g.delta);
  return g;
}

}  // namespace filament::cli
