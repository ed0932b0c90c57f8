#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "filament/density.hpp"
#include "filament/flow.hpp"

namespace filament::cli {

/// Flat key=value configuration. Values are kept as validated text so the
/// echo in every output document parses back to the same configuration.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// key=value lines in key order.
  std::string emit() const;
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  /// Validates as parse does; throws ConfigError.
  void set(const std::string& key, const std::string& value);

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t seed() const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::size_t> counts(const std::string& key, const std::vector<std::size_t>& fallback) const;
  std::optional<Vector2d> point(const std::string& key) const;

  bool operator==(const RunConfig& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, std::string> values_;
};

std::shared_ptr<const AnalyticModel> make_model(const RunConfig& config);

/// circle:R:COUNT, grid:X0:X1:NX:Y0:Y1:NY or points:x,y;x,y;...
std::vector<Vector2d> make_starts(const RunConfig& config);

/// Flow settings from step, t_max, normalize_v and bounds; `default_step`
/// applies when step is absent.
FlowSettings make_flow(const RunConfig& config, double default_step);

DegeneracyGuard make_guard(const RunConfig& config);

}  // namespace filament::cli
