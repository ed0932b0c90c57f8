#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "filament/density.hpp"
#include "filament/eigenfield.hpp"
#include "filament/flow.hpp"

namespace filament {

struct FilamentHit {
  Vector2d start = Vector2d::Zero();
  double theta = 0.0;
  Vector2d point = Vector2d::Zero();
  double lambda2 = 0.0;
  double a_prime = 0.0;
  bool found = false;
};

/// a(t) = <grad f(X(t)), V(X(t))> with V = G(d2f) unnormalized.
double a_value(const FieldJet& jet);

/// (t, a(t)) at every trajectory sample.
std::vector<std::pair<double, double>> a_of_t(const DensityField& field, const Trajectory& traj,
                                              const DegeneracyGuard& guard = {});

struct ScanSample {
  double t = 0.0;
  double a = 0.0;
  double lambda2 = 0.0;
};

/// Everything find_theta looked at: the trajectory, a and lambda2 at each
/// sample, and the chosen crossing.
struct ThetaSearch {
  Trajectory trajectory;
  std::vector<ScanSample> samples;
  /// Sample indices (nearer to t = 0, farther) bracketing the crossing.
  std::optional<std::pair<std::size_t, std::size_t>> bracket;
  FilamentHit hit;
};

/// Signed time of the first ridge crossing with |t| <= a_star; theta = 0 and
/// found = false when there is none.
ThetaSearch search_theta(const DensityField& field, const Vector2d& x0, const FlowSettings& flow,
                         const DegeneracyGuard& guard, double a_star);
FilamentHit find_theta(const DensityField& field, const Vector2d& x0, const FlowSettings& flow,
                       const DegeneracyGuard& guard, double a_star);

struct Polyline {
  std::vector<Vector2d> points;
  bool closed = false;

  double length() const;
};

struct StartFailure {
  std::size_t index = 0;
  std::string reason;
};

struct FilamentEstimate {
  std::vector<FilamentHit> hits;
  std::vector<Vector2d> starts;
  Polyline polyline;
  std::vector<StartFailure> failures;
};

/// h/2 for a kernel estimate, 1e-3 otherwise.
double default_merge_radius(const DensityField& field);

/// Merge hits closer than merge_radius and chain the rest by nearest neighbour.
Polyline assemble_polyline(const std::vector<Vector2d>& hit_points, double merge_radius);

FilamentEstimate estimate_filament(const DensityField& field, const std::vector<Vector2d>& starts,
                                   const FlowSettings& flow, const DegeneracyGuard& guard, double a_star,
                                   std::optional<double> merge_radius = std::nullopt);

/// Symmetric Hausdorff distance between two polylines.
double hausdorff(const Polyline& a, const Polyline& b);

}  // namespace filament
