#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "filament/density.hpp"
#include "filament/eigenfield.hpp"

namespace filament {

enum class Direction { forward, backward, both };
enum class StopReason { horizon, left_bounds, degenerate };

const char* to_string(StopReason reason);

struct Bounds {
  Vector2d lo = Vector2d::Constant(-std::numeric_limits<double>::infinity());
  Vector2d hi = Vector2d::Constant(std::numeric_limits<double>::infinity());

  bool contains(const Vector2d& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

struct FlowSettings {
  double step = 1e-3;
  double t_max = 1.0;
  Direction direction = Direction::both;
  Bounds bounds;
  /// Trace V / |V| instead of V. Changes the time clock.
  bool normalize_v = false;
};

/// Samples of X(t) ordered by t. With both directions the backward branch is
/// stored first so times increase through 0 at `origin`.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector2d> points;
  std::size_t origin = 0;
  StopReason forward_reason = StopReason::horizon;
  StopReason backward_reason = StopReason::horizon;
  /// The rejected step endpoint of each branch that stopped early.
  std::optional<Vector2d> forward_stop;
  std::optional<Vector2d> backward_stop;

  std::size_t size() const noexcept { return points.size(); }
  /// Early-stop reason of the forward branch, else of the backward branch.
  StopReason terminal_reason() const;
};

/// The vector field driving the trace, V(x) or V(x)/|V(x)|, times `sign`.
Vector2d flow_velocity(const DensityField& field, const Vector2d& x, bool normalize, double sign);

/// One classical RK4 step of size dt for dX/dt = sign * V(X).
Vector2d rk4_step(const DensityField& field, const Vector2d& x, double dt, bool normalize, double sign);

/// Throws std::invalid_argument if x0 is outside the bounds, DegeneracyError
/// if d2f(x0) fails the guard.
Trajectory trace(const DensityField& field, const Vector2d& x0, const FlowSettings& settings,
                 const DegeneracyGuard& guard = {});

}  // namespace filament
