#include "filament/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace filament {

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::horizon: return "horizon";
    case StopReason::left_bounds: return "left_bounds";
    case StopReason::degenerate: return "degenerate";
  }
  return "unknown";
}

StopReason Trajectory::terminal_reason() const {
  if (forward_reason != StopReason::horizon) return forward_reason;
  return backward_reason;
}

Vector2d flow_velocity(const DensityField& field, const Vector2d& x, bool normalize, double sign) {
  Vector2d v = g_map(field.d2(x));
  if (normalize) {
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
  }
  return sign * v;
}

Vector2d rk4_step(const DensityField& field, const Vector2d& x, double dt, bool normalize, double sign) {
  const Vector2d k1 = flow_velocity(field, x, normalize, sign);
  const Vector2d k2 = flow_velocity(field, x + 0.5 * dt * k1, normalize, sign);
  const Vector2d k3 = flow_velocity(field, x + 0.5 * dt * k2, normalize, sign);
  const Vector2d k4 = flow_velocity(field, x + dt * k3, normalize, sign);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

struct Branch {
  std::vector<double> times;
  std::vector<Vector2d> points;
  StopReason reason = StopReason::horizon;
  std::optional<Vector2d> stop;
};

Branch run_branch(const DensityField& field, const Vector2d& x0, const FlowSettings& settings,
                  const DegeneracyGuard& guard, double sign) {
  Branch b;
  Vector2d x = x0;
  // Whole steps land on k * step; a remainder below round-off is dropped so
  // t_max = k * step does not leave a sliver step behind.
  const double ratio = settings.t_max / settings.step;
  auto whole = static_cast<std::size_t>(std::floor(ratio));
  if (ratio - static_cast<double>(whole) > 1.0 - 1e-9) ++whole;
  const double rest = settings.t_max - static_cast<double>(whole) * settings.step;
  const std::size_t total = whole + (rest > 1e-9 * settings.step ? 1 : 0);
  double t_prev = 0.0;
  for (std::size_t k = 1; k <= total; ++k) {
    const double t = k == total ? settings.t_max : static_cast<double>(k) * settings.step;
    const Vector2d next = rk4_step(field, x, t - t_prev, settings.normalize_v, sign);
    if (!next.allFinite() || !guard.accepts(field.d2(next))) {
      b.reason = StopReason::degenerate;
      b.stop = next;
      return b;
    }
    if (!settings.bounds.contains(next)) {
      b.reason = StopReason::left_bounds;
      b.stop = next;
      return b;
    }
    x = next;
    t_prev = t;
    b.times.push_back(sign * t);
    b.points.push_back(x);
  }
  return b;
}

}  // namespace

Trajectory trace(const DensityField& field, const Vector2d& x0, const FlowSettings& settings,
                 const DegeneracyGuard& guard) {
  if (!(settings.step > 0.0) || !(settings.t_max >= settings.step))
    throw std::invalid_argument("trace: need step > 0 and t_max >= step");
  if (!settings.bounds.contains(x0)) throw std::invalid_argument("trace: start point outside bounds");
  const Vector3d d2 = field.d2(x0);
  if (!guard.accepts(d2)) throw DegeneracyError(x0, d2);

  Trajectory traj;
  if (settings.direction != Direction::forward) {
    Branch back = run_branch(field, x0, settings, guard, -1.0);
    traj.times.assign(back.times.rbegin(), back.times.rend());
    traj.points.assign(back.points.rbegin(), back.points.rend());
    traj.backward_reason = back.reason;
    traj.backward_stop = back.stop;
  }
  traj.origin = traj.points.size();
  traj.times.push_back(0.0);
  traj.points.push_back(x0);
  if (settings.direction != Direction::backward) {
    Branch fwd = run_branch(field, x0, settings, guard, 1.0);
    traj.times.insert(traj.times.end(), fwd.times.begin(), fwd.times.end());
    traj.points.insert(traj.points.end(), fwd.points.begin(), fwd.points.end());
    traj.forward_reason = fwd.reason;
    traj.forward_stop = fwd.stop;
  }
  return traj;
}

}  // namespace filament
