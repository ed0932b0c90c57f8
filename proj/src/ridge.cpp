#include "filament/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace filament {

double a_value(const FieldJet& jet) { return jet.grad.dot(g_map(jet.d2)); }

std::vector<std::pair<double, double>> a_of_t(const DensityField& field, const Trajectory& traj,
                                              const DegeneracyGuard& guard) {
  std::vector<std::pair<double, double>> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FieldJet jet = field.eval_all(traj.points[i]);
    if (!guard.accepts(jet.d2)) throw DegeneracyError(traj.points[i], jet.d2);
    out.emplace_back(traj.times[i], a_value(jet));
  }
  return out;
}

namespace {

bool qualifies(const ScanSample& near, const ScanSample& far) {
  const bool crosses = (near.a < 0.0 && far.a > 0.0) || (near.a > 0.0 && far.a < 0.0) || far.a == 0.0;
  return crosses && near.lambda2 < 0.0 && far.lambda2 < 0.0;
}

FilamentHit make_hit(const DensityField& field, const Vector2d& x0, double theta, const Vector2d& point,
                     const DegeneracyGuard& guard) {
  FilamentHit hit;
  hit.start = x0;
  hit.theta = theta;
  hit.point = point;
  hit.found = true;
  const FieldJet jet = field.eval_all(point);
  hit.lambda2 = j_map(jet.d2);
  hit.a_prime = a_tilde_prime_from_jet(jet, point, guard);
  return hit;
}

}  // namespace

ThetaSearch search_theta(const DensityField& field, const Vector2d& x0, const FlowSettings& flow,
                         const DegeneracyGuard& guard, double a_star) {
  if (!(std::abs(a_star) <= flow.t_max)) throw std::invalid_argument("find_theta: need |a_star| <= t_max");
  FlowSettings settings = flow;
  settings.t_max = std::max(std::abs(a_star), settings.step);

  ThetaSearch search;
  search.hit.start = x0;
  search.trajectory = trace(field, x0, settings, guard);
  const Trajectory& traj = search.trajectory;

  double scale = 0.0;
  search.samples.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const FieldJet jet = field.eval_all(traj.points[i]);
    ScanSample s{traj.times[i], a_value(jet), j_map(jet.d2)};
    scale = std::max(scale, std::abs(s.a));
    search.samples.push_back(s);
  }

  const std::size_t o = traj.origin;
  const auto& samples = search.samples;
  if (samples[o].a == 0.0 && samples[o].lambda2 < 0.0) {
    search.bracket = std::make_pair(o, o);
    search.hit = make_hit(field, x0, 0.0, x0, guard);
    return search;
  }

  const std::size_t n_fwd = traj.size() - 1 - o;
  const std::size_t n_bwd = o;
  for (std::size_t k = 1; k <= std::max(n_fwd, n_bwd); ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      std::size_t near;
      std::size_t far;
      if (dir == 0) {
        if (k > n_fwd) continue;
        near = o + k - 1;
        far = o + k;
      } else {
        if (k > n_bwd) continue;
        near = o - k + 1;
        far = o - k;
      }
      if (std::abs(samples[far].t) > std::abs(a_star) || !qualifies(samples[near], samples[far])) continue;
      search.bracket = std::make_pair(near, far);
      if (samples[far].a == 0.0) {
        search.hit = make_hit(field, x0, samples[far].t, traj.points[far], guard);
        return search;
      }

      // Bisection on a partial RK4 step from the nearer sample.
      const double sign = dir == 0 ? 1.0 : -1.0;
      const Vector2d base = traj.points[near];
      const double a_base = samples[near].a;
      const double tol = 1e-10 * scale;
      double lo = 0.0;
      double hi = std::abs(samples[far].t - samples[near].t);
      Vector2d mid_point = traj.points[far];
      double mid = hi;
      for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        mid_point = rk4_step(field, base, mid, settings.normalize_v, sign);
        const double a_mid = a_value(field.eval_all(mid_point));
        if (std::abs(a_mid) < tol || hi - lo <= 1e-15 * std::max(1.0, std::abs(samples[near].t))) break;
        if ((a_mid < 0.0) == (a_base < 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      search.hit = make_hit(field, x0, samples[near].t + sign * mid, mid_point, guard);
      return search;
    }
  }
  return search;
}

FilamentHit find_theta(const DensityField& field, const Vector2d& x0, const FlowSettings& flow,
                       const DegeneracyGuard& guard, double a_star) {
  return search_theta(field, x0, flow, guard, a_star).hit;
}

double Polyline::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  if (closed && points.size() > 2) len += (points.front() - points.back()).norm();
  return len;
}

double default_merge_radius(const DensityField& field) {
  if (const auto* kde = dynamic_cast<const KdeField*>(&field)) return 0.5 * kde->bandwidth();
  return 1e-3;
}

Polyline assemble_polyline(const std::vector<Vector2d>& hit_points, double merge_radius) {
  std::vector<Vector2d> kept;
  for (const auto& p : hit_points) {
    const bool near = std::any_of(kept.begin(), kept.end(),
                                  [&](const Vector2d& q) { return (p - q).norm() < merge_radius; });
    if (!near) kept.push_back(p);
  }
  Polyline line;
  if (kept.empty()) return line;

  Vector2d centroid = Vector2d::Zero();
  for (const auto& p : kept) centroid += p;
  centroid /= static_cast<double>(kept.size());
  std::size_t current = 0;
  for (std::size_t i = 1; i < kept.size(); ++i)
    if ((kept[i] - centroid).norm() > (kept[current] - centroid).norm()) current = i;

  std::vector<bool> used(kept.size(), false);
  used[current] = true;
  line.points.push_back(kept[current]);
  double max_gap = 0.0;
  double path = 0.0;
  for (std::size_t step = 1; step < kept.size(); ++step) {
    std::size_t best = kept.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < kept.size(); ++j) {
      if (used[j]) continue;
      const double d = (kept[j] - kept[current]).norm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    used[best] = true;
    current = best;
    line.points.push_back(kept[best]);
    max_gap = std::max(max_gap, best_d);
    path += best_d;
  }
  if (line.points.size() >= 4) {
    const double closing = (line.points.back() - line.points.front()).norm();
    line.closed = closing <= 2.0 * max_gap && closing < 0.5 * path;
  }
  return line;
}

FilamentEstimate estimate_filament(const DensityField& field, const std::vector<Vector2d>& starts,
                                   const FlowSettings& flow, const DegeneracyGuard& guard, double a_star,
                                   std::optional<double> merge_radius) {
  FilamentEstimate est;
  est.starts = starts;
  est.hits.resize(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    est.hits[i].start = starts[i];
    try {
      est.hits[i] = find_theta(field, starts[i], flow, guard, a_star);
      if (!est.hits[i].found) est.failures.push_back({i, "no ridge crossing within a_star"});
    } catch (const std::exception& e) {
      est.failures.push_back({i, e.what()});
    }
  }
  std::vector<Vector2d> points;
  for (const auto& hit : est.hits)
    if (hit.found) points.push_back(hit.point);
  est.polyline = assemble_polyline(points, merge_radius.value_or(default_merge_radius(field)));
  return est;
}

namespace {

std::vector<std::pair<Vector2d, Vector2d>> segments(const Polyline& line) {
  std::vector<std::pair<Vector2d, Vector2d>> segs;
  const auto& p = line.points;
  for (std::size_t i = 1; i < p.size(); ++i) segs.emplace_back(p[i - 1], p[i]);
  if (line.closed && p.size() > 2) segs.emplace_back(p.back(), p.front());
  return segs;
}

double point_segment_distance(const Vector2d& x, const Vector2d& a, const Vector2d& b) {
  const Vector2d d = b - a;
  const double len2 = d.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (x - (a + t * d)).norm();
}

double distance_to(const Vector2d& x, const Polyline& line,
                   const std::vector<std::pair<Vector2d, Vector2d>>& segs) {
  if (segs.empty()) return (x - line.points.front()).norm();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : segs) best = std::min(best, point_segment_distance(x, a, b));
  return best;
}

std::vector<Vector2d> resample(const std::vector<std::pair<Vector2d, Vector2d>>& segs, const Polyline& line,
                               double step) {
  std::vector<Vector2d> out;
  if (segs.empty()) {
    out.push_back(line.points.front());
    return out;
  }
  for (const auto& [a, b] : segs) {
    const double len = (b - a).norm();
    const auto pieces = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step)));
    for (std::size_t k = 0; k < pieces; ++k) out.push_back(a + (b - a) * (static_cast<double>(k) / pieces));
  }
  out.push_back(segs.back().second);
  return out;
}

double min_segment(const std::vector<std::pair<Vector2d, Vector2d>>& segs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& [a, b] : segs) {
    const double len = (b - a).norm();
    if (len > 0.0) m = std::min(m, len);
  }
  return m;
}

}  // namespace

double hausdorff(const Polyline& a, const Polyline& b) {
  if (a.points.empty() || b.points.empty()) throw std::invalid_argument("hausdorff: empty polyline");
  const auto sa = segments(a);
  const auto sb = segments(b);
  double step = std::min(min_segment(sa), min_segment(sb)) / 10.0;
  const double total = a.length() + b.length();
  if (!std::isfinite(step)) step = 1.0;
  // Keep the resampling bounded when a polyline has a tiny segment.
  step = std::max(step, total / 2e5);
  if (!(step > 0.0)) step = 1.0;

  double d = 0.0;
  for (const auto& x : resample(sa, a, step)) d = std::max(d, distance_to(x, b, sb));
  for (const auto& x : resample(sb, b, step)) d = std::max(d, distance_to(x, a, sa));
  return d;
}

}  // namespace filament
