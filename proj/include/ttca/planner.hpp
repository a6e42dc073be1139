#pragma once

// The two lane-change planners and their comparison.
//
// Both planners descend the potential field from the ego position. The
// conventional one tracks those waypoints directly. The TTC-aware one first
// gates on time to collision, then replaces the waypoints around the
// maneuver with a cubic fitted under corridor bounds over the window in
// which the ego has to be clear of the obstacle's lane.
//
// Planning happens once, at t = 0. With a moving obstacle the field is set
// up in a frame travelling with the obstacle: there the ego closes in at
// v_ego - v_obs, so a planned path point x maps to the road frame as
// x0 + (x - x0) * v_ego / (v_ego - v_obs).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ttca/curve_fit.hpp"
#include "ttca/error.hpp"
#include "ttca/field.hpp"
#include "ttca/log.hpp"
#include "ttca/scenario.hpp"
#include "ttca/ttc.hpp"
#include "ttca/vehicle_sim.hpp"

namespace ttca {

struct PlanFrame {
  double origin = 0.0;   // ego x at planning time
  double stretch = 1.0;  // road-frame meters per planning-frame meter

  double to_road(double x) const { return origin + (x - origin) * stretch; }
  double to_plan(double x) const { return origin + (x - origin) / stretch; }
};

inline PlanFrame plan_frame(const Scenario& s) {
  PlanFrame f;
  f.origin = s.ego.x;
  if (s.co_moving && s.obstacle) {
    const double closing = s.ego.speed - s.obstacle->speed;
    if (closing > 0.0) {
      f.stretch = s.ego.speed / closing;
    } else {
      log_warn("obstacle is not being approached; planning in the road frame");
    }
  }
  return f;
}

inline double closing_speed(const Scenario& s) {
  if (!s.obstacle) return s.ego.speed;
  return s.co_moving ? s.ego.speed - s.obstacle->speed : s.ego.speed;
}

inline Scene make_scene(const Scenario& s) {
  return Scene::make(s.road, s.ego, s.field, s.obstacle);
}

inline LongitudinalPair longitudinal_pair(const Scenario& s) {
  LongitudinalPair p;
  p.v1 = s.ego.speed;
  p.a1 = s.ego.accel;
  p.v2 = s.obstacle->speed;
  p.a2 = s.obstacle->accel;
  p.d_rela = s.obstacle->x - s.ego.x;
  p.d_stop = s.ttc.d_stop;
  return p;
}

struct PlanResult {
  WaypointSet waypoints;  // planning frame
  TrajectoryLog log;
  std::optional<LcMetrics> metrics;
  std::string metrics_error;  // set when no lane change was detected

  // TTC-aware planner only.
  std::optional<TtcResult> ttc;
  std::optional<ConstraintWindow> window;
  std::optional<FitReport> fit;
  double fit_x_begin = 0.0;  // fitted data span, planning frame
  double fit_x_end = 0.0;
  double cubic_x_begin = 0.0;  // span where the cubic is tracked
  double cubic_x_end = 0.0;
};

namespace detail {

inline SimState initial_state(const Scenario& s) {
  SimState st;
  st.x = s.ego.x;
  st.y = s.ego.y;
  st.speed = s.ego.speed;
  return st;
}

inline std::vector<Point2> to_road(const std::vector<Point2>& pts,
                                   const PlanFrame& f) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({f.to_road(p.x), p.y});
  return out;
}

inline void finish_run(const Scenario& s, const ReferencePath& ref,
                       PlanResult& r) {
  r.log = track_path(ref, initial_state(s), s.sim);
  try {
    r.metrics = metrics(r.log, target_center(s));
  } catch (const NoLaneChangeDetected& e) {
    r.metrics_error = e.what();
  }
}

}  // namespace detail

inline WaypointSet plan_waypoints(const Scenario& s) {
  const Scene scene = make_scene(s);
  return descend_path(s.ego.x, s.ego.y, scene, s.descent);
}

// Conventional planner: raw field waypoints, tracked directly.
inline PlanResult run_cpf(const Scenario& s) {
  PlanResult r;
  r.waypoints = plan_waypoints(s);
  const PlanFrame frame = plan_frame(s);
  log_debug("cpf: " + std::to_string(r.waypoints.size()) + " waypoints");
  const auto ref = ReferencePath::polyline(detail::to_road(r.waypoints.points, frame));
  detail::finish_run(s, ref, r);
  return r;
}

// Weighted copy of the waypoints inside [x_begin, x_end]; the trailing
// share of points is up-weighted to pin the end of the maneuver.
inline WaypointSet fit_data(const WaypointSet& w, double x_begin, double x_end,
                            const FitSettings& fs) {
  WaypointSet d;
  for (const auto& p : w.points) {
    if (p.x >= x_begin && p.x <= x_end) d.points.push_back(p);
  }
  const std::size_t n = d.points.size();
  d.weights.assign(n, 1.0);
  const auto first_tapered = static_cast<std::size_t>(
      std::floor((1.0 - fs.taper_fraction) * static_cast<double>(n)));
  for (std::size_t i = first_tapered; i < n; ++i) d.weights[i] = fs.taper_factor;
  return d;
}

// Where the tracked reference switches from the field waypoints to the
// fitted cubic (x_in) and from the cubic to a constant lateral position
// (x_out), all in the planning frame.
struct Splice {
  double x_in = 0.0;
  double x_out = 0.0;
  double y_hold = 0.0;

  ReferencePath build(const WaypointSet& w, const CubicCoeffs& c,
                      const PlanFrame& frame) const {
    const auto& pts = w.points;
    std::vector<Point2> head;
    for (const auto& p : pts) {
      if (p.x < x_in) head.push_back(p);
    }
    if (!head.empty() && head.size() < pts.size()) {
      const Point2 a = head.back();
      const Point2 b = pts[head.size()];
      const double t = (x_in - a.x) / (b.x - a.x);
      head.push_back({x_in, a.y + t * (b.y - a.y)});
    }
    ReferencePath ref;
    if (!head.empty()) ref.add_polyline(detail::to_road(head, frame));
    const double xb = frame.to_road(x_in);
    const double xe = frame.to_road(x_out);
    ref.add_cubic(c, xb, xe, frame.origin, frame.stretch);
    const double x_last = frame.to_road(pts.back().x);
    if (x_last > xe) ref.add_constant(y_hold, xe, x_last);
    return ref;
  }
};

namespace detail {

inline double interp_waypoints(const WaypointSet& w, double x) {
  const auto& v = w.points;
  auto it = std::upper_bound(v.begin(), v.end(), x,
                             [](double q, const Point2& a) { return q < a.x; });
  if (it == v.begin()) return v.front().y;
  if (it == v.end()) return v.back().y;
  const Point2& b = *it;
  const Point2& a = *std::prev(it);
  return a.y + (x - a.x) / (b.x - a.x) * (b.y - a.y);
}

// First root of f on [a, b] sampled every h, refined by bisection.
template <typename F>
std::optional<double> first_root(F f, double a, double b, double h) {
  double x0 = a;
  double f0 = f(x0);
  if (f0 == 0.0) return x0;
  while (x0 < b) {
    const double x1 = std::min(b, x0 + h);
    const double f1 = f(x1);
    if ((f0 < 0.0) != (f1 < 0.0) || f1 == 0.0) {
      double lo = x0;
      double hi = x1;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(mid) < 0.0) == (f0 < 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    x0 = x1;
    f0 = f1;
  }
  return std::nullopt;
}

}  // namespace detail

inline Splice splice_reference(const WaypointSet& w, const CubicCoeffs& c,
                               double x_begin, double x_end, double target,
                               const FitSettings& fs) {
  Splice sp;
  sp.x_in = x_begin;
  sp.x_out = x_end;
  const double h = 0.05;
  if (fs.splice_at_crossing) {
    // Leave the waypoints where the cubic meets them, so the reference has
    // no jump.
    const auto gap = [&](double x) {
      return eval_cubic(c, x) - detail::interp_waypoints(w, x);
    };
    if (const auto x = detail::first_root(gap, x_begin, x_end, h)) sp.x_in = *x;
  }
  sp.y_hold = eval_cubic(c, sp.x_out);
  if (fs.hold_at_target) {
    const auto off = [&](double x) { return eval_cubic(c, x) - target; };
    if (const auto x = detail::first_root(off, sp.x_in, x_end, h)) {
      sp.x_out = *x;
      sp.y_hold = target;
    }
  }
  return sp;
}

// TTC-aware planner.
inline PlanResult run_ttca(const Scenario& s) {
  PlanResult r;
  r.waypoints = plan_waypoints(s);
  const PlanFrame frame = plan_frame(s);

  if (!s.obstacle || !s.fit.enabled) {
    if (s.obstacle) r.ttc = compute_ttc(longitudinal_pair(s));
    const auto ref =
        ReferencePath::polyline(detail::to_road(r.waypoints.points, frame));
    detail::finish_run(s, ref, r);
    return r;
  }

  const TtcResult ttc = compute_ttc(longitudinal_pair(s));
  r.ttc = ttc;
  log_info("ttc: " + (ttc.finite() ? std::to_string(ttc.seconds) + " s"
                                   : std::string("none")) +
           " (" + std::string(to_string(ttc.regime)) + ")");
  if (gate_lane_change(ttc, s.ttc.threshold) == GateDecision::BrakeFirst) {
    throw BrakeFirst(ttc.seconds, s.ttc.threshold);
  }

  // The window is placed with the critical TTC: by the time the ego is that
  // close to the obstacle, the lane change has to be over.
  const auto spreads = obstacle_spreads(s.ego, *s.obstacle, s.field);
  const Corridor cor = corridor(s);
  const auto& pts = r.waypoints.points;
  const ConstraintWindow raw =
      compute_window(s.ego, *s.obstacle, s.ttc.threshold, s.ttc.t_lc,
                     spreads.sigma_x, cor.y_lower, cor.y_upper,
                     s.fit.sample_spacing);
  // Without co-moving planning the window formula already uses road
  // coordinates and the ego speed in place of the closing speed.
  ConstraintWindow win = raw;
  if (!s.co_moving) {
    win.x_start = s.obstacle->x - s.ego.speed * (s.ttc.threshold + s.ttc.t_lc);
  }
  win = clip_window(win, pts.front().x, pts.back().x);
  r.window = win;

  const double v_close = closing_speed(s);
  r.fit_x_begin = std::max(pts.front().x, win.x_start - v_close * s.fit.lead_time);
  r.fit_x_end = win.x_end;
  const WaypointSet data = fit_data(r.waypoints, r.fit_x_begin, r.fit_x_end, s.fit);
  log_debug("ttca: window [" + std::to_string(win.x_start) + ", " +
            std::to_string(win.x_end) + "], fitting " +
            std::to_string(data.size()) + " points");

  FitReport rep = s.fit.constrained
                      ? fit_constrained(data, build_constraints(win))
                      : fit_unconstrained(data);
  if (rep.status == FitStatus::Stalled) {
    log_warn("constrained fit hit its iteration cap; using the last iterate");
  }
  r.fit = rep;

  const auto spliced = splice_reference(r.waypoints, rep.coeffs, r.fit_x_begin,
                                        r.fit_x_end, target_center(s), s.fit);
  r.cubic_x_begin = spliced.x_in;
  r.cubic_x_end = spliced.x_out;
  const ReferencePath ref = spliced.build(r.waypoints, rep.coeffs, frame);
  detail::finish_run(s, ref, r);
  return r;
}

struct ComparisonReport {
  PlanResult cpf;
  PlanResult ttca;
};

// Relative reduction (cpf - ttca) / cpf of one metric.
inline double reduction(double cpf, double ttca) {
  if (cpf == ttca) return 0.0;
  return (cpf - ttca) / cpf;
}

inline ComparisonReport compare(const Scenario& s) {
  // Each planner gets its own copy; neither can influence the other. The
  // TTC gate goes first: if it says brake, there is nothing to compare.
  const Scenario a = s;
  const Scenario b = s;
  ComparisonReport rep;
  rep.ttca = run_ttca(b);
  rep.cpf = run_cpf(a);
  return rep;
}

}  // namespace ttca
