#pragma once

// Constant-speed linear bicycle model, a pure-pursuit path follower and the
// lane-change metrics computed from the resulting trace.
//
// States are position, yaw psi, yaw rate r and body sideslip beta. With
// linear tires F = C * alpha,
//
//   alpha_f  = delta - beta - l_f r / v
//   alpha_r  = -beta + l_r r / v
//   beta'    = (F_f + F_r) / (m v) - r
//   r'       = (l_f F_f - l_r F_r) / I_z
//   x'       = v cos(psi + beta),   y' = v sin(psi + beta)

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ttca/curve_fit.hpp"
#include "ttca/error.hpp"
#include "ttca/types.hpp"

namespace ttca {

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;

struct BicycleParams {
  double mass = 1500.0;                  // [kg]
  double yaw_inertia = 2500.0;           // [kg m^2]
  double dist_cg_front = 1.2;            // l_f [m]
  double dist_cg_rear = 1.6;             // l_r [m]
  double cornering_stiff_front = 80000;  // [N/rad]
  double cornering_stiff_rear = 80000;   // [N/rad]

  double wheelbase() const { return dist_cg_front + dist_cg_rear; }

  void validate() const {
    if (!(mass > 0 && yaw_inertia > 0 && dist_cg_front > 0 &&
          dist_cg_rear > 0 && cornering_stiff_front > 0 &&
          cornering_stiff_rear > 0)) {
      throw ValidationError("bicycle parameters must all be positive");
    }
  }

  // Understeer gradient term K in delta = L kappa + K v^2 kappa.
  double understeer_gradient() const {
    return mass / wheelbase() *
           (dist_cg_rear / cornering_stiff_front -
            dist_cg_front / cornering_stiff_rear);
  }
};

struct SimState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;       // [rad]
  double yaw_rate = 0.0;  // [rad/s]
  double sideslip = 0.0;  // [rad]
  double speed = 0.0;     // [m/s], constant over a run
};

struct StateDerivative {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double sideslip = 0.0;
};

inline StateDerivative dynamics(const SimState& s, double steer,
                                const BicycleParams& p) {
  const double v = s.speed;
  const double af = steer - s.sideslip - p.dist_cg_front * s.yaw_rate / v;
  const double ar = -s.sideslip + p.dist_cg_rear * s.yaw_rate / v;
  const double ff = p.cornering_stiff_front * af;
  const double fr = p.cornering_stiff_rear * ar;
  StateDerivative d;
  d.sideslip = (ff + fr) / (p.mass * v) - s.yaw_rate;
  d.yaw_rate = (p.dist_cg_front * ff - p.dist_cg_rear * fr) / p.yaw_inertia;
  d.yaw = s.yaw_rate;
  d.x = v * std::cos(s.yaw + s.sideslip);
  d.y = v * std::sin(s.yaw + s.sideslip);
  return d;
}

namespace detail {

inline SimState advance(const SimState& s, const StateDerivative& d, double h) {
  SimState o = s;
  o.x += h * d.x;
  o.y += h * d.y;
  o.yaw += h * d.yaw;
  o.yaw_rate += h * d.yaw_rate;
  o.sideslip += h * d.sideslip;
  return o;
}

}  // namespace detail

inline constexpr double kMaxSideslip = 30.0 / kDegPerRad;
inline constexpr double kMaxSteer = 30.0 / kDegPerRad;

// One RK4 step with the steering angle held over the step.
inline SimState step_dynamics(const SimState& s, double steer,
                              const BicycleParams& p, double dt) {
  if (!(dt > 0.0 && dt <= 0.05)) {
    throw ValidationError("time step must lie in (0, 0.05] s");
  }
  if (!(s.speed > 0.0)) throw ValidationError("speed must be positive");
  if (!(std::abs(steer) <= kMaxSteer)) {
    throw ValidationError("steering angle exceeds 30 degrees");
  }
  const auto k1 = dynamics(s, steer, p);
  const auto k2 = dynamics(detail::advance(s, k1, 0.5 * dt), steer, p);
  const auto k3 = dynamics(detail::advance(s, k2, 0.5 * dt), steer, p);
  const auto k4 = dynamics(detail::advance(s, k3, dt), steer, p);
  SimState o = s;
  o.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  o.y += dt / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
  o.yaw += dt / 6.0 * (k1.yaw + 2.0 * k2.yaw + 2.0 * k3.yaw + k4.yaw);
  o.yaw_rate += dt / 6.0 * (k1.yaw_rate + 2.0 * k2.yaw_rate +
                            2.0 * k3.yaw_rate + k4.yaw_rate);
  o.sideslip += dt / 6.0 * (k1.sideslip + 2.0 * k2.sideslip +
                            2.0 * k3.sideslip + k4.sideslip);
  const bool finite = std::isfinite(o.x) && std::isfinite(o.y) &&
                      std::isfinite(o.yaw) && std::isfinite(o.yaw_rate) &&
                      std::isfinite(o.sideslip);
  if (!finite || std::abs(o.sideslip) > kMaxSideslip) {
    throw NumericBlowup("vehicle state left its sanity bounds");
  }
  return o;
}

// Reference lateral position as a function of longitudinal position, made of
// consecutive pieces. Outside the covered range the nearest end value is held.
class ReferencePath {
 public:
  // Piecewise-linear through the points, which must have increasing x.
  static ReferencePath polyline(std::vector<Point2> pts) {
    if (pts.empty()) throw ValidationError("reference path needs points");
    ReferencePath r;
    r.add_polyline(std::move(pts));
    return r;
  }

  static ReferencePath from_waypoints(const WaypointSet& w) {
    return polyline(w.points);
  }

  void add_polyline(std::vector<Point2> pts) {
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (!(pts[i].x > pts[i - 1].x)) {
        throw ValidationError("reference polyline x must increase strictly");
      }
    }
    Piece p;
    p.kind = Piece::Kind::Polyline;
    p.x_begin = pts.front().x;
    p.x_end = pts.back().x;
    p.pts = std::move(pts);
    push(std::move(p));
  }

  // Cubic y = c(u) with u = origin + (x - origin) / stretch, for x in
  // [x_begin, x_end]. The stretch maps a planning frame onto this one.
  void add_cubic(const CubicCoeffs& c, double x_begin, double x_end,
                 double origin = 0.0, double stretch = 1.0) {
    Piece p;
    p.kind = Piece::Kind::Cubic;
    p.x_begin = x_begin;
    p.x_end = x_end;
    p.cubic = c;
    p.origin = origin;
    p.stretch = stretch;
    push(std::move(p));
  }

  void add_constant(double y, double x_begin, double x_end) {
    Piece p;
    p.kind = Piece::Kind::Constant;
    p.x_begin = x_begin;
    p.x_end = x_end;
    p.value = y;
    push(std::move(p));
  }

  double x_min() const { return pieces_.front().x_begin; }
  double x_max() const { return pieces_.back().x_end; }
  bool empty() const { return pieces_.empty(); }

  double y(double x) const {
    if (x <= x_min()) return eval(pieces_.front(), x_min());
    if (x >= x_max()) return eval(pieces_.back(), x_max());
    // Last piece starting at or before x.
    auto it = std::upper_bound(
        pieces_.begin(), pieces_.end(), x,
        [](double v, const Piece& p) { return v < p.x_begin; });
    const Piece& p = *std::prev(it);
    return eval(p, std::min(x, p.x_end));
  }

 private:
  struct Piece {
    enum class Kind { Polyline, Cubic, Constant };
    Kind kind = Kind::Constant;
    double x_begin = 0.0;
    double x_end = 0.0;
    std::vector<Point2> pts;
    CubicCoeffs cubic;
    double origin = 0.0;
    double stretch = 1.0;
    double value = 0.0;
  };

  void push(Piece p) {
    if (!(p.x_end >= p.x_begin)) {
      throw ValidationError("reference piece has a reversed range");
    }
    if (!pieces_.empty() && p.x_begin < pieces_.back().x_end) {
      throw ValidationError("reference pieces must not overlap");
    }
    pieces_.push_back(std::move(p));
  }

  static double eval(const Piece& p, double x) {
    switch (p.kind) {
      case Piece::Kind::Constant:
        return p.value;
      case Piece::Kind::Cubic:
        return eval_cubic(p.cubic, p.origin + (x - p.origin) / p.stretch);
      case Piece::Kind::Polyline: {
        const auto& v = p.pts;
        if (v.size() == 1) return v.front().y;
        auto it = std::upper_bound(
            v.begin(), v.end(), x,
            [](double q, const Point2& a) { return q < a.x; });
        if (it == v.begin()) return v.front().y;
        if (it == v.end()) return v.back().y;
        const Point2& b = *it;
        const Point2& a = *std::prev(it);
        const double t = (x - a.x) / (b.x - a.x);
        return a.y + t * (b.y - a.y);
      }
    }
    return 0.0;
  }

  std::vector<Piece> pieces_;
};

struct ControllerConfig {
  double lookahead_gain = 0.6;     // L_d = gain * v [s]
  double max_cross_track = 2.0;    // [m]
};

struct SimConfig {
  double dt = 0.01;      // [s]
  double duration = 0.0; // [s]; zero runs until the reference ends
  BicycleParams vehicle;
  ControllerConfig controller;
};

// One logged sample, kept in the units written to disk so a trace read back
// from CSV is identical to the one that produced it.
struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double yaw_deg = 0.0;
  double yawrate_degps = 0.0;
  double steer_deg = 0.0;
  double sideslip_deg = 0.0;
  double curvature = 0.0;  // [1/m]
};

struct TrajectoryLog {
  double dt = 0.0;
  std::vector<TrajectorySample> samples;
};

// Pure-pursuit steering from the rear axle: the goal point is where a circle
// of radius L_d around the rear axle meets the reference ahead of it.
inline double pure_pursuit_steer(const SimState& s, const ReferencePath& ref,
                                 const BicycleParams& p,
                                 const ControllerConfig& c) {
  const double ld = c.lookahead_gain * s.speed;
  const double xr = s.x - p.dist_cg_rear * std::cos(s.yaw);
  const double yr = s.y - p.dist_cg_rear * std::sin(s.yaw);
  double lo = xr;
  double hi = xr + ld;
  while (std::hypot(hi - xr, ref.y(hi) - yr) < ld) hi += ld;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::hypot(mid - xr, ref.y(mid) - yr) < ld) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double alpha = std::atan2(ref.y(lo) - yr, lo - xr) - s.yaw;
  const double steer =
      std::atan(2.0 * p.wheelbase() * std::sin(alpha) / ld);
  return std::clamp(steer, -kMaxSteer, kMaxSteer);
}

inline TrajectorySample make_sample(double t, const SimState& s, double steer,
                                    const BicycleParams& p) {
  const auto d = dynamics(s, steer, p);
  TrajectorySample out;
  out.t = t;
  out.x = s.x;
  out.y = s.y;
  out.yaw_deg = s.yaw * kDegPerRad;
  out.yawrate_degps = s.yaw_rate * kDegPerRad;
  out.steer_deg = steer * kDegPerRad;
  out.sideslip_deg = s.sideslip * kDegPerRad;
  out.curvature = (s.yaw_rate + d.sideslip) / s.speed;
  return out;
}

inline TrajectoryLog track_path(const ReferencePath& ref, const SimState& init,
                                const SimConfig& cfg) {
  cfg.vehicle.validate();
  if (ref.empty()) throw ValidationError("reference path is empty");
  if (!(init.speed > 0.0)) throw ValidationError("speed must be positive");

  double duration = cfg.duration;
  if (!(duration > 0.0)) {
    // Stop once the lookahead circle would run off the reference.
    const double ld = cfg.controller.lookahead_gain * init.speed;
    duration = (ref.x_max() - ld - init.x) / init.speed;
    if (!(duration > 0.0)) {
      throw ValidationError("reference path ends before the vehicle starts");
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(duration / cfg.dt));

  TrajectoryLog log;
  log.dt = cfg.dt;
  log.samples.reserve(n + 1);
  SimState s = init;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * cfg.dt;
    const double cte = std::abs(s.y - ref.y(s.x));
    if (cte > cfg.controller.max_cross_track) {
      throw TrackingDiverged("cross-track error " + std::to_string(cte) +
                             " m at t = " + std::to_string(t) + " s");
    }
    const double steer =
        pure_pursuit_steer(s, ref, cfg.vehicle, cfg.controller);
    log.samples.push_back(make_sample(t, s, steer, cfg.vehicle));
    if (i == n) break;
    s = step_dynamics(s, steer, cfg.vehicle, cfg.dt);
  }
  return log;
}

struct LcMetrics {
  double path_length = 0.0;           // [m], between the 5% and 95% crossings
  double lc_start_x = 0.0;            // [m]
  double lc_end_x = 0.0;              // [m]
  double lc_duration = 0.0;           // [s]
  double max_yaw = 0.0;               // [deg]
  double max_yaw_rate = 0.0;          // [deg/s]
  double max_front_tire_angle = 0.0;  // [deg]
  double max_sideslip = 0.0;          // [deg]
  double max_curvature = 0.0;         // [1/m]
  double terminal_lane_offset = 0.0;  // [m], signed
};

// Total arc length of the logged positions.
inline double polyline_length(const TrajectoryLog& log) {
  double len = 0.0;
  for (std::size_t i = 1; i < log.samples.size(); ++i) {
    len += std::hypot(log.samples[i].x - log.samples[i - 1].x,
                      log.samples[i].y - log.samples[i - 1].y);
  }
  return len;
}

namespace detail {

// Fractional sample index where the lateral progress first reaches `frac`.
inline double first_crossing(const std::vector<double>& progress, double frac) {
  for (std::size_t i = 1; i < progress.size(); ++i) {
    if (progress[i] >= frac) {
      const double a = progress[i - 1];
      const double b = progress[i];
      if (a >= frac) return static_cast<double>(i - 1);
      return static_cast<double>(i - 1) + (frac - a) / (b - a);
    }
  }
  return -1.0;
}

template <typename F>
double at_fraction(const std::vector<TrajectorySample>& s, double idx, F get) {
  const auto j = static_cast<std::size_t>(idx);
  if (j + 1 >= s.size()) return get(s.back());
  const double f = idx - static_cast<double>(j);
  return get(s[j]) + f * (get(s[j + 1]) - get(s[j]));
}

}  // namespace detail

// A lane change runs from the 5% to the 95% crossing of the lateral
// displacement from the initial y toward the target lane center.
inline LcMetrics metrics(const TrajectoryLog& log, double target_lane_center,
                         double min_displacement = 0.5) {
  const auto& s = log.samples;
  if (s.size() < 2) throw ValidationError("trajectory log is empty");
  const double y0 = s.front().y;
  const double span = target_lane_center - y0;

  double max_disp = 0.0;
  for (const auto& q : s) max_disp = std::max(max_disp, std::abs(q.y - y0));
  if (max_disp < min_displacement || std::abs(span) < min_displacement) {
    throw NoLaneChangeDetected("lateral displacement " +
                               std::to_string(max_disp) + " m is too small");
  }

  std::vector<double> progress(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) progress[i] = (s[i].y - y0) / span;
  const double i5 = detail::first_crossing(progress, 0.05);
  const double i95 = detail::first_crossing(progress, 0.95);
  if (i5 < 0.0 || i95 < 0.0) {
    throw NoLaneChangeDetected("trajectory never completes the lane change");
  }

  std::vector<double> cum(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    cum[i] = cum[i - 1] + std::hypot(s[i].x - s[i - 1].x, s[i].y - s[i - 1].y);
  }
  auto cum_at = [&](double idx) {
    const auto j = static_cast<std::size_t>(idx);
    if (j + 1 >= cum.size()) return cum.back();
    return cum[j] + (idx - static_cast<double>(j)) * (cum[j + 1] - cum[j]);
  };

  LcMetrics m;
  m.path_length = cum_at(i95) - cum_at(i5);
  m.lc_start_x = detail::at_fraction(s, i5, [](const auto& q) { return q.x; });
  m.lc_end_x = detail::at_fraction(s, i95, [](const auto& q) { return q.x; });
  m.lc_duration = detail::at_fraction(s, i95, [](const auto& q) { return q.t; }) -
                  detail::at_fraction(s, i5, [](const auto& q) { return q.t; });
  for (const auto& q : s) {
    m.max_yaw = std::max(m.max_yaw, std::abs(q.yaw_deg));
    m.max_yaw_rate = std::max(m.max_yaw_rate, std::abs(q.yawrate_degps));
    m.max_front_tire_angle = std::max(m.max_front_tire_angle, std::abs(q.steer_deg));
    m.max_sideslip = std::max(m.max_sideslip, std::abs(q.sideslip_deg));
    m.max_curvature = std::max(m.max_curvature, std::abs(q.curvature));
  }
  m.terminal_lane_offset = s.back().y - target_lane_center;
  return m;
}

// ---- CSV ---------------------------------------------------------------

inline constexpr const char* kTrajectoryHeader =
    "t,x,y,yaw_deg,yawrate_degps,steer_deg,sideslip_deg,curvature";

// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view text, const std::string& where) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ParseError(where + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryLog& log) {
  os << kTrajectoryHeader << '\n';
  for (const auto& q : log.samples) {
    os << format_double(q.t) << ',' << format_double(q.x) << ','
       << format_double(q.y) << ',' << format_double(q.yaw_deg) << ','
       << format_double(q.yawrate_degps) << ',' << format_double(q.steer_deg)
       << ',' << format_double(q.sideslip_deg) << ','
       << format_double(q.curvature) << '\n';
  }
}

inline TrajectoryLog read_trajectory_csv(std::istream& is,
                                         const std::string& name = "trajectory") {
  TrajectoryLog log;
  std::string line;
  if (!std::getline(is, line)) throw ParseError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) {
    throw ParseError(name + ":1: unexpected header '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = name + ":" + std::to_string(lineno);
    if (f.size() != 8) throw ParseError(where + ": expected 8 columns");
    TrajectorySample q;
    q.t = parse_double(f[0], where);
    q.x = parse_double(f[1], where);
    q.y = parse_double(f[2], where);
    q.yaw_deg = parse_double(f[3], where);
    q.yawrate_degps = parse_double(f[4], where);
    q.steer_deg = parse_double(f[5], where);
    q.sideslip_deg = parse_double(f[6], where);
    q.curvature = parse_double(f[7], where);
    log.samples.push_back(q);
  }
  if (log.samples.size() >= 2) log.dt = log.samples[1].t - log.samples[0].t;
  return log;
}

}  // namespace ttca
