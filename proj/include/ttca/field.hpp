#pragma once

// Composite potential field over the road plane and the waypoint generator
// that descends it.
//
//   attractive  1/2 lambda (x - x_target)^2
//   road        sum over both edges of 1/2 xi / (y - s_edge)^2, with each
//               singularity s_edge half a vehicle width inside its edge,
//               plus a Gaussian ridge A_lane exp(-(y - Y_i)^2 / (2 sigma^2))
//               on every lane divider
//   obstacle    A_obs exp(-C1/2 (dx^2/Sx + dy^2/Sy - C2)),
//               C1 = 1 - psi^2, C2 = 2 psi dx dy / (sigma_x sigma_y)
//
// The obstacle spreads come from the braking-based safety distance
//
//   D_min   = M v^2 / (2 a_b) - M_o v_o^2 / (2 a_bo) + (l + l_o) / 2
//   sigma_x = D_min sqrt(-1 / ln U)
//   sigma_y = sqrt(-d^2 / (2 ln(U / A_obs)))
//
// where d is a fixed lateral reference offset. Sx, Sy are sigma_x^2,
// sigma_y^2 in the Gaussian form, or sigma_x, sigma_y as literally written
// in the alternative form; see ObstacleSpreadForm.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ttca/error.hpp"
#include "ttca/types.hpp"

namespace ttca {

enum class ObstacleSpreadForm {
  // Spreads squared in the exponent. sigma_x, sigma_y are then lengths and
  // the field falls to exactly U at the lateral reference offset.
  Gaussian,
  // Spreads enter linearly, as the expression is sometimes written.
  Linear,
};

enum class GradientMode { Analytic, Numeric };

struct FieldConfig {
  double lambda = 0.05;
  double xi = 0.05;
  double a_lane = 1.0;
  double sigma_lane = 0.6;
  double a_obs = 10.0;
  double u_min = 0.05;
  double x_target = 200.0;
  double lateral_ref_offset = 2.65;  // [m]
  double mass_unit = 1000.0;         // kg per mass unit inside D_min
  double edge_epsilon = 1e-3;        // [m]
  bool strict_safety_distance = false;
  ObstacleSpreadForm spread_form = ObstacleSpreadForm::Gaussian;
  double numeric_step = 1e-4;  // [m], central differences

  void validate() const {
    if (!(lambda > 0 && xi > 0 && a_lane > 0 && sigma_lane > 0 && a_obs > 0)) {
      throw ValidationError(
          "field: lambda, xi, a_lane, sigma_lane and a_obs must be positive");
    }
    if (!(u_min > 0 && u_min < a_obs)) {
      throw ValidationError("field: u_min must satisfy 0 < u_min < a_obs");
    }
    if (!(u_min < 1.0)) {
      throw ValidationError("field: u_min must be below 1 for a real sigma_x");
    }
    if (!(lateral_ref_offset > 0)) {
      throw ValidationError("field: lateral_ref_offset must be positive");
    }
    if (!(mass_unit > 0 && edge_epsilon > 0 && numeric_step > 0)) {
      throw ValidationError(
          "field: mass_unit, edge_epsilon and numeric_step must be positive");
    }
  }
};

// Safety distance between ego and obstacle, clamped below at half the summed
// wheelbases unless strict mode is on.
inline double safety_distance(const EgoState& ego, const ObstacleState& obs,
                              const FieldConfig& cfg) {
  const auto& e = ego.params;
  const auto& o = obs.params;
  const double half_wb = 0.5 * (e.wheelbase + o.wheelbase);
  const double d = (e.mass / cfg.mass_unit) * ego.speed * ego.speed /
                       (2.0 * e.max_brake_decel) -
                   (o.mass / cfg.mass_unit) * obs.speed * obs.speed /
                       (2.0 * o.max_brake_decel) +
                   half_wb;
  if (cfg.strict_safety_distance) {
    if (!(d > 0.0)) {
      throw NonpositiveSafetyDistance("safety distance " + std::to_string(d) +
                                      " m is not positive");
    }
    return d;
  }
  return std::max(d, half_wb);
}

struct ObstacleSpreads {
  double d_min = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
};

inline ObstacleSpreads obstacle_spreads(const EgoState& ego,
                                        const ObstacleState& obs,
                                        const FieldConfig& cfg) {
  ObstacleSpreads s;
  s.d_min = safety_distance(ego, obs, cfg);
  s.sigma_x = s.d_min * std::sqrt(-1.0 / std::log(cfg.u_min));
  const double off = cfg.lateral_ref_offset;
  s.sigma_y = std::sqrt(-off * off / (2.0 * std::log(cfg.u_min / cfg.a_obs)));
  return s;
}

// An obstacle with its spreads resolved, ready for repeated evaluation.
struct ObstacleField {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
  double amplitude = 0.0;
  ObstacleSpreads spreads;
  ObstacleSpreadForm form = ObstacleSpreadForm::Gaussian;

  static ObstacleField make(const ObstacleState& obs, const EgoState& ego,
                            const FieldConfig& cfg) {
    ObstacleField f;
    f.x = obs.x;
    f.y = obs.y;
    f.psi = obs.heading;
    f.amplitude = cfg.a_obs;
    f.spreads = obstacle_spreads(ego, obs, cfg);
    f.form = cfg.spread_form;
    return f;
  }

  double sx_den() const {
    const double s = spreads.sigma_x;
    return form == ObstacleSpreadForm::Gaussian ? s * s : s;
  }
  double sy_den() const {
    const double s = spreads.sigma_y;
    return form == ObstacleSpreadForm::Gaussian ? s * s : s;
  }

  double exponent(double px, double py) const {
    const double dx = px - x;
    const double dy = py - y;
    const double c1 = 1.0 - psi * psi;
    const double c2 =
        2.0 * psi * dx * dy / (spreads.sigma_x * spreads.sigma_y);
    return -0.5 * c1 * (dx * dx / sx_den() + dy * dy / sy_den() - c2);
  }

  double value(double px, double py) const {
    return amplitude * std::exp(exponent(px, py));
  }

  std::pair<double, double> gradient(double px, double py) const {
    const double dx = px - x;
    const double dy = py - y;
    const double c1 = 1.0 - psi * psi;
    const double cross = 2.0 * psi / (spreads.sigma_x * spreads.sigma_y);
    const double p = value(px, py);
    const double de_dx = -0.5 * c1 * (2.0 * dx / sx_den() - cross * dy);
    const double de_dy = -0.5 * c1 * (2.0 * dy / sy_den() - cross * dx);
    return {p * de_dx, p * de_dy};
  }
};

// Everything the field needs: road, ego vehicle geometry, configuration and
// an optional obstacle.
struct Scene {
  RoadGeometry road;
  VehicleParams ego_params;
  FieldConfig cfg;
  std::optional<ObstacleField> obstacle;

  static Scene make(const RoadGeometry& road, const EgoState& ego,
                    const FieldConfig& cfg,
                    const std::optional<ObstacleState>& obs) {
    Scene s;
    s.road = road;
    s.ego_params = ego.params;
    s.cfg = cfg;
    if (obs) s.obstacle = ObstacleField::make(*obs, ego, cfg);
    return s;
  }

  // Singularity lines of the edge terms.
  double lower_wall() const { return road.edge_lower_y + 0.5 * ego_params.width; }
  double upper_wall() const { return road.edge_upper_y - 0.5 * ego_params.width; }
};

inline double attractive_potential(double x, const FieldConfig& cfg) {
  const double d = x - cfg.x_target;
  return 0.5 * cfg.lambda * d * d;
}

namespace detail {

inline void check_edges(double y, double lo, double hi, double eps) {
  if (!(y - lo >= eps) || !(hi - y >= eps)) {
    throw EdgeSingularity("lateral position " + std::to_string(y) +
                          " m is outside the drivable band (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
}

}  // namespace detail

inline double road_potential(double y, const RoadGeometry& road,
                             const VehicleParams& veh, const FieldConfig& cfg) {
  const double lo = road.edge_lower_y + 0.5 * veh.width;
  const double hi = road.edge_upper_y - 0.5 * veh.width;
  detail::check_edges(y, lo, hi, cfg.edge_epsilon);
  const double dl = y - lo;
  const double du = y - hi;
  double p = 0.5 * cfg.xi / (dl * dl) + 0.5 * cfg.xi / (du * du);
  const double two_s2 = 2.0 * cfg.sigma_lane * cfg.sigma_lane;
  for (double yd : road.lane_divider_ys) {
    const double d = y - yd;
    p += cfg.a_lane * std::exp(-d * d / two_s2);
  }
  return p;
}

inline double road_potential_dy(double y, const RoadGeometry& road,
                                 const VehicleParams& veh,
                                 const FieldConfig& cfg) {
  const double lo = road.edge_lower_y + 0.5 * veh.width;
  const double hi = road.edge_upper_y - 0.5 * veh.width;
  detail::check_edges(y, lo, hi, cfg.edge_epsilon);
  const double dl = y - lo;
  const double du = y - hi;
  double g = -cfg.xi / (dl * dl * dl) - cfg.xi / (du * du * du);
  const double s2 = cfg.sigma_lane * cfg.sigma_lane;
  for (double yd : road.lane_divider_ys) {
    const double d = y - yd;
    g -= cfg.a_lane * d / s2 * std::exp(-d * d / (2.0 * s2));
  }
  return g;
}

inline double obstacle_potential(double x, double y, const ObstacleState& obs,
                                 const EgoState& ego, const FieldConfig& cfg) {
  return ObstacleField::make(obs, ego, cfg).value(x, y);
}

inline double total_potential(double x, double y, const Scene& s) {
  double p = attractive_potential(x, s.cfg) +
             road_potential(y, s.road, s.ego_params, s.cfg);
  if (s.obstacle) p += s.obstacle->value(x, y);
  return p;
}

struct Gradient {
  double dx = 0.0;
  double dy = 0.0;

  double norm() const { return std::hypot(dx, dy); }
};

inline Gradient potential_gradient(double x, double y, const Scene& s,
                                   GradientMode mode = GradientMode::Analytic) {
  if (mode == GradientMode::Numeric) {
    const double h = s.cfg.numeric_step;
    return {(total_potential(x + h, y, s) - total_potential(x - h, y, s)) /
                (2.0 * h),
            (total_potential(x, y + h, s) - total_potential(x, y - h, s)) /
                (2.0 * h)};
  }
  Gradient g{s.cfg.lambda * (x - s.cfg.x_target),
             road_potential_dy(y, s.road, s.ego_params, s.cfg)};
  if (s.obstacle) {
    const auto [ox, oy] = s.obstacle->gradient(x, y);
    g.dx += ox;
    g.dy += oy;
  }
  return g;
}

struct DescentOptions {
  double step_len = 0.5;           // [m]
  std::size_t max_steps = 20000;
  double forward_floor = 0.05;     // minimum x share of each unit step
  double stall_norm = 1e-9;
  GradientMode mode = GradientMode::Analytic;
};

// Follows the negative normalized gradient with fixed arc-length steps until
// x reaches the attractive target. The x share of every step is floored so
// the path always moves forward; the lateral share is rescaled to keep the
// step length.
inline WaypointSet descend_path(double x0, double y0, const Scene& s,
                                const DescentOptions& opt = {}) {
  if (!(opt.step_len > 0.0)) throw ValidationError("step_len must be positive");
  WaypointSet out;
  double x = x0;
  double y = y0;
  // Evaluating once up front rejects a start outside the drivable band.
  (void)total_potential(x, y, s);
  out.points.push_back({x, y});

  const double floor = opt.forward_floor;
  const double lateral_cap = std::sqrt(1.0 - floor * floor);
  for (std::size_t k = 0; k < opt.max_steps; ++k) {
    if (x >= s.cfg.x_target) return out;
    const Gradient g = potential_gradient(x, y, s, opt.mode);
    const double n = g.norm();
    if (!(n >= opt.stall_norm)) {
      throw LocalMinimumStall("gradient vanished at (" + std::to_string(x) +
                              ", " + std::to_string(y) + ")");
    }
    double ux = -g.dx / n;
    double uy = -g.dy / n;
    if (ux < floor) {
      if (uy == 0.0) {
        ux = 1.0;
      } else {
        ux = floor;
        uy = std::copysign(lateral_cap, uy);
      }
    }
    x += opt.step_len * ux;
    y += opt.step_len * uy;
    out.points.push_back({x, y});
  }
  if (x >= s.cfg.x_target) return out;
  throw MaxStepsExceeded("descent did not reach x_target within " +
                         std::to_string(opt.max_steps) + " steps");
}

}  // namespace ttca
