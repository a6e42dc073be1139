#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ttca/error.hpp"

namespace ttca {

struct RoadGeometry {
  double edge_lower_y = 0.0;
  double edge_upper_y = 7.0;
  std::vector<double> lane_divider_ys{3.5};
  double lane_width = 3.5;

  void validate() const {
    if (!(edge_lower_y < edge_upper_y)) {
      throw ValidationError("road: edge_lower_y must be below edge_upper_y");
    }
    if (!(lane_width > 0.0)) throw ValidationError("road: lane_width must be positive");
    double prev = edge_lower_y;
    for (double d : lane_divider_ys) {
      if (!(d > prev)) {
        throw ValidationError(
            "road: dividers must increase strictly and lie inside the edges");
      }
      prev = d;
    }
    if (!lane_divider_ys.empty() && !(lane_divider_ys.back() < edge_upper_y)) {
      throw ValidationError("road: dividers must lie inside the edges");
    }
  }
};

struct VehicleParams {
  double mass = 1500.0;           // [kg]
  double max_brake_decel = 6.0;   // [m/s^2], positive
  double wheelbase = 2.8;         // [m]
  double width = 1.8;             // [m]

  void validate(const std::string& who) const {
    if (!(mass > 0 && max_brake_decel > 0 && wheelbase > 0 && width > 0)) {
      throw ValidationError(who + ": vehicle parameters must all be positive");
    }
  }
};

struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;  // [m/s]
  double accel = 0.0;  // [m/s^2]
  VehicleParams params;
};

struct ObstacleState {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;    // [m/s]
  double heading = 0.0;  // [rad]
  double accel = 0.0;    // [m/s^2]
  VehicleParams params;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct WaypointSet {
  std::vector<Point2> points;
  std::vector<double> weights;  // empty means all ones

  std::size_t size() const { return points.size(); }

  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 : weights[i];
  }

  void validate() const {
    if (!weights.empty() && weights.size() != points.size()) {
      throw ValidationError("waypoints: one weight per point is required");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
        throw ValidationError("waypoints: coordinates must be finite");
      }
      if (i > 0 && !(points[i].x > points[i - 1].x)) {
        throw ValidationError("waypoints: x must increase strictly");
      }
      if (!(weight(i) > 0.0)) {
        throw ValidationError("waypoints: weights must be positive");
      }
    }
  }
};

}  // namespace ttca
