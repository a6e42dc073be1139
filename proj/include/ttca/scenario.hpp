#pragma once

// Scenario description for the comparative lane-change experiment, loaded
// from a JSON document. Speeds may be given as plain numbers (m/s) or as
// strings carrying a unit, e.g. "108 km/h" or "30 m/s".

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttca/curve_fit.hpp"
#include "ttca/error.hpp"
#include "ttca/field.hpp"
#include "ttca/ttc.hpp"
#include "ttca/types.hpp"
#include "ttca/vehicle_sim.hpp"

namespace ttca {

struct TtcSettings {
  double threshold = kDefaultTtcThreshold;  // [s]
  double d_stop = 5.0;                      // [m]
  double t_lc = 3.5;                        // [s]
};

struct FitSettings {
  bool enabled = true;            // false: the planner tracks raw waypoints
  bool constrained = true;        // false: plain least squares
  double sample_spacing = 0.5;    // [m]
  double taper_fraction = 0.1;    // trailing share of points up-weighted
  double taper_factor = 4.0;
  // The fitted data starts this long (closing-speed seconds) before the
  // constraint window.
  double lead_time = 3.5;         // [s]
  std::optional<double> y_upper;  // corridor overrides [m]
  std::optional<double> y_lower;
  // Join the cubic where it meets the waypoints instead of at the start of
  // the fitted data.
  bool splice_at_crossing = false;
  // Leave the cubic once it reaches the target lane center and keep that
  // center from then on.
  bool hold_at_target = false;
};

struct Scenario {
  std::string name = "scenario";
  RoadGeometry road;
  EgoState ego;
  std::optional<ObstacleState> obstacle;
  std::optional<double> target_lane_center;
  FieldConfig field;
  DescentOptions descent;
  TtcSettings ttc;
  FitSettings fit;
  SimConfig sim;
  // Plan in a frame moving with the obstacle (true) or in the road frame.
  bool co_moving = true;

  void validate() const;
};

// ---- units ---------------------------------------------------------------

inline constexpr double kKmhToMs = 1000.0 / 3600.0;

// Accepts "<number>", "<number> m/s", "<number> km/h" (also "kmh", "kph").
inline double parse_speed(const std::string& text, const std::string& key) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t j = i;
  while (j < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.' ||
          text[j] == '-' || text[j] == '+' || text[j] == 'e' || text[j] == 'E')) {
    ++j;
  }
  const double v = parse_double(std::string_view(text).substr(i, j - i), key);
  std::string unit;
  for (std::size_t k = j; k < text.size(); ++k) {
    if (!std::isspace(static_cast<unsigned char>(text[k]))) {
      unit += static_cast<char>(std::tolower(static_cast<unsigned char>(text[k])));
    }
  }
  if (unit.empty() || unit == "m/s" || unit == "mps") return v;
  if (unit == "km/h" || unit == "kmh" || unit == "kph") return v * kKmhToMs;
  throw ParseError(key + ": unknown speed unit '" + unit + "'");
}

inline double ms_to_kmh(double v) { return v / kKmhToMs; }

// ---- lanes ---------------------------------------------------------------

inline std::vector<double> lane_centers(const RoadGeometry& r) {
  std::vector<double> bounds{r.edge_lower_y};
  bounds.insert(bounds.end(), r.lane_divider_ys.begin(), r.lane_divider_ys.end());
  bounds.push_back(r.edge_upper_y);
  std::vector<double> c;
  for (std::size_t i = 1; i < bounds.size(); ++i) {
    c.push_back(0.5 * (bounds[i - 1] + bounds[i]));
  }
  return c;
}

inline std::size_t lane_index(const RoadGeometry& r, double y) {
  std::size_t k = 0;
  for (double d : r.lane_divider_ys) {
    if (y > d) ++k;
  }
  return k;
}

// Explicit target if configured; otherwise the adjacent lane below the ego,
// or above it when the ego already drives in the lowest lane.
inline double target_center(const Scenario& s) {
  if (s.target_lane_center) return *s.target_lane_center;
  const auto centers = lane_centers(s.road);
  const auto k = lane_index(s.road, s.ego.y);
  if (centers.size() < 2) return centers.front();
  return k > 0 ? centers[k - 1] : centers[k + 1];
}

// Corridor bounds for the constrained fit. The upper bound keeps the ego a
// lateral reference offset clear of the obstacle's line; the lower bound
// keeps half the vehicle width inside the road edge on the target side.
struct Corridor {
  double y_lower = 0.0;
  double y_upper = 0.0;
};

inline Corridor corridor(const Scenario& s) {
  Corridor c;
  const double half_w = 0.5 * s.ego.params.width;
  const double target = target_center(s);
  const double obs_y = s.obstacle ? s.obstacle->y : s.ego.y;
  if (target <= obs_y) {
    c.y_upper = obs_y - s.field.lateral_ref_offset;
    c.y_lower = s.road.edge_lower_y + half_w;
  } else {
    // Mirrored: the target lies above the obstacle.
    c.y_lower = obs_y + s.field.lateral_ref_offset;
    c.y_upper = s.road.edge_upper_y - half_w;
  }
  if (s.fit.y_upper) c.y_upper = *s.fit.y_upper;
  if (s.fit.y_lower) c.y_lower = *s.fit.y_lower;
  return c;
}

inline void Scenario::validate() const {
  road.validate();
  ego.params.validate("ego");
  field.validate();
  sim.vehicle.validate();
  if (!(ego.speed > 0.0)) throw ValidationError("ego: speed must be positive");
  const double lo = road.edge_lower_y + 0.5 * ego.params.width;
  const double hi = road.edge_upper_y - 0.5 * ego.params.width;
  if (!(ego.y > lo && ego.y < hi)) {
    throw ValidationError("ego: y must lie inside the road edges");
  }
  if (obstacle) {
    obstacle->params.validate("obstacle");
    if (!(obstacle->speed >= 0.0)) {
      throw ValidationError("obstacle: speed must not be negative");
    }
    if (!(std::abs(obstacle->heading) < std::numbers::pi / 2)) {
      throw ValidationError("obstacle: |heading| must be below pi/2");
    }
    if (!(obstacle->y > road.edge_lower_y && obstacle->y < road.edge_upper_y)) {
      throw ValidationError("obstacle: y must lie inside the road edges");
    }
  }
  if (!(ttc.threshold >= 0.0 && ttc.d_stop >= 0.0 && ttc.t_lc > 0.0)) {
    throw ValidationError(
        "ttc: threshold and d_stop must be nonnegative, t_lc positive");
  }
  if (!(fit.sample_spacing > 0.0 && fit.taper_factor > 0.0 &&
        fit.taper_fraction >= 0.0 && fit.taper_fraction <= 1.0 &&
        fit.lead_time >= 0.0)) {
    throw ValidationError("fit: invalid sampling or weighting settings");
  }
  if (!(sim.dt > 0.0 && sim.dt <= 0.05)) {
    throw ValidationError("sim: dt must lie in (0, 0.05] s");
  }
  if (std::abs(sim.vehicle.wheelbase() - ego.params.wheelbase) > 1e-9) {
    throw ValidationError(
        "sim: l_f + l_r must equal the ego vehicle wheelbase");
  }
  if (!(descent.step_len > 0.0)) {
    throw ValidationError("descent: step_len must be positive");
  }
  if (!(field.x_target > ego.x)) {
    throw ValidationError("field: x_target must lie ahead of the ego");
  }
}

// ---- JSON ----------------------------------------------------------------

namespace detail {

using json = nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_ + ": expected an object");
  }

  ~Reader() = default;

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  Reader child(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), name(key));
  }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_number()) throw ParseError(name(key) + ": expected a number");
    out = v.get<double>();
  }

  void optional_number(const char* key, std::optional<double>& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_number()) throw ParseError(name(key) + ": expected a number");
    out = v.get<double>();
  }

  void speed(const char* key, double& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (v.is_number()) {
      out = v.get<double>();
    } else if (v.is_string()) {
      out = parse_speed(v.get<std::string>(), name(key));
    } else {
      throw ParseError(name(key) + ": expected a speed");
    }
  }

  void boolean(const char* key, bool& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ParseError(name(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_string()) throw ParseError(name(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void size(const char* key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ParseError(name(key) + ": expected a nonnegative integer");
    }
    out = v.get<std::size_t>();
  }

  void numbers(const char* key, std::vector<double>& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_array()) throw ParseError(name(key) + ": expected an array");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ParseError(name(key) + ": expected numbers");
      out.push_back(e.get<double>());
    }
  }

  // Every key must have been consumed; typos should not pass silently.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ParseError(name(it.key().c_str()) + ": unknown key");
      }
    }
  }

  std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_vehicle(Reader r, VehicleParams& v) {
  r.number("mass", v.mass);
  r.number("max_brake_decel", v.max_brake_decel);
  r.number("wheelbase", v.wheelbase);
  r.number("width", v.width);
  r.finish();
}

inline void read_bicycle(Reader r, BicycleParams& b) {
  r.number("mass", b.mass);
  r.number("yaw_inertia", b.yaw_inertia);
  r.number("dist_cg_front", b.dist_cg_front);
  r.number("dist_cg_rear", b.dist_cg_rear);
  r.number("cornering_stiff_front", b.cornering_stiff_front);
  r.number("cornering_stiff_rear", b.cornering_stiff_rear);
  r.finish();
}

inline ObstacleSpreadForm parse_spread_form(const std::string& s,
                                            const std::string& key) {
  if (s == "gaussian") return ObstacleSpreadForm::Gaussian;
  if (s == "linear") return ObstacleSpreadForm::Linear;
  throw ParseError(key + ": expected \"gaussian\" or \"linear\"");
}

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

}  // namespace detail

inline Scenario load_scenario(const std::string& text,
                              const std::string& source = "scenario") {
  using detail::json;
  json doc;
  bool blank = true;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
  }
  if (blank) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ParseError(source + ":" +
                       std::to_string(detail::line_of_offset(text, e.byte)) +
                       ": " + e.what());
    }
  }
  if (!doc.is_object()) throw ParseError(source + ": top level must be an object");

  Scenario s;
  s.name = source;
  detail::Reader top(doc, "");
  top.string("name", s.name);

  if (!top.has("road")) throw ValidationError("road: required key is missing");
  {
    auto r = top.child("road");
    r.number("edge_lower_y", s.road.edge_lower_y);
    r.number("edge_upper_y", s.road.edge_upper_y);
    r.numbers("lane_dividers", s.road.lane_divider_ys);
    r.number("lane_width", s.road.lane_width);
    r.finish();
  }
  if (!top.has("ego")) throw ValidationError("ego: required key is missing");
  {
    auto r = top.child("ego");
    r.number("x", s.ego.x);
    r.number("y", s.ego.y);
    r.speed("speed", s.ego.speed);
    r.number("accel", s.ego.accel);
    if (r.has("vehicle")) detail::read_vehicle(r.child("vehicle"), s.ego.params);
    r.finish();
  }
  if (top.has("obstacle") && !doc.at("obstacle").is_null()) {
    auto r = top.child("obstacle");
    ObstacleState o;
    r.number("x", o.x);
    r.number("y", o.y);
    r.speed("speed", o.speed);
    r.number("heading", o.heading);
    r.number("accel", o.accel);
    if (r.has("vehicle")) detail::read_vehicle(r.child("vehicle"), o.params);
    r.finish();
    s.obstacle = o;
  } else if (top.has("obstacle")) {
    (void)top.raw("obstacle");
  }
  top.optional_number("target_lane_center", s.target_lane_center);
  top.boolean("co_moving_frame", s.co_moving);

  if (top.has("field")) {
    auto r = top.child("field");
    r.number("lambda", s.field.lambda);
    r.number("xi", s.field.xi);
    r.number("a_lane", s.field.a_lane);
    r.number("sigma_lane", s.field.sigma_lane);
    r.number("a_obs", s.field.a_obs);
    r.number("u_min", s.field.u_min);
    r.number("x_target", s.field.x_target);
    r.number("lateral_ref_offset", s.field.lateral_ref_offset);
    r.number("mass_unit", s.field.mass_unit);
    r.number("edge_epsilon", s.field.edge_epsilon);
    r.boolean("strict_safety_distance", s.field.strict_safety_distance);
    if (r.has("spread_form")) {
      std::string f;
      r.string("spread_form", f);
      s.field.spread_form = detail::parse_spread_form(f, "field.spread_form");
    }
    r.finish();
  }
  if (top.has("descent")) {
    auto r = top.child("descent");
    r.number("step_len", s.descent.step_len);
    r.size("max_steps", s.descent.max_steps);
    r.finish();
  }
  if (top.has("ttc")) {
    auto r = top.child("ttc");
    r.number("threshold", s.ttc.threshold);
    r.number("d_stop", s.ttc.d_stop);
    r.number("t_lc", s.ttc.t_lc);
    r.finish();
  }
  if (top.has("fit")) {
    auto r = top.child("fit");
    r.boolean("enabled", s.fit.enabled);
    r.boolean("constrained", s.fit.constrained);
    r.number("sample_spacing", s.fit.sample_spacing);
    r.number("taper_fraction", s.fit.taper_fraction);
    r.number("taper_factor", s.fit.taper_factor);
    r.number("lead_time", s.fit.lead_time);
    r.optional_number("y_upper", s.fit.y_upper);
    r.optional_number("y_lower", s.fit.y_lower);
    r.boolean("splice_at_crossing", s.fit.splice_at_crossing);
    r.boolean("hold_at_target", s.fit.hold_at_target);
    r.finish();
  }
  if (top.has("sim")) {
    auto r = top.child("sim");
    r.number("dt", s.sim.dt);
    r.number("duration", s.sim.duration);
    r.number("lookahead_gain", s.sim.controller.lookahead_gain);
    r.number("max_cross_track", s.sim.controller.max_cross_track);
    if (r.has("bicycle")) detail::read_bicycle(r.child("bicycle"), s.sim.vehicle);
    r.finish();
  }
  top.finish();

  s.validate();
  return s;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str(), path);
}

}  // namespace ttca
