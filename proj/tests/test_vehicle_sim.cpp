#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "ttca/error.hpp"
#include "ttca/vehicle_sim.hpp"

using namespace ttca;

namespace {

SimState cruising(double v, double y = 0.0) {
  SimState s;
  s.y = y;
  s.speed = v;
  return s;
}

SimState run_constant(double steer, double dt, double seconds, const BicycleParams& p) {
  SimState s = cruising(25.0);
  const auto n = static_cast<int>(std::llround(seconds / dt));
  for (int i = 0; i < n; ++i) s = step_dynamics(s, steer, p, dt);
  return s;
}

double state_gap(const SimState& a, const SimState& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.yaw - b.yaw),
                   std::abs(a.yaw_rate - b.yaw_rate), std::abs(a.sideslip - b.sideslip)});
}

// Smooth lane change reference: half cosine of width w over [x0, x0 + len].
ReferencePath cosine_change(double w, double x0, double len, double x_end) {
  std::vector<Point2> pts;
  for (double x = 0; x <= x_end; x += 0.5) {
    double y = 0;
    if (x >= x0 + len) {
      y = w;
    } else if (x > x0) {
      y = 0.5 * w * (1 - std::cos(std::numbers::pi * (x - x0) / len));
    }
    pts.push_back({x, y});
  }
  return ReferencePath::polyline(pts);
}

TrajectoryLog synthetic_log(double dt, double seconds, double v, double (*y)(double)) {
  TrajectoryLog log;
  log.dt = dt;
  const auto n = static_cast<int>(std::llround(seconds / dt));
  for (int i = 0; i <= n; ++i) {
    TrajectorySample s;
    s.t = i * dt;
    s.x = v * s.t;
    s.y = y(s.t);
    log.samples.push_back(s);
  }
  return log;
}

}  // namespace

// Oracles first.
TEST(SimOracle, SteadyYawRateMatchesClosedForm) {
  const BicycleParams p;
  const double steer = 0.01;
  const auto s = run_constant(steer, 0.01, 10.0, p);
  const double v = 25.0;
  const double gain = v / (p.wheelbase() + p.understeer_gradient() * v * v);
  EXPECT_NEAR(s.yaw_rate, gain * steer, 1e-6);
}

TEST(SimOracle, Rk4ConvergesAtFourthOrder) {
  const BicycleParams p;
  const auto ref = run_constant(0.02, 0.00125, 5.0, p);
  const double e1 = state_gap(run_constant(0.02, 0.02, 5.0, p), ref);
  const double e2 = state_gap(run_constant(0.02, 0.01, 5.0, p), ref);
  EXPECT_LT(e2, 1e-6);
  EXPECT_GT(e1 / e2, 10.0);  // 16 in the limit
}

TEST(SimOracle, CircleSteerMatchesKinematicPlusUndersteer) {
  const BicycleParams p;
  const double R = 250.0, v = 20.0;
  std::vector<Point2> pts;
  for (double x = 0; x <= 0.8 * R; x += 0.25) pts.push_back({x, R - std::sqrt(R * R - x * x)});
  SimConfig cfg;
  cfg.duration = 6.0;
  const auto log = track_path(ReferencePath::polyline(pts), cruising(v), cfg);
  // Wait out the entry transient, then average.
  double sum = 0;
  int n = 0;
  for (const auto& q : log.samples) {
    if (q.t >= 4.0) {
      sum += q.steer_deg;
      ++n;
    }
  }
  const double steady = sum / n / kDegPerRad;
  const double expect = (p.wheelbase() + p.understeer_gradient() * v * v) / R;
  EXPECT_NEAR(steady, expect, 0.1 * expect);
}

TEST(SimOracle, SinusoidCrossingTimes) {
  constexpr double T = 4.0, W = 3.5;
  const auto log = synthetic_log(0.01, 10.0, 30.0, [](double t) {
    if (t <= 1.0) return 0.0;
    if (t >= 1.0 + T) return W;
    return 0.5 * W * (1 - std::cos(std::numbers::pi * (t - 1.0) / T));
  });
  const auto m = metrics(log, W);
  const double expect = T * (std::acos(-0.9) - std::acos(0.9)) / std::numbers::pi;
  EXPECT_NEAR(m.lc_duration, expect, 0.01);
  EXPECT_NEAR(m.lc_start_x, 30.0 * (1.0 + T * std::acos(0.9) / std::numbers::pi), 0.3);
}

// Examples.
TEST(Sim, ZeroSteerOnlyAdvances) {
  const BicycleParams p;
  const auto s = step_dynamics(cruising(30.0, 2.0), 0.0, p, 0.01);
  EXPECT_DOUBLE_EQ(s.x, 0.3);
  EXPECT_EQ(s.y, 2.0);
  EXPECT_EQ(s.yaw, 0.0);
  EXPECT_EQ(s.yaw_rate, 0.0);
  EXPECT_EQ(s.sideslip, 0.0);
}

TEST(Sim, RejectsBadStepAndSteer) {
  const BicycleParams p;
  EXPECT_THROW(step_dynamics(cruising(30.0), 0.0, p, 0.0), ValidationError);
  EXPECT_THROW(step_dynamics(cruising(30.0), 0.0, p, 0.051), ValidationError);
  EXPECT_THROW(step_dynamics(cruising(30.0), 0.6, p, 0.01), ValidationError);
}

TEST(Sim, LargeSideslipBlowsUp) {
  const BicycleParams p;
  SimState s = cruising(30.0);
  s.sideslip = 0.6;
  EXPECT_THROW(step_dynamics(s, 0.0, p, 0.01), NumericBlowup);
}

TEST(Sim, StraightPathTracking) {
  SimConfig cfg;
  const auto log = track_path(ReferencePath::polyline({{0, 1}, {500, 1}}), cruising(30.0, 1.0), cfg);
  for (const auto& q : log.samples) {
    EXPECT_LE(std::abs(q.y - 1.0), 0.01);
    EXPECT_EQ(q.yaw_deg, 0.0);
  }
}

TEST(Sim, DivergenceIsReported) {
  SimConfig cfg;
  const auto ref = ReferencePath::polyline({{0, 0}, {10, 0}, {10.5, 5}, {500, 5}});
  EXPECT_THROW(track_path(ref, cruising(30.0), cfg), TrackingDiverged);
}

TEST(Metrics, StraightRunHasLengthButNoLaneChange) {
  const auto log = synthetic_log(0.01, 10.0, 10.0, [](double) { return 0.0; });
  EXPECT_NEAR(polyline_length(log), 100.0, 1e-9);
  EXPECT_THROW(metrics(log, 3.5), NoLaneChangeDetected);
}

TEST(Metrics, CsvRoundTripIsBitExact) {
  SimConfig cfg;
  const auto log = track_path(cosine_change(3.5, 100, 120, 500), cruising(30.0), cfg);
  std::stringstream ss;
  write_trajectory_csv(ss, log);
  const auto back = read_trajectory_csv(ss);
  ASSERT_EQ(back.samples.size(), log.samples.size());
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].y, log.samples[i].y);
    EXPECT_EQ(back.samples[i].curvature, log.samples[i].curvature);
    EXPECT_EQ(back.samples[i].steer_deg, log.samples[i].steer_deg);
  }
  const auto a = metrics(log, 3.5);
  const auto b = metrics(back, 3.5);
  EXPECT_EQ(a.path_length, b.path_length);
  EXPECT_EQ(a.lc_duration, b.lc_duration);
  EXPECT_EQ(a.max_curvature, b.max_curvature);
}

TEST(Metrics, CsvErrorsNameTheLine) {
  std::stringstream ss;
  ss << kTrajectoryHeader << "\n0,0,0,0,0,0,0,0\n0,1,x,0,0,0,0,0\n";
  try {
    read_trajectory_csv(ss, "log.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("log.csv:3"), std::string::npos) << e.what();
  }
}

// Properties.
TEST(SimProperty, ZeroSteerKeepsLateralStatesZero) {
  const BicycleParams p;
  SimState s = cruising(30.0);
  s.yaw = 0.1;
  for (int i = 0; i < 500; ++i) {
    s = step_dynamics(s, 0.0, p, 0.01);
    ASSERT_EQ(s.yaw_rate, 0.0);
    ASSERT_EQ(s.sideslip, 0.0);
  }
}

TEST(SimProperty, MirroredPathMirrorsTraces) {
  SimConfig cfg;
  const auto up = track_path(cosine_change(3.5, 100, 120, 500), cruising(30.0), cfg);
  const auto down = track_path(cosine_change(-3.5, 100, 120, 500), cruising(30.0), cfg);
  ASSERT_EQ(up.samples.size(), down.samples.size());
  for (std::size_t i = 0; i < up.samples.size(); ++i) {
    const auto& a = up.samples[i];
    const auto& b = down.samples[i];
    EXPECT_LE(std::abs(a.yaw_deg + b.yaw_deg), 1e-9);
    EXPECT_LE(std::abs(a.yawrate_degps + b.yawrate_degps), 1e-9);
    EXPECT_LE(std::abs(a.steer_deg + b.steer_deg), 1e-9);
    EXPECT_LE(std::abs(a.sideslip_deg + b.sideslip_deg), 1e-9);
  }
}

TEST(SimProperty, HalvingStepBarelyMovesMetrics) {
  SimConfig a;
  SimConfig b;
  b.dt = a.dt / 2;
  const auto ref = cosine_change(3.5, 100, 150, 600);
  const auto ma = metrics(track_path(ref, cruising(30.0), a), 3.5);
  const auto mb = metrics(track_path(ref, cruising(30.0), b), 3.5);
  const auto close = [](double x, double y) { return std::abs(x - y) <= 0.005 * std::abs(x) + 1e-9; };
  EXPECT_TRUE(close(ma.path_length, mb.path_length));
  EXPECT_TRUE(close(ma.lc_start_x, mb.lc_start_x));
  EXPECT_TRUE(close(ma.lc_duration, mb.lc_duration));
  EXPECT_TRUE(close(ma.max_yaw, mb.max_yaw));
  EXPECT_TRUE(close(ma.max_yaw_rate, mb.max_yaw_rate));
  EXPECT_TRUE(close(ma.max_front_tire_angle, mb.max_front_tire_angle));
  EXPECT_TRUE(close(ma.max_sideslip, mb.max_sideslip));
  EXPECT_TRUE(close(ma.max_curvature, mb.max_curvature));
}

TEST(SimProperty, PathLengthAtLeastChord) {
  SimConfig cfg;
  for (double len : {60.0, 120.0, 240.0}) {
    const auto log = track_path(cosine_change(3.5, 100, len, 600), cruising(30.0), cfg);
    EXPECT_GE(polyline_length(log),
              std::hypot(log.samples.back().x - log.samples.front().x,
                         log.samples.back().y - log.samples.front().y));
    const auto m = metrics(log, 3.5);
    EXPECT_GE(m.path_length, m.lc_end_x - m.lc_start_x);
  }
}
