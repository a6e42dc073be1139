#pragma once

// Time to collision for a leader/follower pair under constant accelerations.
//
// Two regimes are distinguished. In CaseOne the leader comes to a complete
// stop before the follower closes the gap down to the stopping margin; in
// CaseTwo contact happens while both vehicles are still moving. Speeds never
// go negative: a decelerating vehicle stays at rest once it stops.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>

namespace ttca {

struct LongitudinalPair {
  double v1 = 0.0;      // rear speed [m/s]
  double a1 = 0.0;      // rear acceleration [m/s^2], signed
  double v2 = 0.0;      // front speed [m/s]
  double a2 = 0.0;      // front acceleration [m/s^2], signed
  double d_rela = 0.0;  // c.g. to c.g. gap [m]
  double d_stop = 0.0;  // standstill margin [m]
};

enum class Regime { CaseOne, CaseTwo, NoApproach };

constexpr std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::CaseOne: return "case_one";
    case Regime::CaseTwo: return "case_two";
    case Regime::NoApproach: return "no_approach";
  }
  return "unknown";
}

struct TtcResult {
  double seconds = std::numeric_limits<double>::infinity();
  Regime regime = Regime::NoApproach;

  bool finite() const { return regime != Regime::NoApproach; }
};

enum class GateDecision { Proceed, BrakeFirst };

inline constexpr double kDefaultTtcThreshold = 2.7;  // [s]

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Time at which a vehicle with speed v and acceleration a comes to rest.
inline double stop_time(double v, double a) {
  if (a < 0.0) return v / -a;
  if (v <= 0.0 && a == 0.0) return 0.0;
  return kInf;
}

// Distance the leader covers before it stops. Only meaningful when it does.
inline double leader_stop_distance(double v2, double a2) {
  if (v2 <= 0.0) return 0.0;
  return v2 * v2 / (2.0 * std::abs(a2));
}

// Smallest t >= 0 with v t + a t^2 / 2 = d, for d > 0. Empty if never.
inline std::optional<double> first_arrival(double v, double a, double d) {
  if (d <= 0.0) return 0.0;
  if (a == 0.0) {
    if (v <= 0.0) return std::nullopt;
    return d / v;
  }
  const double disc = v * v + 2.0 * a * d;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  // (-v + root) / a is the earliest non-negative root for either sign of a;
  // the conjugate form avoids cancellation when a*d is small.
  double t = 0.0;
  if (v > 0.0) {
    t = 2.0 * d / (v + root);
  } else {
    t = (-v + root) / a;
  }
  if (!(t >= 0.0)) return std::nullopt;
  return t;
}

}  // namespace detail

// Case one: the leader is at rest when contact occurs. The follower has to
// cover the gap, minus the margin, plus the leader's stopping distance.
// Returns empty when the follower stops short of it.
inline std::optional<double> ttc_case1(const LongitudinalPair& p) {
  const double travel =
      p.d_rela - p.d_stop + detail::leader_stop_distance(p.v2, p.a2);
  if (p.a1 == 0.0) {
    if (p.v1 <= 0.0) return std::nullopt;
    return travel / p.v1;
  }
  const double disc = p.v1 * p.v1 + 2.0 * p.a1 * travel;
  if (disc < 0.0) return std::nullopt;
  if (p.a1 > 0.0) return (-p.v1 + std::sqrt(disc)) / std::abs(p.a1);
  // Decelerating follower: the earlier of the two roots, before it stops.
  return (p.v1 - std::sqrt(disc)) / std::abs(p.a1);
}

// Case two: both vehicles moving, closing at constant relative speed and
// acceleration. Returns empty when the gap never shrinks to the margin.
inline std::optional<double> ttc_case2(const LongitudinalPair& p) {
  const double v_rela = p.v1 - p.v2;
  const double a_rela = p.a1 - p.a2;
  if (v_rela == 0.0 && a_rela == 0.0) return std::nullopt;
  return detail::first_arrival(v_rela, a_rela, p.d_rela - p.d_stop);
}

namespace detail {

struct Classified {
  Regime regime = Regime::NoApproach;
  double seconds = kInf;
};

inline Classified classify(const LongitudinalPair& p) {
  const double closing_distance = p.d_rela - p.d_stop;
  const double t_front = stop_time(p.v2, p.a2);
  const double t_rear = stop_time(p.v1, p.a1);

  if (closing_distance <= 0.0) {
    return {t_front == 0.0 ? Regime::CaseOne : Regime::CaseTwo, 0.0};
  }

  // Phase with both vehicles moving.
  if (const auto t = ttc_case2(p); t && *t <= std::min(t_front, t_rear)) {
    return {Regime::CaseTwo, *t};
  }
  // Follower at rest first: the gap can only grow from then on.
  if (t_rear <= t_front) return {};

  // Leader at rest; the follower keeps going until contact or its own stop.
  if (const auto t = ttc_case1(p)) return {Regime::CaseOne, *t};
  return {};
}

}  // namespace detail

inline Regime classify_regime(const LongitudinalPair& p) {
  return detail::classify(p).regime;
}

inline TtcResult compute_ttc(const LongitudinalPair& p) {
  const auto c = detail::classify(p);
  return {c.seconds, c.regime};
}

// BrakeFirst iff the TTC is finite and strictly below the threshold.
inline GateDecision gate_lane_change(const TtcResult& ttc,
                                     double threshold = kDefaultTtcThreshold) {
  if (ttc.finite() && ttc.seconds < threshold) return GateDecision::BrakeFirst;
  return GateDecision::Proceed;
}

}  // namespace ttca
