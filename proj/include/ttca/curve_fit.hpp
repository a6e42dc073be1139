#pragma once

// Weighted least-squares cubic fit y(x) = a0 + a1 x + a2 x^2 + a3 x^3, with
// optional lateral corridor bounds sampled along a longitudinal window.
//
// Internally the abscissae are centered and scaled to [-1, 1] before the
// normal matrix is formed; coefficients are mapped back afterwards. Road
// coordinates of a few hundred meters would otherwise push the condition
// number of the cubic normal matrix past 1e15.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "ttca/error.hpp"
#include "ttca/qp.hpp"
#include "ttca/types.hpp"

namespace ttca {

struct CubicCoeffs {
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;

  friend bool operator==(const CubicCoeffs&, const CubicCoeffs&) = default;
};

inline double eval_cubic(const CubicCoeffs& c, double x) {
  return c.a0 + x * (c.a1 + x * (c.a2 + x * c.a3));
}

inline double cubic_slope(const CubicCoeffs& c, double x) {
  return c.a1 + x * (2.0 * c.a2 + 3.0 * x * c.a3);
}

inline double cubic_second(const CubicCoeffs& c, double x) {
  return 2.0 * c.a2 + 6.0 * c.a3 * x;
}

// Heading of the curve in radians.
inline double heading(const CubicCoeffs& c, double x) {
  return std::atan(cubic_slope(c, x));
}

// Signed curvature [1/m].
inline double curvature(const CubicCoeffs& c, double x) {
  const double d1 = cubic_slope(c, x);
  return cubic_second(c, x) / std::pow(1.0 + d1 * d1, 1.5);
}

struct ConstraintWindow {
  double x_start = 0.0;
  double x_end = 0.0;
  double y_upper = 0.0;
  double y_lower = 0.0;
  double sample_spacing = 0.5;
};

// n . a >= b on the coefficient vector a = (a0, a1, a2, a3).
struct LinearInequality {
  std::array<double, 4> n{};
  double b = 0.0;
};

struct KktResiduals {
  double stationarity = 0.0;
  double stationarity_scale = 1.0;  // 1 + magnitude of the objective gradient
  double primal = 0.0;              // largest constraint violation
  // Largest |multiplier * slack|, relative to the gradient scale times the
  // row magnitude.
  double complementarity = 0.0;
  double min_multiplier = 0.0;
};

enum class FitStatus { Optimal, Stalled };

struct FitReport {
  CubicCoeffs coeffs;
  double residual = 0.0;  // weighted sum of squared errors
  std::size_t active_constraints = 0;
  double kkt_residual = 0.0;  // max of the scaled KKT residuals
  KktResiduals kkt;
  std::vector<double> multipliers;  // one per inequality
  FitStatus status = FitStatus::Optimal;
  int iterations = 0;
};

struct FitOptions {
  int max_iterations = 500;
};

// Window start goes from the obstacle back by the distance closed during
// the TTC plus the lane-change time; the end lies one longitudinal spread
// beyond the obstacle. Speed is the ego's closing speed on the obstacle.
inline ConstraintWindow compute_window(const EgoState& ego,
                                       const ObstacleState& obs, double ttc,
                                       double t_lc, double sigma_x,
                                       double y_lower, double y_upper,
                                       double sample_spacing = 0.5) {
  if (!(t_lc > 0.0)) throw ValidationError("lane-change time must be positive");
  const double v = ego.speed - obs.speed;
  ConstraintWindow w;
  w.x_start = obs.x - v * (ttc + t_lc);
  w.x_end = obs.x + sigma_x;
  w.y_lower = y_lower;
  w.y_upper = y_upper;
  w.sample_spacing = sample_spacing;
  if (!(w.x_start < w.x_end)) {
    throw EmptyWindow("constraint window is empty: start " +
                      std::to_string(w.x_start) + " m, end " +
                      std::to_string(w.x_end) + " m");
  }
  return w;
}

// Clip the window to the longitudinal range covered by data.
inline ConstraintWindow clip_window(ConstraintWindow w, double x_first,
                                    double x_last) {
  w.x_start = std::max(w.x_start, x_first);
  w.x_end = std::min(w.x_end, x_last);
  if (w.x_start > w.x_end) {
    throw EmptyWindow("constraint window lies outside the waypoint range");
  }
  return w;
}

inline std::vector<LinearInequality> build_constraints(
    const ConstraintWindow& w) {
  if (!(w.sample_spacing > 0.0)) {
    throw ValidationError("constraint sample spacing must be positive");
  }
  if (w.x_start > w.x_end) throw EmptyWindow("constraint window is reversed");

  std::vector<double> xs;
  const double span = w.x_end - w.x_start;
  const auto n_steps = static_cast<long>(std::floor(span / w.sample_spacing));
  for (long k = 0; k <= n_steps; ++k) {
    xs.push_back(w.x_start + static_cast<double>(k) * w.sample_spacing);
  }
  // The endpoint is always sampled; drop a grid point that nearly duplicates it.
  if (xs.back() < w.x_end) {
    if (w.x_end - xs.back() < 1e-9 * std::max(1.0, std::abs(w.x_end))) {
      xs.back() = w.x_end;
    } else {
      xs.push_back(w.x_end);
    }
  }

  std::vector<LinearInequality> out;
  out.reserve(2 * xs.size());
  for (double x : xs) {
    const std::array<double, 4> row{1.0, x, x * x, x * x * x};
    out.push_back({{-row[0], -row[1], -row[2], -row[3]}, -w.y_upper});
    out.push_back({row, w.y_lower});
  }
  return out;
}

namespace detail {

// Affine change of variable t = (x - shift) / scale.
struct AbscissaScaling {
  double shift = 0.0;
  double scale = 1.0;

  static AbscissaScaling from_points(const WaypointSet& wps) {
    double lo = wps.points.front().x;
    double hi = lo;
    for (const auto& p : wps.points) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
    AbscissaScaling s;
    s.shift = 0.5 * (lo + hi);
    s.scale = std::max(0.5 * (hi - lo), std::numeric_limits<double>::min());
    return s;
  }

  // Matrix T with a = T b, where b are the coefficients in t.
  Eigen::Matrix4d to_original() const {
    // y = sum_k b_k ((x - shift)/scale)^k, expanded in powers of x.
    Eigen::Matrix4d T = Eigen::Matrix4d::Zero();
    const double binom[4][4] = {
        {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
    for (int k = 0; k < 4; ++k) {
      const double inv = std::pow(scale, -k);
      for (int j = 0; j <= k; ++j) {
        T(j, k) = binom[k][j] * std::pow(-shift, k - j) * inv;
      }
    }
    return T;
  }
};

struct NormalSystem {
  Eigen::Matrix4d H;  // X'WX in scaled abscissae
  Eigen::Vector4d g;  // X'Wy
  double yy = 0.0;    // y'Wy
  double weight_sum = 0.0;
};

inline Eigen::Vector4d powers(double t) {
  return {1.0, t, t * t, t * t * t};
}

inline NormalSystem normal_system(const WaypointSet& wps,
                                  const AbscissaScaling& s) {
  NormalSystem ns;
  ns.H.setZero();
  ns.g.setZero();
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const double w = wps.weight(i);
    const Eigen::Vector4d phi = powers((wps.points[i].x - s.shift) / s.scale);
    ns.H.noalias() += w * phi * phi.transpose();
    ns.g += w * wps.points[i].y * phi;
    ns.yy += w * wps.points[i].y * wps.points[i].y;
    ns.weight_sum += w;
  }
  return ns;
}

// Fitting only needs finite points, positive weights and four distinct
// abscissae; ordering is irrelevant to the normal equations.
inline void require_fit_input(const WaypointSet& wps) {
  if (!wps.weights.empty() && wps.weights.size() != wps.size()) {
    throw ValidationError("waypoints: one weight per point is required");
  }
  std::vector<double> xs;
  xs.reserve(wps.size());
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (!std::isfinite(wps.points[i].x) || !std::isfinite(wps.points[i].y)) {
      throw ValidationError("waypoints: coordinates must be finite");
    }
    if (!(wps.weight(i) > 0.0) || !std::isfinite(wps.weight(i))) {
      throw ValidationError("waypoints: weights must be positive");
    }
    xs.push_back(wps.points[i].x);
  }
  std::sort(xs.begin(), xs.end());
  const auto distinct = std::unique(xs.begin(), xs.end()) - xs.begin();
  if (distinct < 4) {
    throw DegenerateFit("a cubic fit needs four distinct abscissae, got " +
                        std::to_string(distinct));
  }
}

inline CubicCoeffs to_coeffs(const Eigen::Vector4d& a) {
  return {a(0), a(1), a(2), a(3)};
}

inline double weighted_sse(const WaypointSet& wps, const CubicCoeffs& c) {
  double r = 0.0;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const double e = eval_cubic(c, wps.points[i].x) - wps.points[i].y;
    r += wps.weight(i) * e * e;
  }
  return r;
}

inline void check_conditioning(const Eigen::Matrix4d& H) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(H);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(3);
  if (!(lo > hi * 1e-13)) {
    throw DegenerateFit("weighted normal matrix is singular");
  }
}

}  // namespace detail

inline FitReport fit_unconstrained(const WaypointSet& wps) {
  detail::require_fit_input(wps);
  const auto s = detail::AbscissaScaling::from_points(wps);
  const auto ns = detail::normal_system(wps, s);
  detail::check_conditioning(ns.H);

  const Eigen::Vector4d b = ns.H.llt().solve(ns.g);
  FitReport rep;
  rep.coeffs = detail::to_coeffs(s.to_original() * b);
  rep.residual = detail::weighted_sse(wps, rep.coeffs);
  const Eigen::Vector4d grad = ns.H * b - ns.g;
  rep.kkt.stationarity = grad.lpNorm<Eigen::Infinity>();
  rep.kkt.stationarity_scale = 1.0 + ns.g.lpNorm<Eigen::Infinity>();
  rep.kkt_residual = rep.kkt.stationarity / rep.kkt.stationarity_scale;
  return rep;
}

inline FitReport fit_constrained(const WaypointSet& wps,
                                 const std::vector<LinearInequality>& cons,
                                 FitOptions opts = {}) {
  detail::require_fit_input(wps);
  const auto s = detail::AbscissaScaling::from_points(wps);
  const auto ns = detail::normal_system(wps, s);
  detail::check_conditioning(ns.H);
  const Eigen::Matrix4d T = s.to_original();

  // In scaled variables b with a = T b, the row n'a >= c becomes (T'n)'b >= c.
  const auto m = static_cast<Eigen::Index>(cons.size());
  Eigen::Matrix<double, 4, Eigen::Dynamic> N(4, m);
  Eigen::VectorXd bounds(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& ci = cons[static_cast<std::size_t>(i)];
    const Eigen::Vector4d n(ci.n[0], ci.n[1], ci.n[2], ci.n[3]);
    N.col(i) = T.transpose() * n;
    bounds(i) = ci.b;
  }

  QpOptions qo;
  qo.max_iterations = opts.max_iterations;
  const DenseQp<4> qp(ns.H, -ns.g, N, bounds, qo);
  const auto res = qp.solve();
  if (res.status == QpStatus::Infeasible) {
    throw Infeasible("no cubic satisfies the corridor constraints");
  }

  FitReport rep;
  rep.status =
      res.status == QpStatus::Optimal ? FitStatus::Optimal : FitStatus::Stalled;
  rep.iterations = res.iterations;
  rep.coeffs = detail::to_coeffs(T * res.x);
  rep.residual = detail::weighted_sse(wps, rep.coeffs);
  rep.active_constraints = res.active.size();
  rep.multipliers.assign(res.multipliers.data(),
                         res.multipliers.data() + res.multipliers.size());

  // KKT certificate, evaluated on the scaled problem the solver worked on.
  Eigen::Vector4d grad = ns.H * res.x - ns.g;
  if (m > 0) grad -= N * res.multipliers;
  rep.kkt.stationarity = grad.lpNorm<Eigen::Infinity>();
  rep.kkt.stationarity_scale = 1.0 + ns.g.lpNorm<Eigen::Infinity>() +
                               (ns.H * res.x).lpNorm<Eigen::Infinity>();
  rep.kkt.min_multiplier = m > 0 ? res.multipliers.minCoeff() : 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& ci = cons[static_cast<std::size_t>(i)];
    const double lhs = ci.n[0] * rep.coeffs.a0 + ci.n[1] * rep.coeffs.a1 +
                       ci.n[2] * rep.coeffs.a2 + ci.n[3] * rep.coeffs.a3;
    const double slack = N.col(i).dot(res.x) - bounds(i);
    rep.kkt.primal = std::max(rep.kkt.primal, std::max(0.0, ci.b - lhs));
    const double row = 1.0 + std::abs(bounds(i)) +
                       N.col(i).lpNorm<Eigen::Infinity>() *
                           res.x.lpNorm<Eigen::Infinity>();
    rep.kkt.complementarity =
        std::max(rep.kkt.complementarity,
                 std::abs(res.multipliers(i) * slack) /
                     (rep.kkt.stationarity_scale * row));
  }
  rep.kkt_residual =
      std::max({rep.kkt.stationarity / rep.kkt.stationarity_scale,
                rep.kkt.primal, rep.kkt.complementarity});
  return rep;
}

// Largest violation of the corridor on a grid ten times finer than the
// constraint samples. Zero or negative means the bounds hold everywhere
// checked.
inline double corridor_violation(const CubicCoeffs& c,
                                 const ConstraintWindow& w) {
  const double h = w.sample_spacing / 10.0;
  double worst = -std::numeric_limits<double>::infinity();
  const auto n = static_cast<long>(std::ceil((w.x_end - w.x_start) / h));
  for (long k = 0; k <= n; ++k) {
    const double x = std::min(w.x_start + static_cast<double>(k) * h, w.x_end);
    const double y = eval_cubic(c, x);
    worst = std::max({worst, y - w.y_upper, w.y_lower - y});
  }
  return worst;
}

}  // namespace ttca
