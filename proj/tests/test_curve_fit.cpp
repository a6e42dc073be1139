#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ttca/curve_fit.hpp"
#include "ttca/error.hpp"

using namespace ttca;

namespace {

WaypointSet from_fn(const std::vector<double>& xs, double (*f)(double)) {
  WaypointSet w;
  for (double x : xs) w.points.push_back({x, f(x)});
  return w;
}

Eigen::Vector4d vec(const CubicCoeffs& c) { return {c.a0, c.a1, c.a2, c.a3}; }

// Normal equations in raw x, solved by full-pivot LU.
Eigen::Vector4d normal_equations(const WaypointSet& w) {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d r = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = w.points[i].x;
    const Eigen::Vector4d phi(1, x, x * x, x * x * x);
    A += w.weight(i) * phi * phi.transpose();
    r += w.weight(i) * w.points[i].y * phi;
  }
  return A.fullPivLu().solve(r);
}

}  // namespace

// Oracles first.
TEST(FitOracle, UnconstrainedMatchesFullPivotNormalEquations) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    WaypointSet w;
    for (int i = 0; i < 50; ++i) {
      w.points.push_back({-3.0 + 6.0 * u(rng), 4.0 * u(rng) - 2.0});
      w.weights.push_back(0.1 + 2.0 * u(rng));
    }
    const auto got = vec(fit_unconstrained(w).coeffs);
    const auto ref = normal_equations(w);
    EXPECT_LE((got - ref).lpNorm<Eigen::Infinity>(), 1e-9) << "trial " << trial;
  }
}

TEST(FitOracle, ConstrainedMatchesActiveSetEnumeration) {
  std::mt19937_64 rng(32);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_fit_instance(rng);
    const auto ref = oracle::enumerate_fit(inst.data, inst.cons);
    if (!ref.feasible) {
      EXPECT_THROW(fit_constrained(inst.data, inst.cons), Infeasible) << "trial " << trial;
      continue;
    }
    ++feasible;
    const auto rep = fit_constrained(inst.data, inst.cons);
    ASSERT_EQ(rep.status, FitStatus::Optimal);
    EXPECT_LE((vec(rep.coeffs) - ref.a).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
    EXPECT_LE(rep.kkt_residual, 1e-8) << "trial " << trial;
    EXPECT_GE(rep.kkt.min_multiplier, 0.0);
  }
  EXPECT_GT(feasible, 150);
}

TEST(FitOracle, SingleActiveBoundMatchesBorderedSystem) {
  // Data on y = x^2 around 0, upper bound y(0) <= -1 forces the fit down.
  WaypointSet w;
  for (int i = -5; i <= 5; ++i) w.points.push_back({0.5 * i, 0.25 * i * i});
  const std::vector<LinearInequality> cons{{{-1.0, 0.0, 0.0, 0.0}, 1.0}};
  const auto rep = fit_constrained(w, cons);

  Eigen::Matrix<double, 5, 5> K = Eigen::Matrix<double, 5, 5>::Zero();
  Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
  for (const auto& p : w.points) {
    const Eigen::Vector4d phi(1, p.x, p.x * p.x, p.x * p.x * p.x);
    K.topLeftCorner<4, 4>() += phi * phi.transpose();
    rhs.head<4>() += p.y * phi;
  }
  K(0, 4) = K(4, 0) = 1.0;  // a0 = -1
  rhs(4) = -1.0;
  const Eigen::Matrix<double, 5, 1> s = K.fullPivLu().solve(rhs);
  EXPECT_LE((vec(rep.coeffs) - s.head<4>()).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_EQ(rep.active_constraints, 1u);
}

TEST(FitOracle, CurvatureMatchesFiniteDifferences) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const CubicCoeffs c{u(rng), u(rng), 0.3 * u(rng), 0.1 * u(rng)};
    const double x = 2.0 * u(rng);
    const double h = 1e-3;
    const double y0 = eval_cubic(c, x - h), y1 = eval_cubic(c, x), y2 = eval_cubic(c, x + h);
    const double d1 = (y2 - y0) / (2 * h);
    const double d2 = (y2 - 2 * y1 + y0) / (h * h);
    const double ref = d2 / std::pow(1 + d1 * d1, 1.5);
    const double got = curvature(c, x);
    EXPECT_LE(std::abs(got - ref), 1e-4 * std::max(std::abs(ref), 1e-3)) << "trial " << trial;
  }
}

// Examples.
TEST(Fit, RecoversExactCubic) {
  const auto rep = fit_unconstrained(from_fn({0, 1, 2, 3}, [](double x) { return x * x * x; }));
  EXPECT_NEAR(rep.coeffs.a0, 0.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a1, 0.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a2, 0.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a3, 1.0, 1e-12);
  EXPECT_NEAR(rep.residual, 0.0, 1e-20);
}

TEST(Fit, RecoversLine) {
  const auto rep = fit_unconstrained(from_fn({0, 1, 2, 3, 4}, [](double x) { return 2 * x + 1; }));
  EXPECT_NEAR(rep.coeffs.a0, 1.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a1, 2.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a2, 0.0, 1e-12);
  EXPECT_NEAR(rep.coeffs.a3, 0.0, 1e-12);
}

TEST(Fit, FewerThanFourAbscissaeIsDegenerate) {
  EXPECT_THROW(fit_unconstrained(from_fn({0, 1, 1, 2}, [](double x) { return x; })), DegenerateFit);
  EXPECT_THROW(fit_constrained(from_fn({0, 1, 2}, [](double x) { return x; }), {}), DegenerateFit);
}

TEST(Fit, BadWeightsRejected) {
  auto w = from_fn({0, 1, 2, 3}, [](double x) { return x; });
  w.weights = {1, 1, 0, 1};
  EXPECT_THROW(fit_unconstrained(w), ValidationError);
}

TEST(Fit, InvertedCorridorIsInfeasible) {
  const auto w = from_fn({0, 1, 2, 3, 4}, [](double x) { return x; });
  ConstraintWindow win{1.0, 3.0, 0.0, 1.0, 0.5};  // upper below lower
  EXPECT_THROW(fit_constrained(w, build_constraints(win)), Infeasible);
}

TEST(Fit, HeadingAndCurvature) {
  const CubicCoeffs line{0, 0.1, 0, 0};
  EXPECT_DOUBLE_EQ(heading(line, 7.0), std::atan(0.1));
  EXPECT_EQ(curvature(line, 7.0), 0.0);
  EXPECT_DOUBLE_EQ(curvature({0, 0, 1, 0}, 0.0), 2.0);
}

TEST(Window, DirectSubstitution) {
  EgoState ego;
  ego.speed = 30.0;
  ObstacleState obs;
  obs.x = 120.0;
  obs.speed = 0.0;
  auto w = compute_window(ego, obs, 2.7, 3.5, 40.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(w.x_start, 120.0 - 30.0 * 6.2);
  obs.x = 300.0;
  w = compute_window(ego, obs, 2.7, 1.0, 40.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(w.x_start, 189.0);
  EXPECT_DOUBLE_EQ(w.x_end, 340.0);
}

TEST(Window, EmptyWhenStartPassesEnd) {
  EgoState ego;
  ego.speed = 30.0;
  ObstacleState obs;
  obs.x = 0.0;
  EXPECT_THROW(compute_window(ego, obs, 2.7, 3.5, -500.0, 0.0, 1.0), EmptyWindow);
}

TEST(Constraints, Counting) {
  ConstraintWindow w{0.0, 10.0, 1.0, 0.0, 0.5};
  EXPECT_EQ(build_constraints(w).size(), 42u);
  w.x_end = 0.0;
  EXPECT_EQ(build_constraints(w).size(), 2u);
}

// Properties.
TEST(FitProperty, FittedCubicRespectsEveryRow) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_fit_instance(rng);
    FitReport rep;
    try {
      rep = fit_constrained(inst.data, inst.cons);
    } catch (const Infeasible&) {
      continue;
    }
    for (const auto& c : inst.cons) {
      const double lhs = c.n[0] * rep.coeffs.a0 + c.n[1] * rep.coeffs.a1 +
                         c.n[2] * rep.coeffs.a2 + c.n[3] * rep.coeffs.a3;
      EXPECT_GE(lhs - c.b, -1e-9 * (1 + std::abs(c.b)));
    }
  }
}

TEST(FitProperty, InactiveConstraintsReproduceUnconstrained) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    WaypointSet w;
    for (int i = 0; i < 20; ++i) w.points.push_back({i * 1.0, std::sin(0.3 * i) + 0.1 * u(rng)});
    ConstraintWindow win{2.0, 15.0, 10.0, -10.0, 0.5};
    const auto a = fit_unconstrained(w);
    const auto b = fit_constrained(w, build_constraints(win));
    EXPECT_LE((vec(a.coeffs) - vec(b.coeffs)).lpNorm<Eigen::Infinity>(), 1e-10);
    EXPECT_EQ(b.active_constraints, 0u);
  }
}

TEST(FitProperty, ConstraintsNeverReduceResidual) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_fit_instance(rng);
    FitReport c;
    try {
      c = fit_constrained(inst.data, inst.cons);
    } catch (const Infeasible&) {
      continue;
    }
    const auto u = fit_unconstrained(inst.data);
    // Equal minimizers reached by two solve paths differ in the last bits,
    // and the residual sums cubic terms up to 1e3 times larger than y.
    EXPECT_GE(c.residual, u.residual * (1 - 1e-9) - 1e-12) << "trial " << trial;
  }
}

TEST(FitProperty, UniformWeightScalingLeavesCoefficients) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = oracle::random_fit_instance(rng);
    FitReport a;
    try {
      a = fit_constrained(inst.data, inst.cons);
    } catch (const Infeasible&) {
      continue;
    }
    if (inst.data.weights.empty()) inst.data.weights.assign(inst.data.size(), 1.0);
    for (double& w : inst.data.weights) w *= 7.5;
    const auto b = fit_constrained(inst.data, inst.cons);
    EXPECT_LE((vec(a.coeffs) - vec(b.coeffs)).lpNorm<Eigen::Infinity>(),
              1e-8 * (1 + vec(a.coeffs).lpNorm<Eigen::Infinity>()));
  }
}

TEST(FitProperty, PointOrderIsIrrelevant) {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = oracle::random_fit_instance(rng);
    FitReport a;
    try {
      a = fit_constrained(inst.data, inst.cons);
    } catch (const Infeasible&) {
      continue;
    }
    std::vector<std::size_t> idx(inst.data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    WaypointSet s;
    for (auto i : idx) {
      s.points.push_back(inst.data.points[i]);
      if (!inst.data.weights.empty()) s.weights.push_back(inst.data.weights[i]);
    }
    const auto b = fit_constrained(s, inst.cons);
    EXPECT_LE((vec(a.coeffs) - vec(b.coeffs)).lpNorm<Eigen::Infinity>(),
              1e-8 * (1 + vec(a.coeffs).lpNorm<Eigen::Infinity>()));
  }
}
