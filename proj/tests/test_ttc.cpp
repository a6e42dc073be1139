#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ttca/ttc.hpp"

using namespace ttca;

namespace {

constexpr double kHorizon = 120.0;

// Collapses "contact after the horizon" into no contact so both sides can be
// compared on what the stepper can see.
bool contact_within(const TtcResult& r) { return r.finite() && r.seconds <= kHorizon; }

}  // namespace

// Oracles first: 1 ms time stepping against the closed forms.
TEST(TtcOracle, MatchesTimeSteppingOnRandomPairs) {
  std::mt19937_64 rng(7);
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto p = oracle::random_pair(rng);
    const auto got = compute_ttc(p);
    const auto ref = oracle::simulate_ttc(p, kHorizon);
    ASSERT_EQ(contact_within(got), ref.seconds.has_value()) << "sample " << i;
    if (!ref.seconds) continue;
    ++compared;
    EXPECT_NEAR(got.seconds, *ref.seconds, 0.01) << "sample " << i;
    EXPECT_EQ(got.regime == Regime::CaseOne, ref.leader_stopped) << "sample " << i;
  }
  EXPECT_GT(compared, 500);
}

TEST(TtcOracle, ConstantSpeeds) {
  // 20 m to close at 5 m/s.
  const auto r = compute_ttc({30.0, 0.0, 25.0, 0.0, 25.0, 5.0});
  EXPECT_EQ(r.regime, Regime::CaseTwo);
  EXPECT_DOUBLE_EQ(r.seconds, 4.0);
}

TEST(Ttc, ScenarioPairIsCaseTwoAtTwentyThreeSeconds) {
  // Ego 30 m/s, obstacle 25 m/s, 120 m apart, 5 m margin.
  const auto r = compute_ttc({30.0, 0.0, 25.0, 0.0, 120.0, 5.0});
  EXPECT_EQ(r.regime, Regime::CaseTwo);
  EXPECT_NEAR(r.seconds, 23.0, 1e-12);
  EXPECT_EQ(gate_lane_change(r), GateDecision::Proceed);
}

TEST(Ttc, SlowerFollowerNeverCloses) {
  const auto r = compute_ttc({20.0, 0.0, 25.0, 0.0, 50.0, 5.0});
  EXPECT_EQ(r.regime, Regime::NoApproach);
  EXPECT_TRUE(std::isinf(r.seconds));
  EXPECT_EQ(gate_lane_change(r), GateDecision::Proceed);
}

TEST(Ttc, BrakingLeaderStopsBeforeContact) {
  // Leader stops after 2 s having covered 20 m; follower covers 20 + 45 m.
  const auto r = compute_ttc({20.0, 0.0, 20.0, -10.0, 50.0, 5.0});
  EXPECT_EQ(r.regime, Regime::CaseOne);
  EXPECT_NEAR(r.seconds, 65.0 / 20.0, 1e-12);
}

TEST(Ttc, FollowerStopsShort) {
  // Follower needs 20 m to stop, gap minus margin is 40 m and the leader is parked.
  const auto r = compute_ttc({20.0, -10.0, 0.0, 0.0, 45.0, 5.0});
  EXPECT_EQ(r.regime, Regime::NoApproach);
}

TEST(Ttc, AlreadyInsideMarginIsZero) {
  const auto r = compute_ttc({10.0, 0.0, 10.0, 0.0, 3.0, 5.0});
  EXPECT_EQ(r.seconds, 0.0);
  EXPECT_EQ(gate_lane_change(r), GateDecision::BrakeFirst);
}

TEST(TtcGate, ThresholdIsStrict) {
  EXPECT_EQ(gate_lane_change({2.7, Regime::CaseTwo}), GateDecision::Proceed);
  EXPECT_EQ(gate_lane_change({std::nextafter(2.7, 0.0), Regime::CaseTwo}),
            GateDecision::BrakeFirst);
  EXPECT_EQ(gate_lane_change({1.0, Regime::CaseTwo}, 0.5), GateDecision::Proceed);
}

TEST(TtcRegime, Names) {
  EXPECT_EQ(to_string(Regime::CaseOne), "case_one");
  EXPECT_EQ(to_string(Regime::CaseTwo), "case_two");
  EXPECT_EQ(to_string(Regime::NoApproach), "no_approach");
}

// Properties.
TEST(TtcProperty, NonIncreasingInGap) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 3000; ++i) {
    auto p = oracle::random_pair(rng);
    const auto near = compute_ttc(p);
    p.d_rela += 1.0;
    const auto far = compute_ttc(p);
    if (near.finite() && far.finite()) {
      EXPECT_LE(near.seconds, far.seconds + 1e-9);
    }
    // A longer gap never creates a contact that did not exist.
    if (!near.finite()) {
      EXPECT_FALSE(far.finite());
    }
  }
}

TEST(TtcProperty, FasterFollowerArrivesNoLater) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 3000; ++i) {
    auto p = oracle::random_pair(rng);
    const auto base = compute_ttc(p);
    p.v1 += 1.0;
    const auto fast = compute_ttc(p);
    if (base.finite()) {
      ASSERT_TRUE(fast.finite());
      EXPECT_LE(fast.seconds, base.seconds + 1e-9);
    }
  }
}

TEST(TtcProperty, ResultIsNonNegativeOrInfinite) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 5000; ++i) {
    const auto r = compute_ttc(oracle::random_pair(rng));
    if (r.finite()) {
      EXPECT_GE(r.seconds, 0.0);
      EXPECT_TRUE(std::isfinite(r.seconds));
    } else {
      EXPECT_TRUE(std::isinf(r.seconds));
    }
  }
}
