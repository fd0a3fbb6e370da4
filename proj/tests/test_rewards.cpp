#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "morl/rewards/rewards.hpp"

using namespace morl;
using namespace morl::rewards;
using env::Twist;
using env::VelocityCommand;
using env::Wrench;

namespace {

Twist random_twist(Rng& rng, double span) {
  return {uniform(rng, -span, span), uniform(rng, -span, span), uniform(rng, -span, span)};
}

}  // namespace

TEST(EquivalentVelocity, Examples) {
  const ComplianceModel m;
  EXPECT_EQ(equivalent_velocity(m, {}), (Twist{0.0, 0.0, 0.0}));
  const Twist v = equivalent_velocity(m, {25.0, 0.0, 0.0});
  EXPECT_NEAR(v.vx, 1.0, 1e-15);
  EXPECT_EQ(v.vy, 0.0);
  EXPECT_NEAR(equivalent_velocity(m, {0.0, 0.0, 5.0}).omega, 1.0, 1e-15);
}

TEST(TrackingReward, Examples) {
  EXPECT_EQ(tracking_reward({0.3, -0.2, 0.9}, {0.3, -0.2, 0.9}, 0.25), 1.0);
  EXPECT_NEAR(tracking_reward({1.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, 0.25), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(tracking_reward({1.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, 0.25), 0.3679, 1e-4);
}

TEST(TrackingReward, AngularScaleWeightsYaw) {
  EXPECT_NEAR(tracking_reward({0.0, 0.0, 1.0}, {}, 0.25, 0.5), std::exp(-2.0), 1e-15);
  EXPECT_EQ(tracking_reward({0.0, 0.0, 1.0}, {}, 0.25, 0.0), 1.0);
}

TEST(ComplianceReward, Examples) {
  const ComplianceModel m;
  EXPECT_EQ(compliance_reward({1.0, -0.4, 0.6}, {25.0, -10.0, 3.0}, m), 1.0);
  EXPECT_EQ(compliance_reward({}, {}, m), 1.0);
  EXPECT_NEAR(compliance_reward({}, {25.0, 0.0, 0.0}, m), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(compliance_reward({}, {25.0, 0.0, 0.0}, m), 0.0183, 1e-4);
}

TEST(RegularizationReward, Examples) {
  const RegularizationCoefs c;
  const std::array<double, 3> zero{};
  EXPECT_EQ(regularization_reward(zero, zero, 0.0, c), 0.0);
  EXPECT_NEAR(regularization_reward(std::array<double, 3>{1.0, 1.0, 0.0}, std::array<double, 3>{1.0, 1.0, 0.0},
                                    0.0, RegularizationCoefs{0.01, 0.0, 0.0}),
              -0.02, 1e-15);
  const RegularizationCoefs effort_only{0.01, 0.0, 0.0};
  const std::array<double, 3> a{0.3, -0.2, 0.5};
  const std::array<double, 3> a2{0.6, -0.4, 1.0};
  EXPECT_NEAR(regularization_reward(a2, zero, 0.0, effort_only), 4.0 * regularization_reward(a, zero, 0.0, effort_only),
              1e-15);
  EXPECT_NEAR(regularization_reward(zero, zero, 2.0, RegularizationCoefs{0.0, 0.0, 0.5}), -2.0, 1e-15);
  EXPECT_NEAR(regularization_reward(zero, a, 0.0, RegularizationCoefs{0.0, 1.0, 0.0}), -(0.09 + 0.04 + 0.25), 1e-15);
}

TEST(Scalarize, Examples) {
  EXPECT_EQ(scalarize({1.0, 0.37, 0.0}, {2.0, 0.0, 1.0}), 2.0);
  EXPECT_NEAR(scalarize({0.5, 0.5, -0.1}, {1.0, 1.0, 1.0}), 0.9, 1e-15);
}

TEST(Scalarize, RegularizationWeightKeepsTrackingOrder) {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const double rr = uniform(rng, -1.0, 0.0);
    const double rf = uniform(rng, 0.0, 1.0);
    const double lo = uniform(rng, 0.0, 1.0);
    const double hi = lo + uniform(rng, 1e-6, 1.0 - lo + 1e-6);
    const auto w = PreferenceVector::from_tracking_weight(uniform(rng, 0.01, 2.0), uniform(rng, 1.0, 2.0));
    ASSERT_LT(scalarize({lo, rf, rr}, w), scalarize({hi, rf, rr}, w));
  }
}

// 10^5 random inputs per property.
TEST(RewardProperties, BoundedAndOneOnlyAtTarget) {
  Rng rng(1);
  ComplianceModel m;
  for (int k = 0; k < 100000; ++k) {
    const Twist v = random_twist(rng, k % 2 ? 3.0 : 50.0);
    const Twist c = random_twist(rng, 1.0);
    const Wrench w{uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -7, 7)};
    const double rc = tracking_reward(v, {c.vx, c.vy, c.omega}, m.sigma);
    const double rf = compliance_reward(v, w, m);
    ASSERT_GT(rc, 0.0);
    ASSERT_LE(rc, 1.0);
    ASSERT_GT(rf, 0.0);
    ASSERT_LE(rf, 1.0);
    if (v != c) { ASSERT_LT(rc, 1.0) << k; }
    ASSERT_EQ(tracking_reward(c, {c.vx, c.vy, c.omega}, m.sigma), 1.0);
    ASSERT_EQ(compliance_reward(equivalent_velocity(m, w), w, m), 1.0);
  }
}

TEST(RewardProperties, MonotoneInErrorNorm) {
  Rng rng(2);
  for (int k = 0; k < 100000; ++k) {
    const Twist dir = random_twist(rng, 1.0);
    const double a = uniform(rng, 0.0, 2.0);
    const double b = a + uniform(rng, 1e-3, 1.0);
    const double ra = tracking_reward({a * dir.vx, a * dir.vy, a * dir.omega}, {}, 0.25);
    const double rb = tracking_reward({b * dir.vx, b * dir.vy, b * dir.omega}, {}, 0.25);
    ASSERT_GE(ra, rb);
  }
  EXPECT_GT(tracking_reward({1e3, 0.0, 0.0}, {}, 0.25), 0.0);
}

TEST(RewardProperties, ScalarizeIsLinearInBothArguments) {
  Rng rng(3);
  for (int k = 0; k < 100000; ++k) {
    const RewardVector r1{uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, -1, 0)};
    const RewardVector r2{uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, -1, 0)};
    const PreferenceVector w1{uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 1, 2)};
    const PreferenceVector w2{uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 1, 2)};
    const double a = uniform(rng, -3, 3);
    const double b = uniform(rng, -3, 3);
    const RewardVector rmix{a * r1.r_c + b * r2.r_c, a * r1.r_f + b * r2.r_f, a * r1.r_r + b * r2.r_r};
    ASSERT_NEAR(scalarize(rmix, w1), a * scalarize(r1, w1) + b * scalarize(r2, w1), 1e-12);
    const PreferenceVector wmix{a * w1.w_c + b * w2.w_c, a * w1.w_f + b * w2.w_f, a * w1.w_r + b * w2.w_r};
    ASSERT_NEAR(scalarize(r1, wmix), a * scalarize(r1, w1) + b * scalarize(r1, w2), 1e-12);
  }
}

// The maximizer of w_c r_c + w_f r_f slides from the compliance target to
// the command as w_c goes from 0 to 2.
TEST(RewardProperties, MaximizerMovesMonotonicallyBetweenTargets) {
  const ComplianceModel m;
  const VelocityCommand cmd{1.0, 0.0, 0.0};
  const Wrench f{-20.0, 0.0, 0.0};  // compliance target -0.8 m/s
  const double lo = -0.8, hi = 1.0;
  double prev = -1e9;
  for (int i = 0; i <= 40; ++i) {
    const auto w = PreferenceVector::from_tracking_weight(2.0 * i / 40.0);
    double best_x = lo, best = -1.0;
    for (int g = 0; g <= 18000; ++g) {
      const double x = lo + (hi - lo) * g / 18000.0;
      const Twist v{x, 0.0, 0.0};
      const double s = w.w_c * tracking_reward(v, cmd, m.sigma) + w.w_f * compliance_reward(v, f, m);
      if (s > best) {
        best = s;
        best_x = x;
      }
    }
    ASSERT_GE(best_x, prev) << "w_c = " << w.w_c;
    prev = best_x;
    if (i == 0) { EXPECT_NEAR(best_x, lo, 1e-3); }
    if (i == 40) { EXPECT_NEAR(best_x, hi, 1e-3); }
  }
}

TEST(Preference, SamplesRespectConstraints) {
  Rng rng(4);
  double sum = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const auto w = sample_preference(rng);
    ASSERT_EQ(w.w_c + w.w_f, 2.0);
    ASSERT_GE(w.w_c, 0.0);
    ASSERT_LE(w.w_c, 2.0);
    ASSERT_GE(w.w_r, 1.0);
    ASSERT_LE(w.w_r, 2.0);
    ASSERT_TRUE(w.valid());
    sum += w.w_c;
  }
  EXPECT_NEAR(sum / n, 1.0, 0.02);
}

TEST(Preference, ValidityCheck) {
  EXPECT_TRUE((PreferenceVector{2.0, 0.0, 1.0}.valid()));
  EXPECT_FALSE((PreferenceVector{1.5, 0.0, 1.0}.valid()));
  EXPECT_FALSE((PreferenceVector{-0.5, 2.5, 1.0}.valid()));
}

TEST(Mse, Examples) {
  const ComplianceModel m;
  const std::vector<Twist> perfect(10, Twist{1.0, 0.0, 0.0});
  EXPECT_EQ(mse_metrics(perfect, {1.0, 0.0, 0.0}, {}, m).tracking, 0.0);
  const std::vector<Twist> still(10, Twist{});
  EXPECT_EQ(mse_metrics(still, {1.0, 0.0, 0.0}, {}, m).tracking, 1.0);
  const std::vector<Twist> yielding(7, Twist{0.4, -0.2, 0.0});
  EXPECT_NEAR(mse_metrics(yielding, {}, {10.0, -5.0, 0.0}, m).compliance, 0.0, 1e-30);
  EXPECT_THROW(mse_metrics(std::vector<Twist>{}, {}, {}, m), EvaluationError);
}

TEST(Mse, ConstantTrajectoryEqualsPointwiseError) {
  Rng rng(6);
  const ComplianceModel m;
  for (int k = 0; k < 1000; ++k) {
    const Twist v = random_twist(rng, 2.0);
    const VelocityCommand c{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    const Wrench w{uniform(rng, -50, 50), uniform(rng, -50, 50), uniform(rng, -7, 7)};
    const std::vector<Twist> traj(13, v);
    const auto e = mse_metrics(traj, c, w, m, Channels::kAll);
    ASSERT_NEAR(e.tracking, squared_error(v, c.as_twist(), 1.0), 1e-12);
    ASSERT_NEAR(e.compliance, squared_error(v, equivalent_velocity(m, w), 1.0), 1e-12);
  }
}

TEST(Mse, ChannelSelection) {
  const ComplianceModel m;
  const std::vector<Twist> traj(3, Twist{0.0, 0.0, 2.0});
  EXPECT_EQ(mse_metrics(traj, {}, {}, m, Channels::kLinear).tracking, 0.0);
  EXPECT_EQ(mse_metrics(traj, {}, {}, m, Channels::kAngular).tracking, 4.0);
}

TEST(ComplianceModel, RejectsNonPositiveGains) {
  EXPECT_THROW((ComplianceModel{0.0, 0.2, 0.25}.validate()), ConfigError);
  EXPECT_THROW((ComplianceModel{0.04, 0.2, -1.0}.validate()), ConfigError);
  EXPECT_NO_THROW(ComplianceModel{}.validate());
}
