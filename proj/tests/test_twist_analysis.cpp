#include "bounce/twist_analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "bounce/orbit_finder.hpp"

namespace bounce {
namespace {

GeneratingContext flat_ctx() { return GeneratingContext(BouncingBallMap(ForcingProfile{}, 1.0)); }
GeneratingContext cosine_ctx(double a) { return GeneratingContext(BouncingBallMap(ForcingProfile::cosine(a), 1.0)); }

constexpr TwistMethod all_methods[] = {TwistMethod::ChainRule, TwistMethod::Recurrence, TwistMethod::FiniteDiff};

TEST(DtqDe, IntegrableClosedForm) {
  auto const ctx = flat_ctx();
  for (TwistMethod m : all_methods) {
    EXPECT_NEAR(dtq_de(ctx, 0.0, 0.5, 2, m), 4.0, 1e-8);
    EXPECT_NEAR(dtq_de(ctx, 0.37, 8.0, 3, m), 6.0 / 4.0, 1e-8);
  }
}

TEST(DtqDe, SingleStepMatchesFiniteDifferences) {
  auto const ctx = cosine_ctx(0.01);
  double const fd = dtq_de(ctx, 0.0, 2.0, 1, TwistMethod::FiniteDiff);
  EXPECT_NEAR(dtq_de(ctx, 0.0, 2.0, 1, TwistMethod::Recurrence) / fd, 1.0, 1e-7);
  EXPECT_NEAR(dtq_de(ctx, 0.0, 2.0, 1, TwistMethod::ChainRule) / fd, 1.0, 1e-7);
}

TEST(DtqDe, MethodsAgreeOnGrid) {
  for (double a : {0.01, 0.05}) {
    auto const ctx = cosine_ctx(a);
    double const lo = iterate_energy_floor(ctx.map(), 3) * 1.01;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        double const t = i / 20.0;
        double const e = lo + 4.0 * lo * j / 19.0;
        double const c = dtq_de(ctx, t, e, 3, TwistMethod::ChainRule);
        double const r = dtq_de(ctx, t, e, 3, TwistMethod::Recurrence);
        double const f = dtq_de(ctx, t, e, 3, TwistMethod::FiniteDiff);
        EXPECT_NEAR(r / c, 1.0, 1e-10) << t << " " << e;
        EXPECT_NEAR(f / c, 1.0, 1e-5) << t << " " << e;
      }
    }
  }
}

TEST(DtqDe, RejectsBadQ) {
  auto const ctx = flat_ctx();
  EXPECT_THROW((void)dtq_de(ctx, 0.0, 0.5, 0, TwistMethod::ChainRule), std::invalid_argument);
}

TEST(TwistCertificate, IntegrableIsZero) {
  auto const ctx = flat_ctx();
  for (int q : {1, 2, 3}) {
    TwistReport const r = twist_certificate(ctx, q, 1.0, 20.0, 8);
    EXPECT_LT(r.f_tilde_max, 1e-10);
    EXPECT_TRUE(r.bound_holds);
    EXPECT_DOUBLE_EQ(r.e_q_threshold, 1.0);
    EXPECT_EQ(r.samples.size(), 64u);
  }
}

TEST(TwistCertificate, SingleStepMarginDecaysWithEnergy) {
  auto const ctx = cosine_ctx(0.01);
  TwistReport const r = twist_certificate(ctx, 1, 5.0, 50.0);
  EXPECT_TRUE(r.bound_holds);
  EXPECT_FALSE(r.below_domain);
  EXPECT_EQ(r.failed_nodes, 0);
  EXPECT_LT(r.method_agreement, 1e-5);
  EXPECT_GT(r.f_tilde_max, 0.0);
  EXPECT_EQ(r.row_max.size(), 32u);
  EXPECT_LT(r.row_max.back(), r.row_max.front());
  EXPECT_DOUBLE_EQ(r.e_q_threshold, 5.0);
}

// For q = 2 the racket acceleration at the middle impact contributes 2 f''(t_1) / g to ft_2
// at every energy, so the bound needs |f''| < g / 4 roughly. a = 0.01 gives |f''| = 0.395.
TEST(TwistCertificate, SecondIterateNeedsSmallAcceleration) {
  auto const ctx = cosine_ctx(0.01);
  TwistReport const r = twist_certificate(ctx, 2, 5.0, 50.0);
  EXPECT_FALSE(r.bound_holds);
  EXPECT_LT(r.method_agreement, 1e-5);
  double const predicted = 2.0 * ctx.profile().sup_norm(2) / ctx.params().g;
  EXPECT_NEAR(r.f_tilde_max / predicted, 1.0, 0.06);
  EXPECT_TRUE(std::isnan(r.e_q_threshold));
}

TEST(TwistCertificate, WeakForcingHoldsUpToThree) {
  auto const ctx = cosine_ctx(0.002);
  for (int q : {1, 2, 3}) {
    TwistReport const r = twist_certificate(ctx, q, 5.0, 50.0);
    EXPECT_TRUE(r.bound_holds) << q << " " << r.f_tilde_max;
    EXPECT_LT(r.method_agreement, 1e-5);
  }
}

TEST(TwistCertificate, LargeForcingFailsWithoutThrowing) {
  auto const ctx = cosine_ctx(0.5);
  TwistReport r;
  ASSERT_NO_THROW(r = twist_certificate(ctx, 3, 2.0, 20.0, 12));
  EXPECT_FALSE(r.bound_holds);
  EXPECT_TRUE(r.below_domain);
}

TEST(TwistCertificate, RejectsBadRange) {
  auto const ctx = flat_ctx();
  EXPECT_THROW(twist_certificate(ctx, 1, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(twist_certificate(ctx, 1, 2.0, 1.0), std::invalid_argument);
}

TEST(AprioriBounds, IntegrableHasZeroTimeSlack) {
  auto const ctx = flat_ctx();
  AprioriReport const r = apriori_bounds_check(ctx.map(), {0.0, 0.5}, 10);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.time_slack, 0.0, 1e-12);
  EXPECT_NEAR(r.drift_slack, 0.0, 1e-12);
  EXPECT_NEAR(r.step_slack, 0.0, 1e-12);
}

TEST(AprioriBounds, ForcedOrbitsHold) {
  AprioriReport const a = apriori_bounds_check(cosine_ctx(0.01).map(), {0.0, 0.5}, 10);
  EXPECT_TRUE(a.ok());
  EXPECT_GT(a.drift_slack, 0.0);
  EXPECT_GT(a.time_slack, 0.0);
  AprioriReport const b = apriori_bounds_check(cosine_ctx(0.05).map(), {0.0, 2.0}, 20);
  EXPECT_TRUE(b.ok());
}

TEST(AprioriBounds, HoldAlongFoundOrbits) {
  auto const ctx = cosine_ctx(0.01);
  for (OrbitKey key : {OrbitKey{2, 1}, OrbitKey{5, 2}, OrbitKey{7, 3}}) {
    for (auto const& o : sweep_enumerate(key, ctx).orbits) {
      EXPECT_TRUE(apriori_bounds_check(ctx.map(), o.point(0), 10 * key.q).ok());
    }
  }
}

}  // namespace
}  // namespace bounce
