#include "bounce/orbit_finder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracle/grid_oracle.hpp"

namespace bounce {
namespace {

GeneratingContext flat_ctx() { return GeneratingContext(BouncingBallMap(ForcingProfile{}, 1.0)); }
GeneratingContext cosine_ctx(double a) { return GeneratingContext(BouncingBallMap(ForcingProfile::cosine(a), 1.0)); }

double cyclic(double a, double b) {
  double const d = a - b;
  return std::abs(d - std::round(d));
}

void expect_orbit_invariants(PeriodicOrbit const& o, GeneratingContext const& ctx) {
  EXPECT_LT(o.residual, 1e-10);
  EXPECT_NEAR(o.monodromy_det, 1.0, 1e-8);
  EXPECT_EQ(o.stability, classify_trace(o.monodromy_trace));
  EXPECT_DOUBLE_EQ(o.residue, (2.0 - o.monodromy_trace) / 4.0);
  EXPECT_GE(o.times[0], -1e-10);
  EXPECT_LT(o.times[0], 1.0);
  for (int i = 0; i + 1 < o.key.q; ++i) {
    EXPECT_LT(o.times[i], o.times[i + 1]);
  }
  OrbitSegment const seg = ctx.map().iterate(o.point(0), o.key.q);
  EXPECT_NEAR(seg.back().t, o.times[0] + o.key.p, 1e-10);
  EXPECT_NEAR(seg.back().e, o.energies[0], 1e-10);
}

TEST(OrbitKey, Validation) {
  EXPECT_NO_THROW((OrbitKey{2, 1}.validate()));
  EXPECT_NO_THROW((OrbitKey{7, 3}.validate()));
  EXPECT_THROW((OrbitKey{2, 2}.validate()), std::invalid_argument);
  EXPECT_THROW((OrbitKey{0, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((OrbitKey{1, 0}.validate()), std::invalid_argument);
}

TEST(ExistenceThreshold, Values) {
  ForcingProfile const zero;
  EXPECT_NEAR(existence_threshold(zero, MapParams::for_profile(zero, 1.0, 1.0)), 3.0, 1e-15);
  auto const f = ForcingProfile::cosine(0.01);
  double const df = 0.01 * two_pi;
  MapParams const mp = MapParams::for_profile(f);
  EXPECT_NEAR(existence_threshold(f, mp), 1.0 + 4 * df + 2 * (4 * df + 1.0), 1e-12);
  double prev = 0.0;
  for (double a : {0.0, 0.01, 0.02, 0.05}) {
    auto const fa = ForcingProfile::cosine(a);
    double const alpha = existence_threshold(fa, MapParams::for_profile(fa, 1.0, 2.0));
    EXPECT_GT(alpha, prev);
    prev = alpha;
  }
}

TEST(NewtonOrbit, IntegrableFamilyIsSingular) {
  auto const ctx = flat_ctx();
  NewtonResult const r = newton_orbit({2, 1}, {0.3, 0.49}, ctx);
  EXPECT_EQ(r.status, NewtonStatus::SingularJacobian);
  ASSERT_TRUE(r.orbit.has_value());
  EXPECT_NEAR(r.orbit->energies[0], 0.5, 1e-12);
  EXPECT_NEAR(r.orbit->times[0], 0.3, 1e-12);
  EXPECT_EQ(r.orbit->stability, Stability::Parabolic);
}

TEST(NewtonOrbit, CosineSeedsGiveTwoOrbitsMatchingGridOracle) {
  auto const ctx = cosine_ctx(0.01);
  OrbitKey const key{2, 1};
  std::vector<PeriodicOrbit> found;
  for (double t : {0.0, 0.25, 0.5, 0.75}) {
    NewtonResult const r = newton_orbit(key, {t, 0.5}, ctx);
    ASSERT_EQ(r.status, NewtonStatus::Converged) << t;
    EXPECT_LE(r.iterations, 50);
    EXPECT_TRUE(r.below_threshold);
    expect_orbit_invariants(*r.orbit, ctx);
    if (std::none_of(found.begin(), found.end(), [&](auto const& o) { return same_orbit(o, *r.orbit); })) {
      found.push_back(*r.orbit);
    }
  }
  ASSERT_EQ(found.size(), 2u);

  oracle::GridOracle const grid(ctx.map(), 2, 0.2, 1.0);
  auto const zeros = grid.zeros();
  ASSERT_EQ(zeros.size(), 2u);
  for (auto const& z : zeros) {
    int matches = 0;
    for (auto const& o : found) {
      if (cyclic(o.times[0], z.t) < 1e-6 && std::abs(o.energies[0] - z.e) < 1e-6) {
        ++matches;
      }
    }
    EXPECT_EQ(matches, 1) << z.t << " " << z.e;
  }
}

TEST(NewtonOrbit, BelowThresholdStillSearches) {
  auto const ctx = cosine_ctx(0.01);
  NewtonResult const r = newton_orbit({3, 2}, {0.1, 0.28}, ctx);
  EXPECT_TRUE(r.below_threshold);
  EXPECT_GE(r.iterations, 1);
}

TEST(NewtonOrbit, BadSeedReportsNoConvergence) {
  auto const ctx = cosine_ctx(0.01);
  NewtonResult const r = newton_orbit({2, 1}, {0.1, -1.0}, ctx);
  EXPECT_EQ(r.status, NewtonStatus::NoConvergence);
  EXPECT_FALSE(r.orbit.has_value());
}

TEST(MinimizeAction, IntegrableEquispaced) {
  auto const ctx = flat_ctx();
  PeriodicOrbit const o = minimize_action({4, 2}, ctx, ActionConfiguration({0.0, 1.7}, 4, 2));
  EXPECT_NEAR(o.times[1] - o.times[0], 2.0, 1e-9);
  EXPECT_NEAR(o.action, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(o.morse_index, 0);
  EXPECT_FALSE(o.primitive);
}

TEST(MinimizeAction, CosinePicksLowerActionOrbit) {
  auto const ctx = cosine_ctx(0.01);
  OrbitKey const key{2, 1};
  DegeneracyReport const rep = sweep_enumerate(key, ctx);
  ASSERT_EQ(rep.orbits.size(), 2u);
  double const lowest = std::min(rep.orbits[0].action, rep.orbits[1].action);
  for (double t0 : {0.05, 0.3, 0.9}) {
    PeriodicOrbit const o = minimize_action(key, ctx, equispaced_configuration(key, t0));
    EXPECT_NEAR(o.action, lowest, 1e-12);
    EXPECT_EQ(o.morse_index, 0);
    EXPECT_LT(action_grad(o.configuration(), ctx).lpNorm<Eigen::Infinity>(), 1e-9);
    expect_orbit_invariants(o, ctx);
  }
}

TEST(MinimizeAction, RejectsInadmissibleSeed) {
  auto const ctx = cosine_ctx(0.01);
  EXPECT_THROW(minimize_action({4, 2}, ctx, ActionConfiguration({0.0, 0.2}, 4, 2)), InadmissibleSegment);
}

TEST(NeighborTranslate, SmallestPositiveTranslate) {
  ActionConfiguration const c1 = neighbor_translate(ActionConfiguration({0.25}, 2, 1));
  EXPECT_DOUBLE_EQ(c1.times[0], 1.25);
  // (5, 2): t_{i+1} - 2 lies 1/2 above t_i for the rigid rotation.
  ActionConfiguration const c2 = neighbor_translate(equispaced_configuration({5, 2}, 0.0));
  EXPECT_NEAR(c2.times[0], 0.5, 1e-15);
  EXPECT_NEAR(c2.times[1], 3.0, 1e-15);
}

TEST(MinimaxOrbit, CosineMountainPass) {
  for (OrbitKey key : {OrbitKey{2, 1}, OrbitKey{5, 2}, OrbitKey{7, 3}}) {
    auto const ctx = cosine_ctx(0.01);
    PeriodicOrbit const mn = minimize_action(key, ctx, equispaced_configuration(key, 0.3));
    PeriodicOrbit up = mn;
    up.times = neighbor_translate(mn.configuration()).times;
    PeriodicOrbit const mm = minimax_orbit(key, ctx, mn, up);
    EXPECT_GE(mm.morse_index, 1);
    EXPECT_GT(mm.action, mn.action);
    EXPECT_LT(action_grad(mm.configuration(), ctx).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_FALSE(same_orbit(mm, mn));
    expect_orbit_invariants(mm, ctx);

    DegeneracyReport const rep = sweep_enumerate(key, ctx);
    int hits = 0;
    for (auto const& o : rep.orbits) {
      hits += same_orbit(o, mm) ? 1 : 0;
    }
    EXPECT_EQ(hits, 1) << key.p << "/" << key.q;
  }
}

TEST(MinimaxOrbit, IntegrableCollapses) {
  auto const ctx = flat_ctx();
  OrbitKey const key{2, 1};
  PeriodicOrbit const mn = minimize_action(key, ctx, equispaced_configuration(key, 0.3));
  PeriodicOrbit up = mn;
  up.times = neighbor_translate(mn.configuration()).times;
  EXPECT_THROW(minimax_orbit(key, ctx, mn, up), PathCollapse);
  EXPECT_THROW(minimax_orbit(key, ctx, mn, mn), PathCollapse);
}

TEST(SweepEnumerate, CosineIsFiniteWithInstabilityWitness) {
  auto const ctx = cosine_ctx(0.01);
  DegeneracyReport const rep = sweep_enumerate({2, 1}, ctx);
  EXPECT_EQ(rep.kind, SetKind::Finite);
  ASSERT_EQ(rep.orbits.size(), 2u);
  int hyperbolic = 0;
  int elliptic = 0;
  for (auto const& o : rep.orbits) {
    expect_orbit_invariants(o, ctx);
    hyperbolic += o.stability == Stability::Hyperbolic;
    elliptic += o.stability == Stability::Elliptic;
  }
  EXPECT_EQ(hyperbolic, 1);
  EXPECT_EQ(elliptic, 1);
  ASSERT_TRUE(rep.instability_witness.has_value());
  EXPECT_EQ(rep.orbits[*rep.instability_witness].stability, Stability::Hyperbolic);
  EXPECT_FALSE(rep.theory_violation);
  EXPECT_TRUE(rep.below_threshold);
  EXPECT_LT(rep.e_lo, 0.5);
  EXPECT_GT(rep.e_hi, 0.5);
}

TEST(SweepEnumerate, IntegrableIsDegenerate) {
  auto const ctx = flat_ctx();
  DegeneracyReport const rep = sweep_enumerate({2, 1}, ctx);
  ASSERT_EQ(rep.kind, SetKind::Degenerate);
  ASSERT_EQ(rep.curve_samples.size(), 256u);
  double worst = 0.0;
  for (auto const& s : rep.curve_samples) {
    worst = std::max(worst, std::abs(s.e - 0.5));
  }
  EXPECT_LT(worst, 1e-9);
  EXPECT_LT(rep.curve_residual, 1e-8);
  EXPECT_GE(rep.orbits.size(), 50u);
  for (auto const& o : rep.orbits) {
    EXPECT_EQ(o.stability, Stability::Parabolic);
    EXPECT_NEAR(o.monodromy_trace, 2.0, 1e-6);
  }
  EXPECT_FALSE(rep.theory_violation);
}

TEST(SweepEnumerate, HigherPeriodsAreBirkhoff) {
  for (OrbitKey key : {OrbitKey{5, 2}, OrbitKey{7, 3}}) {
    auto const ctx = cosine_ctx(0.01);
    DegeneracyReport const rep = sweep_enumerate(key, ctx);
    EXPECT_EQ(rep.kind, SetKind::Finite);
    ASSERT_EQ(rep.orbits.size(), 2u);
    for (auto const& o : rep.orbits) {
      expect_orbit_invariants(o, ctx);
      EXPECT_TRUE(birkhoff_validate(o).ok());
    }
    EXPECT_TRUE(rep.instability_witness.has_value());
  }
}

TEST(SweepEnumerate, ZeroOnWindowEdgeIsReported) {
  auto const ctx = cosine_ctx(0.01);
  SweepGrid grid;
  grid.e_lo = 0.499;
  grid.e_hi = 0.9;
  EXPECT_THROW(sweep_enumerate({2, 1}, ctx, grid), GridTooCoarse);
}

TEST(SameOrbit, ModuloTranslationAndRelabelling) {
  auto const ctx = cosine_ctx(0.01);
  DegeneracyReport const rep = sweep_enumerate({5, 2}, ctx);
  ASSERT_FALSE(rep.orbits.empty());
  PeriodicOrbit shifted = rep.orbits[0];
  for (double& t : shifted.times) {
    t += 1.0;
  }
  EXPECT_TRUE(same_orbit(rep.orbits[0], shifted));
  PeriodicOrbit relabelled = rep.orbits[0];
  std::swap(relabelled.times[0], relabelled.times[1]);
  std::swap(relabelled.energies[0], relabelled.energies[1]);
  EXPECT_TRUE(same_orbit(rep.orbits[0], relabelled));
  EXPECT_FALSE(same_orbit(rep.orbits[0], rep.orbits[1]));
}

TEST(ClassifyStability, HyperbolicGrowthMatchesMultiplier) {
  auto const ctx = cosine_ctx(0.01);
  DegeneracyReport const rep = sweep_enumerate({2, 1}, ctx);
  for (auto const& o : rep.orbits) {
    ProbeOptions opt;
    opt.n_initial = 20;
    opt.periods = 2000;
    StabilityReport const s = classify_stability(o, ctx, opt);
    EXPECT_EQ(s.stability, o.stability);
    if (o.stability == Stability::Hyperbolic) {
      EXPECT_GE(s.max_deviation, 1e-2);
      EXPECT_GT(s.n_fitted, 0);
      EXPECT_NEAR(s.growth_rate / s.expected_rate, 1.0, 0.1);
    } else {
      EXPECT_LE(s.max_deviation, 1e-3);
      EXPECT_EQ(s.n_escaped, 0);
    }
  }
}

TEST(ClassifyStability, ProbeIsSeedDeterministic) {
  auto const ctx = cosine_ctx(0.01);
  PeriodicOrbit const o = minimize_action({2, 1}, ctx, equispaced_configuration({2, 1}, 0.3));
  ProbeOptions opt;
  opt.n_initial = 5;
  opt.periods = 200;
  StabilityReport const a = classify_stability(o, ctx, opt);
  StabilityReport const b = classify_stability(o, ctx, opt);
  EXPECT_EQ(a.max_deviation, b.max_deviation);
  EXPECT_EQ(a.growth_rate, b.growth_rate);
}

TEST(ClassifyStability, IntegrableShearIsParabolic) {
  auto const ctx = flat_ctx();
  NewtonResult const r = newton_orbit({2, 1}, {0.3, 0.49}, ctx);
  ProbeOptions opt;
  opt.n_initial = 10;
  opt.periods = 1000;
  StabilityReport const s = classify_stability(*r.orbit, ctx, opt);
  EXPECT_EQ(s.stability, Stability::Parabolic);
  // Deviation grows at most linearly: dt_n ~ n * (dt/de) * de.
  EXPECT_GT(s.max_deviation, 1e-6);
  EXPECT_LT(s.max_deviation, 1e-6 * (1.0 + 2.0 * 1000) * 1.01);
}

TEST(BirkhoffValidate, IntegrableAndNegativeControl) {
  PeriodicOrbit o;
  o.key = {4, 2};
  o.times = {0.0, 2.0};
  o.energies = {0.5, 0.5};
  // (4, 2) is not coprime; the gaps still satisfy the estimate.
  BirkhoffReport const r = birkhoff_validate(o);
  EXPECT_TRUE(r.gaps_ok);
  EXPECT_DOUBLE_EQ(r.min_gap, 2.0);
  EXPECT_DOUBLE_EQ(r.gap_bound, 1.0);

  PeriodicOrbit c;
  c.key = {7, 3};
  c.times = {0.0, 7.0 / 3.0, 14.0 / 3.0};
  c.energies = {0.7, 0.7, 0.7};
  EXPECT_TRUE(birkhoff_validate(c).ok());
  std::swap(c.times[1], c.times[2]);
  EXPECT_FALSE(birkhoff_validate(c).ordered);
}

TEST(BirkhoffValidate, CosineOrbitsPass) {
  auto const ctx = cosine_ctx(0.01);
  for (auto const& o : sweep_enumerate({2, 1}, ctx).orbits) {
    BirkhoffReport const r = birkhoff_validate(o);
    EXPECT_TRUE(r.ok());
    EXPECT_NEAR(r.min_gap, 2.0, 1e-9);
  }
}

}  // namespace
}  // namespace bounce
