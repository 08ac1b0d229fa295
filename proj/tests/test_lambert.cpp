#include <gtest/gtest.h>

#include <random>

#include "debris_linker/lambert.hpp"
#include "fixtures.hpp"

using namespace debris_linker;

namespace {

struct Arc {
  KeplerianElements el;
  CartesianState s1, s2;
  double dt = 0.0;
};

Arc make_arc(const KeplerianElements& el, double dt) {
  Arc a;
  a.el = el;
  a.dt = dt;
  a.s1 = elements_to_cartesian(el);
  a.s2 = propagate_state(el, el.epoch.plus_seconds(dt));
  return a;
}

LambertGeometry geometry_of(const Arc& a) {
  return make_lambert_geometry(a.s1.r.norm(), a.s2.r.norm(), (a.s2.r - a.s1.r).norm(), a.el.a);
}

LambertBranch classify(const Arc& a) {
  const Vec3 c = a.s1.r.cross(a.s1.v);
  const Vec3 e = ((a.s1.v.squaredNorm() - kMuEarth / a.s1.r.norm()) * a.s1.r - a.s1.r.dot(a.s1.v) * a.s1.v) / kMuEarth;
  const double revs = mean_motion(a.el.a) * a.dt / kTwoPi;
  return classify_branch(a.s1.r, a.s2.r, c, a.el.a, e, static_cast<int>(std::floor(revs)));
}

}  // namespace

TEST(BetaGamma, Limits) {
  auto [b, g] = beta_gamma(1000.0, 3000.0, 1000.0);
  EXPECT_NEAR(b, kPi, 1e-7);
  std::tie(b, g) = beta_gamma(5000.0, 3000.0, 3000.0);
  EXPECT_EQ(g, 0.0);
}

TEST(BetaGamma, Infeasible) {
  try {
    beta_gamma(1000.0, 3000.0, 2000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleGeometry);
    EXPECT_NE(std::string(e.what()).find("4a"), std::string::npos);
  }
  try {
    beta_gamma(5000.0, 1000.0, 2000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("triangle"), std::string::npos);
  }
}

TEST(BetaGamma, EccentricAnomalyDifference) {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const auto el = fixtures::random_elements(rng, 0.8);
    const double period = kTwoPi / mean_motion(el.a);
    const Arc a = make_arc(el, 0.3 * period * std::uniform_real_distribution<double>(0.05, 1.0)(rng));
    const auto br = classify(a);
    if (br.case_id != LambertCase::I) continue;
    const auto g = geometry_of(a);
    const double E1 = solve_kepler(el.mean_anomaly, el.e);
    const double E2 = solve_kepler(el.mean_anomaly + mean_motion(el.a) * a.dt, el.e);
    EXPECT_NEAR(g.beta0 - g.gamma0, E2 - E1, 1e-8) << i;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(TimeOfFlight, DegenerateHalfPeriod) {
  const LambertGeometry g{1000.0, 2000.0, 1000.0, 1000.0, kPi, 0.0};
  EXPECT_NEAR(time_of_flight(g, {LambertCase::I, 0}), kPi / mean_motion(1000.0), 1e-9);
}

TEST(TimeOfFlight, Complementarity) {
  const auto g = make_lambert_geometry(7000.0, 7400.0, 3000.0, 7500.0);
  const double n = mean_motion(7500.0);
  for (int k = 0; k < 3; ++k) {
    const double sum = time_of_flight(g, {LambertCase::III, k}) + time_of_flight(g, {LambertCase::I, k});
    EXPECT_NEAR(sum, 2.0 * (k + 1) * kPi / n + 2.0 * k * kPi / n, 1e-8);
    const double sum2 = time_of_flight(g, {LambertCase::IV, k}) + time_of_flight(g, {LambertCase::II, k});
    EXPECT_NEAR(sum2, 2.0 * (k + 1) * kPi / n + 2.0 * k * kPi / n, 1e-8);
  }
}

TEST(TimeOfFlight, CaseTable) {
  const auto g = make_lambert_geometry(7000.0, 7400.0, 3000.0, 7500.0);
  const double n = mean_motion(7500.0);
  const double T1 = (g.beta0 - g.gamma0 - (std::sin(g.beta0) - std::sin(g.gamma0))) / n;
  const double T2 = (g.beta0 + g.gamma0 - (std::sin(g.beta0) + std::sin(g.gamma0))) / n;
  const int k = 2;
  EXPECT_NEAR(time_of_flight(g, {LambertCase::I, k}), T1 + 2 * k * kPi / n, 1e-8);
  EXPECT_NEAR(time_of_flight(g, {LambertCase::II, k}), T2 + 2 * k * kPi / n, 1e-8);
  EXPECT_NEAR(time_of_flight(g, {LambertCase::III, k}), -T1 + 2 * (k + 1) * kPi / n, 1e-8);
  EXPECT_NEAR(time_of_flight(g, {LambertCase::IV, k}), -T2 + 2 * (k + 1) * kPi / n, 1e-8);
}

TEST(TimeOfFlight, ReferenceGapOnClassifiedBranch) {
  const auto el = fixtures::reference_orbit();
  const double dt = fixtures::epoch2().seconds_since(fixtures::epoch1());
  const Arc a = make_arc(el, dt);
  const auto br = classify(a);
  EXPECT_EQ(br.k, 5);
  EXPECT_LT(std::abs(time_of_flight(geometry_of(a), br) - dt), 1e-9 * dt);
}

TEST(Residual, InversePairAndSensitivity) {
  const auto g = make_lambert_geometry(7000.0, 7400.0, 3000.0, 7500.0);
  const LambertBranch b{LambertCase::II, 1};
  const double dt = time_of_flight(g, b);
  EXPECT_LT(std::abs(lambert_residual(g, b, dt)), 1e-12);
  const auto gp = make_lambert_geometry(7000.0, 7400.0, 3000.0, 7501.0);
  const double h = 1e-3;
  const double slope = (lambert_residual(make_lambert_geometry(7000.0, 7400.0, 3000.0, 7500.0 + h), b, dt) -
                        lambert_residual(make_lambert_geometry(7000.0, 7400.0, 3000.0, 7500.0 - h), b, dt)) /
                       (2 * h);
  const double change = lambert_residual(gp, b, dt);
  EXPECT_NE(change, 0.0);
  EXPECT_EQ(std::signbit(change), std::signbit(slope));
  EXPECT_NEAR(std::abs(lambert_residual(g, {LambertCase::II, 2}, dt)), kTwoPi, 1e-9);
}

TEST(Classify, ShortArcIsCaseOne) {
  const KeplerianElements el{7000.0, 0.01, 0.5, 0.2, 0.3, 0.1, Epoch::from_mjd(54127)};
  const Arc a = make_arc(el, 0.1 * kTwoPi / mean_motion(7000.0));
  EXPECT_EQ(classify(a).case_id, LambertCase::I);
}

TEST(Classify, LongArcAroundAttractingFocusIsCaseTwo) {
  // Sweep of 190 degrees centred on perigee: the chord leaves the attracting
  // focus inside the region and the empty focus outside.
  const double e = 0.3;
  const KeplerianElements el{9000.0, e, 0.5, 0.2, 0.3, 0.0, Epoch::from_mjd(54127)};
  const double E1 = -deg_to_rad(95.0), E2 = deg_to_rad(95.0);
  KeplerianElements start = el;
  start.mean_anomaly = E1 - e * std::sin(E1);
  const double dt = ((E2 - e * std::sin(E2)) - (E1 - e * std::sin(E1))) / mean_motion(el.a);
  const Arc a = make_arc(start, dt);
  EXPECT_EQ(classify(a).case_id, LambertCase::II);
  EXPECT_LT(std::abs(lambert_residual(geometry_of(a), classify(a), dt)), 1e-10);
}

TEST(Classify, ExtraRevolutionKeepsCase) {
  const KeplerianElements el{7000.0, 0.05, 0.5, 0.2, 0.3, 0.1, Epoch::from_mjd(54127)};
  const double period = kTwoPi / mean_motion(7000.0);
  const Arc a = make_arc(el, 0.3 * period);
  const Arc b = make_arc(el, 1.3 * period);
  EXPECT_EQ(classify(a).case_id, classify(b).case_id);
  EXPECT_EQ(classify(b).k, classify(a).k + 1);
}

TEST(Classify, WholeRevolutionIsAmbiguous) {
  const auto el = fixtures::reference_orbit();
  const auto s = elements_to_cartesian(el);
  const Vec3 e = ((s.v.squaredNorm() - kMuEarth / s.r.norm()) * s.r - s.r.dot(s.v) * s.v) / kMuEarth;
  try {
    classify_branch(s.r, s.r, s.r.cross(s.v), el.a, e, 1);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::AmbiguousRegion);
  }
}

TEST(Classify, OracleEquivalenceOnRandomOrbits) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> frac(0.02, 0.98);
  std::array<int, 4> seen{};
  for (int i = 0; i < 1000; ++i) {
    const auto el = fixtures::random_elements(rng, 0.8);
    const double period = kTwoPi / mean_motion(el.a);
    const int revs = i % 4;
    const Arc a = make_arc(el, (revs + frac(rng)) * period);
    LambertBranch br;
    try {
      br = classify(a);
    } catch (const Error& e) {
      ASSERT_EQ(e.kind(), ErrorKind::AmbiguousRegion);
      continue;
    }
    ASSERT_EQ(br.k, revs);
    ++seen[static_cast<int>(br.case_id)];
    const auto g = geometry_of(a);
    const double best = std::abs(lambert_residual(g, br, a.dt));
    ASSERT_LT(best, 1e-10) << i;
    for (LambertCase c : kAllLambertCases) {
      for (int k = std::max(0, revs - 1); k <= revs + 1; ++k) {
        if (c == br.case_id && k == br.k) continue;
        ASSERT_GT(std::abs(lambert_residual(g, {c, k}, a.dt)), best) << i;
      }
    }
  }
  for (int c = 0; c < 4; ++c) EXPECT_GT(seen[c], 20) << "case " << c;
}

TEST(Monotonicity, CaseOneTimeGrowsWithChord) {
  for (double a : {7000.0, 9000.0}) {
    double prev = 0.0;
    for (double d = 200.0; d <= std::min(13000.0, 4.0 * a - 13000.0); d += 200.0) {
      const double t = time_of_flight(make_lambert_geometry(6500.0, 6500.0, d, a), {LambertCase::I, 0});
      EXPECT_GT(t, prev);
      prev = t;
    }
  }
}

TEST(LambertTheorem, OrientationIndependence) {
  // Rotating the orbit about the focus changes neither (r1 + r2, d, a) nor dt.
  std::mt19937_64 rng(8);
  KeplerianElements el{8000.0, 0.2, 0.7, 0.0, 0.0, 0.4, Epoch::from_mjd(54127)};
  const double dt = 2500.0;
  const Arc base = make_arc(el, dt);
  const auto br = classify(base);
  for (int i = 0; i < 20; ++i) {
    KeplerianElements rot = el;
    rot.inclination = std::uniform_real_distribution<double>(0.0, kPi)(rng);
    rot.node = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    const Arc a = make_arc(rot, dt);
    EXPECT_NEAR(time_of_flight(geometry_of(a), br), dt, 1e-8 * dt);
  }
}
