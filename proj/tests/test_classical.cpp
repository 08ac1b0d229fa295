#include <gtest/gtest.h>

#include <random>

#include "debris_linker/classical.hpp"
#include "fixtures.hpp"

using namespace debris_linker;

namespace {

GibbsInput sample(const KeplerianElements& el, double h, double t0 = 0.0) {
  GibbsInput in;
  for (int i = 0; i < 3; ++i) {
    const auto s = propagate_state(el, el.epoch.plus_seconds(t0 + i * h));
    in.r[i] = s.r;
    in.t[i] = s.epoch;
  }
  return in;
}

double velocity_error(const KeplerianElements& el, double h) {
  const auto in = sample(el, h);
  return (gibbs_velocity(in) - propagate_state(el, in.t[1]).v).norm();
}

}  // namespace

TEST(GibbsCoefficients, SymmetricSpacing) {
  const double h = 10.0;
  const auto c = gibbs_coefficients(h, h, 2 * h);
  EXPECT_DOUBLE_EQ(c.G[0], 1.0 / (2 * h));
  EXPECT_DOUBLE_EQ(c.G[2], 1.0 / (2 * h));
  EXPECT_DOUBLE_EQ(c.G[1], 0.0);
  EXPECT_DOUBLE_EQ(c.H[0], kMuEarth * h / 12.0);
  EXPECT_DOUBLE_EQ(c.H[1], 0.0);
  EXPECT_THROW(gibbs_coefficients(0.0, h, h), Error);
}

TEST(GibbsVelocity, CircularOrbitTenSeconds) {
  const KeplerianElements el{7000.0, 0.0, 0.9, 0.4, 0.0, 1.0, Epoch::from_mjd(54127)};
  EXPECT_LT(velocity_error(el, 10.0), 1e-6);
}

TEST(GibbsVelocity, FourthOrderTruncation) {
  const KeplerianElements el{7000.0, 0.01, 0.9, 0.4, 0.3, 1.0, Epoch::from_mjd(54127)};
  const double e1 = velocity_error(el, 40.0), e2 = velocity_error(el, 80.0), e3 = velocity_error(el, 160.0);
  const double s1 = std::log2(e2 / e1), s2 = std::log2(e3 / e2);
  EXPECT_NEAR(s1, 4.0, 0.3);
  EXPECT_NEAR(s2, 4.0, 0.3);
}

TEST(GibbsVelocity, CoplanarityOfKeplerianPositions) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 50; ++i) {
    const auto el = fixtures::random_elements(rng, 0.5);
    EXPECT_LT(std::abs(gibbs_coplanarity(sample(el, 30.0))), 1e-12);
  }
}

TEST(GibbsVelocity, InputErrors) {
  const auto el = fixtures::reference_orbit();
  GibbsInput in = sample(el, 10.0);
  GibbsInput same = in;
  same.t[1] = same.t[0];
  try {
    gibbs_velocity(same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateTimes);
  }
  GibbsInput back = in;
  std::swap(back.t[0], back.t[2]);
  try {
    gibbs_velocity(back);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  GibbsInput line = in;
  line.r[1] = 1.1 * line.r[0];
  try {
    gibbs_velocity(line);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CollinearPositions);
  }
}

TEST(GibbsTrack, ZeroNoiseTrackRecoversVelocity) {
  const auto el = fixtures::reference_orbit();
  const auto track = simulate_track(el, fixtures::radar(), fixtures::epoch1(), 4, 10.0);
  const auto g = gibbs_from_track(track);
  EXPECT_EQ(g.state.epoch.seconds_since(track.obs[1].epoch), 0.0);
  const auto truth = propagate_state(el, g.state.epoch);
  EXPECT_LT((g.state.v - truth.v).norm(), 1e-6);
  EXPECT_LT(std::abs(g.elements.a - el.a), 0.05);
  RadarTrack short_track = track;
  short_track.obs.pop_back();
  EXPECT_THROW(gibbs_from_track(short_track), Error);
}

TEST(KeplerianIntegrals, ExactPairRecoversTruth) {
  const auto el = fixtures::reference_orbit();
  const auto st = fixtures::radar();
  const auto a1 = exact_attributable(el, st, fixtures::epoch1());
  const auto a2 = exact_attributable(el, st, fixtures::epoch2());
  const auto sols = keplerian_integrals_link(a1, a2);
  ASSERT_FALSE(sols.empty());
  int preferred = 0;
  for (const auto& s : sols) {
    EXPECT_EQ(s.method.rfind("ki-root-", 0), 0u);
    EXPECT_TRUE(s.delta.as_vector().isZero(0.0));
    preferred += s.preferred;
  }
  EXPECT_EQ(preferred, 1);
  for (const auto& s : sols) {
    if (!s.preferred) continue;
    EXPECT_NEAR(s.elements[0].a, el.a, 1e-4);
    EXPECT_LT((s.states[0].v - propagate_state(el, fixtures::epoch1()).v).norm(), 1e-8);
  }
}

TEST(KeplerianIntegrals, SameRootsAsQuadraticReduction) {
  const auto el = fixtures::reference_orbit();
  const auto st = fixtures::radar();
  const auto a1 = interpolate_track(simulate_track(el, st, fixtures::epoch1(), 4, 10.0));
  const auto a2 = interpolate_track(simulate_track(el, st, fixtures::epoch2(), 4, 10.0));
  const auto xs = solve_X_quadratic(assemble_quadratic(epoch_geometry(a1, 0, 0), epoch_geometry(a2, 0, 0)));
  const auto sols = keplerian_integrals_link(a1, a2);
  ASSERT_EQ(sols.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(sols[i].X.as_vector(), xs[i].as_vector());
    EXPECT_NEAR(sols[i].lenz_score, std::abs(laplace_lenz_diff_dot_v2(epoch_geometry(a1, 0, 0),
                                                                      epoch_geometry(a2, 0, 0), xs[i])),
                1e-12 * (1.0 + sols[i].lenz_score));
  }
}
