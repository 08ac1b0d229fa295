#pragma once

// Baselines: Gibbs' velocity from three positions of one pass, and linkage by
// the Keplerian integrals (angular momentum and energy) without angle
// corrections.

#include <array>
#include <cmath>
#include <vector>

#include "debris_linker/core.hpp"
#include "debris_linker/linkage.hpp"
#include "debris_linker/radar_sim.hpp"

namespace debris_linker {

struct GibbsInput {
  std::array<Vec3, 3> r;      // km
  std::array<Epoch, 3> t;
};

struct GibbsCoefficients {
  std::array<double, 3> G{}, H{};
};

/// G1 = t32^2/(t21 t32 t31), G3 = t21^2/(t21 t32 t31), G2 = G1 - G3,
/// H1 = mu t32/12, H3 = mu t21/12, H2 = H1 - H3.
inline GibbsCoefficients gibbs_coefficients(double t21, double t32, double t31, double mu = kMuEarth) {
  if (t21 == 0.0 || t32 == 0.0 || t31 == 0.0) throw Error(ErrorKind::DegenerateTimes, "coincident epochs");
  GibbsCoefficients c;
  const double den = t21 * t32 * t31;
  c.G[0] = t32 * t32 / den;
  c.G[2] = t21 * t21 / den;
  c.G[1] = c.G[0] - c.G[2];
  c.H[0] = mu * t32 / 12.0;
  c.H[2] = mu * t21 / 12.0;
  c.H[1] = c.H[0] - c.H[2];
  return c;
}

/// Angle between r2 and the plane of r1, r3 (rad); zero for Keplerian positions.
inline double gibbs_coplanarity(const GibbsInput& in) {
  const Vec3 n = in.r[0].cross(in.r[2]);
  return std::asin(std::clamp(n.normalized().dot(in.r[1].normalized()), -1.0, 1.0));
}

/// Velocity at t2: r2_dot = -d1 r1 + d2 r2 + d3 r3 with d_j = G_j + H_j / r_j^3.
inline Vec3 gibbs_velocity(const GibbsInput& in, double mu = kMuEarth) {
  const double t21 = in.t[1].seconds_since(in.t[0]);
  const double t32 = in.t[2].seconds_since(in.t[1]);
  const double t31 = in.t[2].seconds_since(in.t[0]);
  if (!(t21 > 0.0) || !(t32 > 0.0)) {
    if (t21 == 0.0 || t32 == 0.0) throw Error(ErrorKind::DegenerateTimes, "coincident epochs");
    throw Error(ErrorKind::InvalidInput, "Gibbs epochs must satisfy t1 < t2 < t3");
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double s = in.r[i].cross(in.r[j]).norm() / (in.r[i].norm() * in.r[j].norm());
      if (s < 1e-9) {
        throw Error(ErrorKind::CollinearPositions, "Gibbs positions are collinear");
      }
    }
  }
  const auto c = gibbs_coefficients(t21, t32, t31, mu);
  std::array<double, 3> d{};
  for (int j = 0; j < 3; ++j) d[j] = c.G[j] + c.H[j] / std::pow(in.r[j].norm(), 3);
  return -d[0] * in.r[0] + d[1] * in.r[1] + d[2] * in.r[2];
}

struct GibbsResult {
  CartesianState state;
  KeplerianElements elements;
  double coplanarity = 0.0;  // rad
};

/// Gibbs on observations 1, 2 and 4 of a track.
inline GibbsResult gibbs_from_track(const RadarTrack& track, double mu = kMuEarth) {
  if (track.size() < 4) throw Error(ErrorKind::TooFewObservations, "Gibbs uses observations 1, 2 and 4");
  GibbsInput in;
  const std::array<std::size_t, 3> pick{0, 1, 3};
  for (int i = 0; i < 3; ++i) {
    const auto& o = track.obs[pick[i]];
    in.r[i] = station_state(o.station, o.epoch).q + o.rho * o.dir.unit_vector();
    in.t[i] = o.epoch;
  }
  GibbsResult out;
  out.coplanarity = gibbs_coplanarity(in);
  out.state = CartesianState{in.r[1], gibbs_velocity(in, mu), in.t[1]};
  out.elements = cartesian_to_elements(out.state, mu);
  return out;
}

/// Keplerian-integrals linkage: the shared-energy quadratic reduction at
/// Delta = 0. Every real root becomes an orbit; the root with the smaller
/// |(L1 - L2).v2| is flagged as preferred.
inline std::vector<LinkageSolution> keplerian_integrals_link(const Attributable& att1, const Attributable& att2,
                                                             double mu = kMuEarth) {
  validate_pair(att1, att2, NewtonOptions{}.min_gap_seconds);
  const EpochGeometry g1 = epoch_geometry(att1, 0.0, 0.0, mu);
  const EpochGeometry g2 = epoch_geometry(att2, 0.0, 0.0, mu);
  const QuadraticSystemNW sys = assemble_quadratic(g1, g2);
  const auto xs = solve_X_quadratic(sys);

  std::vector<LinkageSolution> out;
  std::optional<Error> last_error;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    LinkageSolution sol;
    sol.X = xs[i];
    sol.method = quadratic_label("ki", static_cast<int>(i));
    ReducedResidual res;
    res.X = xs[i];
    res.g1 = g1;
    res.g2 = g2;
    try {
      fill_states(sol, res, mu);
    } catch (const Error& e) {
      last_error = e;
      continue;
    }
    out.push_back(std::move(sol));
  }
  if (out.empty()) {
    if (last_error) throw *last_error;
    throw Error(ErrorKind::NoRealRoot, "no Keplerian-integrals orbit");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].lenz_score < out[best].lenz_score) best = i;
  }
  out[best].preferred = true;
  return out;
}

}  // namespace debris_linker
