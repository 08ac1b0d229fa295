#pragma once

#include <random>

#include "debris_linker/core.hpp"
#include "debris_linker/observer.hpp"
#include "debris_linker/radar_sim.hpp"

namespace fixtures {

using namespace debris_linker;

inline KeplerianElements reference_orbit() {
  return KeplerianElements{7818.10,           0.066,
                           deg_to_rad(65.81), deg_to_rad(216.25),
                           deg_to_rad(357.16), deg_to_rad(202.08),
                           Epoch::from_mjd(54127.155035)};
}

inline Epoch epoch1() { return Epoch::from_mjd(54127.155035); }
inline Epoch epoch2() { return Epoch::from_mjd(54127.582118); }

/// Station that sees the reference orbit at both epochs (ranges near 2000 km).
inline StationSpec radar() { return StationSpec{deg_to_rad(-18.0), deg_to_rad(344.0), 6378.0, "RADAR"}; }

inline KeplerianElements random_elements(std::mt19937_64& rng, double max_e = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  KeplerianElements el;
  el.a = 6800.0 + 35000.0 * u(rng);
  el.e = max_e * u(rng);
  el.inclination = 0.01 + (kPi - 0.02) * u(rng);
  el.node = kTwoPi * u(rng);
  el.perigee = kTwoPi * u(rng);
  el.mean_anomaly = kTwoPi * u(rng);
  el.epoch = Epoch::from_mjd(54127.0 + u(rng));
  return el;
}

inline double rel(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

inline double angle_diff(double a, double b) { return std::abs(wrap_pi(a - b)); }

}  // namespace fixtures
