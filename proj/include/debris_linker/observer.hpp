#pragma once

// Ground station kinematics on a spherical, uniformly rotating Earth.

#include <cmath>
#include <string>

#include "debris_linker/core.hpp"

namespace debris_linker {

/// Epoch at which the Earth rotation angle is taken to be zero.
inline const Epoch kRotationReferenceEpoch = Epoch::from_mjd(54127.0);

struct StationSpec {
  double latitude = 0.0;    // geocentric, rad
  double longitude = 0.0;   // rad, measured from the reference meridian
  double radius = 6378.0;   // km
  std::string name = "station";

  void validate() const {
    if (!(radius >= 6300.0 && radius <= 6400.0)) {
      throw Error(ErrorKind::InvalidInput, "station radius outside [6300, 6400] km");
    }
    if (!(std::abs(latitude) <= kPi / 2.0)) {
      throw Error(ErrorKind::InvalidInput, "station latitude outside [-pi/2, pi/2]");
    }
    if (!std::isfinite(longitude)) throw Error(ErrorKind::InvalidInput, "non-finite longitude");
  }
};

struct ObserverState {
  Vec3 q = Vec3::Zero();       // km
  Vec3 q_dot = Vec3::Zero();   // km/s
  Vec3 q_ddot = Vec3::Zero();  // km/s^2
  Epoch epoch;
};

inline ObserverState station_state(const StationSpec& spec, const Epoch& epoch) {
  spec.validate();
  const double theta =
      spec.longitude + kEarthRotationRate * epoch.seconds_since(kRotationReferenceEpoch);
  const double cl = std::cos(spec.latitude), sl = std::sin(spec.latitude);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double w = kEarthRotationRate;
  const double rho_eq = spec.radius * cl;

  ObserverState s;
  s.epoch = epoch;
  s.q = Vec3(rho_eq * ct, rho_eq * st, spec.radius * sl);
  s.q_dot = Vec3(-w * rho_eq * st, w * rho_eq * ct, 0.0);
  s.q_ddot = Vec3(-w * w * rho_eq * ct, -w * w * rho_eq * st, 0.0);
  return s;
}

}  // namespace debris_linker
