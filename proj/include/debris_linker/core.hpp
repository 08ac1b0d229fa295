#pragma once

// Frames, epochs, angle helpers, element conversion and Kepler propagation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <sstream>

#include "debris_linker/errors.hpp"

namespace debris_linker {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kMuEarth = 398600.4418;          // km^3/s^2
inline constexpr double kEarthRotationRate = 7.2921150e-5;  // rad/s
inline constexpr double kSecondsPerDay = 86400.0;

inline constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Wraps an angle into [0, 2pi).
inline double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Wraps an angle into [-pi, pi).
inline double wrap_pi(double angle) {
  double w = wrap_two_pi(angle + kPi) - kPi;
  return w;
}

/// Epoch on a uniform (TT-like) time scale, stored as whole MJD day plus the
/// fraction of the day so that second-level differences keep full precision.
class Epoch {
 public:
  Epoch() = default;

  static Epoch from_mjd(double mjd) {
    if (!std::isfinite(mjd)) throw Error(ErrorKind::InvalidInput, "non-finite MJD");
    const double day = std::floor(mjd);
    return Epoch(static_cast<std::int64_t>(day), mjd - day);
  }

  static Epoch from_day_fraction(std::int64_t day, double fraction) {
    if (!std::isfinite(fraction)) throw Error(ErrorKind::InvalidInput, "non-finite day fraction");
    return Epoch(day, fraction);
  }

  double mjd() const { return static_cast<double>(day_) + fraction_; }
  std::int64_t day() const { return day_; }
  double day_fraction() const { return fraction_; }

  /// this - other, in seconds.
  double seconds_since(const Epoch& other) const {
    return (static_cast<double>(day_ - other.day_) + (fraction_ - other.fraction_)) * kSecondsPerDay;
  }

  Epoch plus_seconds(double dt) const { return Epoch(day_, fraction_ + dt / kSecondsPerDay); }

  friend bool operator==(const Epoch& a, const Epoch& b) {
    return a.day_ == b.day_ && a.fraction_ == b.fraction_;
  }
  friend std::partial_ordering operator<=>(const Epoch& a, const Epoch& b) {
    if (a.day_ != b.day_) return a.day_ <=> b.day_;
    return a.fraction_ <=> b.fraction_;
  }

 private:
  Epoch(std::int64_t day, double fraction) : day_(day), fraction_(fraction) { normalize(); }

  void normalize() {
    const double shift = std::floor(fraction_);
    if (shift != 0.0) {
      day_ += static_cast<std::int64_t>(shift);
      fraction_ -= shift;
    }
    if (fraction_ >= 1.0) {
      fraction_ -= 1.0;
      ++day_;
    }
  }

  std::int64_t day_ = 0;
  double fraction_ = 0.0;
};

struct SphericalDirection {
  double alpha = 0.0;  // right ascension, rad
  double delta = 0.0;  // declination, rad

  static SphericalDirection from_vector(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidInput, "zero direction vector");
    SphericalDirection d;
    d.alpha = wrap_two_pi(std::atan2(v.y(), v.x()));
    d.delta = std::asin(std::clamp(v.z() / n, -1.0, 1.0));
    return d;
  }

  Vec3 unit_vector() const {
    const double cd = std::cos(delta);
    return {cd * std::cos(alpha), cd * std::sin(alpha), std::sin(delta)};
  }
};

/// Line-of-sight frame {e_rho, e_alpha, e_delta} plus e_perp = d e_alpha / d alpha.
struct DirectionFrame {
  Vec3 e_rho;
  Vec3 e_alpha;
  Vec3 e_delta;
  Vec3 e_perp;
};

inline DirectionFrame direction_frame(double alpha, double delta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cd = std::cos(delta), sd = std::sin(delta);
  if (std::abs(cd) < 1e-9) {
    throw Error(ErrorKind::PolarSingularity, "line of sight too close to a celestial pole");
  }
  DirectionFrame f;
  f.e_rho = Vec3(cd * ca, cd * sa, sd);
  f.e_alpha = Vec3(-sa, ca, 0.0);
  f.e_delta = Vec3(-sd * ca, -sd * sa, cd);
  f.e_perp = Vec3(-ca, -sa, 0.0);
  return f;
}

inline DirectionFrame direction_frame(const SphericalDirection& dir) {
  return direction_frame(dir.alpha, dir.delta);
}

struct KeplerianElements {
  double a = 0.0;              // km
  double e = 0.0;
  double inclination = 0.0;    // rad
  double node = 0.0;           // rad, longitude of ascending node
  double perigee = 0.0;        // rad, argument of perigee
  double mean_anomaly = 0.0;   // rad
  Epoch epoch;
};

struct CartesianState {
  Vec3 r = Vec3::Zero();  // km
  Vec3 v = Vec3::Zero();  // km/s
  Epoch epoch;
};

inline double mean_motion(double a, double mu = kMuEarth) { return std::sqrt(mu / (a * a * a)); }

/// Solves E - e sin E = ell for the eccentric anomaly (elliptic, 0 <= e < 1).
inline double solve_kepler(double ell, double e) {
  if (!(e >= 0.0 && e < 1.0)) throw Error(ErrorKind::InvalidInput, "eccentricity outside [0,1)");
  const double m = wrap_pi(ell);
  const double base = ell - m;
  if (e == 0.0) return ell;

  auto residual = [&](double E) { return E - e * std::sin(E) - m; };
  double E = m + e * std::sin(m);
  for (int it = 0; it < 50; ++it) {
    const double f = residual(E);
    if (std::abs(f) < 1e-14) return base + E;
    const double step = f / (1.0 - e * std::cos(E));
    E -= step;
    if (std::abs(step) < 1e-15 && std::abs(residual(E)) < 1e-13) return base + E;
  }
  if (std::abs(residual(E)) < 1e-13) return base + E;

  // Bisection fallback; the residual is monotone on [-pi, pi].
  double lo = -kPi, hi = kPi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) > 0.0) hi = mid;
    else lo = mid;
    if (hi - lo < 1e-15) break;
  }
  E = 0.5 * (lo + hi);
  if (std::abs(residual(E)) >= 1e-13) {
    throw Error(ErrorKind::NonConvergence, "Kepler equation solver did not converge");
  }
  return base + E;
}

namespace detail {

inline Mat3 perifocal_to_inertial(double node, double inclination, double perigee) {
  const double cO = std::cos(node), sO = std::sin(node);
  const double ci = std::cos(inclination), si = std::sin(inclination);
  const double cw = std::cos(perigee), sw = std::sin(perigee);
  Mat3 m;
  m << cO * cw - sO * sw * ci, -cO * sw - sO * cw * ci, sO * si,
       sO * cw + cO * sw * ci, -sO * sw + cO * cw * ci, -cO * si,
       sw * si, cw * si, ci;
  return m;
}

}  // namespace detail

inline CartesianState elements_to_cartesian(const KeplerianElements& el, double mu = kMuEarth) {
  if (!(el.a > 0.0) || !(el.e >= 0.0 && el.e < 1.0)) {
    throw Error(ErrorKind::HyperbolicOrbit, "elements must describe a bound ellipse");
  }
  const double E = solve_kepler(el.mean_anomaly, el.e);
  const double cE = std::cos(E), sE = std::sin(E);
  const double n = mean_motion(el.a, mu);
  const double b = std::sqrt(1.0 - el.e * el.e);
  const double denom = 1.0 - el.e * cE;

  const Vec3 r_pf(el.a * (cE - el.e), el.a * b * sE, 0.0);
  const Vec3 v_pf(-el.a * n * sE / denom, el.a * n * b * cE / denom, 0.0);
  const Mat3 rot = detail::perifocal_to_inertial(el.node, el.inclination, el.perigee);
  return CartesianState{rot * r_pf, rot * v_pf, el.epoch};
}

inline KeplerianElements cartesian_to_elements(const CartesianState& s, double mu = kMuEarth) {
  const double r = s.r.norm();
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidInput, "zero position vector");
  const Vec3 h = s.r.cross(s.v);
  const double hn = h.norm();
  if (!(hn > 1e-12 * r * s.v.norm()) || hn == 0.0) {
    throw Error(ErrorKind::DegenerateAngularMomentum, "rectilinear state");
  }
  const double energy = 0.5 * s.v.squaredNorm() - mu / r;
  if (!(energy < 0.0)) throw Error(ErrorKind::HyperbolicOrbit, "non-negative two-body energy");

  KeplerianElements el;
  el.epoch = s.epoch;
  el.a = -mu / (2.0 * energy);
  const Vec3 ecc = ((s.v.squaredNorm() - mu / r) * s.r - s.r.dot(s.v) * s.v) / mu;
  el.e = ecc.norm();
  if (el.e >= 1.0) throw Error(ErrorKind::HyperbolicOrbit, "eccentricity >= 1");

  const Vec3 hhat = h / hn;
  el.inclination = std::atan2(std::hypot(hhat.x(), hhat.y()), hhat.z());

  const Vec3 node_vec(-h.y(), h.x(), 0.0);
  const double nn = node_vec.norm();
  Vec3 nhat;
  if (nn > 1e-12 * hn) {
    nhat = node_vec / nn;
    el.node = wrap_two_pi(std::atan2(nhat.y(), nhat.x()));
  } else {
    nhat = Vec3::UnitX();
    el.node = 0.0;
  }
  const Vec3 mhat = hhat.cross(nhat);

  Vec3 phat = nhat;
  if (el.e > 1e-12) {
    el.perigee = wrap_two_pi(std::atan2(ecc.dot(mhat), ecc.dot(nhat)));
    phat = ecc / el.e;
  } else {
    el.perigee = 0.0;
  }
  const Vec3 qhat = hhat.cross(phat);
  const double nu = std::atan2(s.r.dot(qhat), s.r.dot(phat));
  const double E = std::atan2(std::sqrt(1.0 - el.e * el.e) * std::sin(nu), el.e + std::cos(nu));
  el.mean_anomaly = wrap_two_pi(E - el.e * std::sin(E));
  return el;
}

/// Advances the mean anomaly by n*dt; the other elements are copied.
inline KeplerianElements propagate_kepler(const KeplerianElements& el, double dt, double mu = kMuEarth) {
  if (!(el.a > 0.0) || !(el.e >= 0.0 && el.e < 1.0)) {
    throw Error(ErrorKind::HyperbolicOrbit, "propagation requires an elliptic orbit");
  }
  KeplerianElements out = el;
  out.mean_anomaly = wrap_two_pi(el.mean_anomaly + mean_motion(el.a, mu) * dt);
  out.epoch = el.epoch.plus_seconds(dt);
  solve_kepler(out.mean_anomaly, out.e);  // surfaces NonConvergence early
  return out;
}

inline CartesianState propagate_state(const KeplerianElements& el, const Epoch& to, double mu = kMuEarth) {
  return elements_to_cartesian(propagate_kepler(el, to.seconds_since(el.epoch), mu), mu);
}

inline std::string describe(const KeplerianElements& el) {
  std::ostringstream os;
  os.precision(10);
  os << "a=" << el.a << " km e=" << el.e << " I=" << rad_to_deg(el.inclination)
     << " deg Node=" << rad_to_deg(el.node) << " deg omega=" << rad_to_deg(el.perigee)
     << " deg M=" << rad_to_deg(el.mean_anomaly) << " deg";
  return os.str();
}

}  // namespace debris_linker
