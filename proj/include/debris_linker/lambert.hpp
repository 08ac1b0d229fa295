#pragma once

// Elliptic multi-revolution Lambert equation: the four (beta, gamma) branches
// per revolution count, time of flight, residual, and classification of a
// transfer arc into its branch from the region bounded by arc and chord.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>

#include "debris_linker/core.hpp"

namespace debris_linker {

/// Branch of Lambert's equation:
///   I   (beta0, gamma0)          region holds neither focus
///   II  (beta0, -gamma0)         region holds the attracting focus only
///   III (2pi - beta0, -gamma0)   region holds both foci
///   IV  (2pi - beta0, gamma0)    region holds the empty focus only
enum class LambertCase { I, II, III, IV };

inline std::string_view to_string(LambertCase c) {
  switch (c) {
    case LambertCase::I: return "I";
    case LambertCase::II: return "II";
    case LambertCase::III: return "III";
    case LambertCase::IV: return "IV";
  }
  return "?";
}

inline constexpr LambertCase kAllLambertCases[] = {LambertCase::I, LambertCase::II, LambertCase::III,
                                                   LambertCase::IV};

struct LambertBranch {
  LambertCase case_id = LambertCase::I;
  int k = 0;  // complete revolutions

  friend bool operator==(const LambertBranch&, const LambertBranch&) = default;
};

/// +1 when beta = beta0, -1 when beta = 2pi - beta0.
inline double beta_sign(LambertCase c) { return (c == LambertCase::I || c == LambertCase::II) ? 1.0 : -1.0; }
/// +1 when gamma = gamma0, -1 when gamma = -gamma0.
inline double gamma_sign(LambertCase c) { return (c == LambertCase::I || c == LambertCase::IV) ? 1.0 : -1.0; }

struct LambertGeometry {
  double r1 = 0.0, r2 = 0.0, d = 0.0, a = 0.0;
  double beta0 = 0.0, gamma0 = 0.0;
};

/// beta0 = 2 asin sqrt((r+d)/4a), gamma0 = 2 asin sqrt((r-d)/4a).
inline std::pair<double, double> beta_gamma(double a, double r_sum, double d) {
  if (!(a > 0.0) || !(r_sum > 0.0) || !(d > 0.0)) {
    throw Error(ErrorKind::InfeasibleGeometry, "a, r1 + r2 and d must be positive");
  }
  constexpr double slack = 1e-12;
  if (r_sum < d * (1.0 - slack)) throw Error(ErrorKind::InfeasibleGeometry, "triangle inequality r1 + r2 >= d fails");
  if (r_sum + d > 4.0 * a * (1.0 + slack)) {
    throw Error(ErrorKind::InfeasibleGeometry, "ellipse condition 4a >= r1 + r2 + d fails");
  }
  const double sp = std::clamp((r_sum + d) / (4.0 * a), 0.0, 1.0);
  const double sm = std::clamp((r_sum - d) / (4.0 * a), 0.0, 1.0);
  return {2.0 * std::asin(std::sqrt(sp)), 2.0 * std::asin(std::sqrt(sm))};
}

inline LambertGeometry make_lambert_geometry(double r1, double r2, double d, double a) {
  LambertGeometry g{r1, r2, d, a, 0.0, 0.0};
  std::tie(g.beta0, g.gamma0) = beta_gamma(a, r1 + r2, d);
  return g;
}

/// (beta, gamma) of the branch.
inline std::pair<double, double> branch_angles(double beta0, double gamma0, LambertCase c) {
  const double beta = beta_sign(c) > 0.0 ? beta0 : kTwoPi - beta0;
  const double gamma = gamma_sign(c) * gamma0;
  return {beta, gamma};
}

/// beta - gamma - (sin beta - sin gamma) + 2 k pi for the branch, i.e. n * dt.
inline double lambert_mean_angle(double beta0, double gamma0, const LambertBranch& b) {
  const auto [beta, gamma] = branch_angles(beta0, gamma0, b.case_id);
  return beta - gamma - (std::sin(beta) - std::sin(gamma)) + kTwoPi * b.k;
}

inline double time_of_flight(const LambertGeometry& g, const LambertBranch& b, double mu = kMuEarth) {
  if (b.k < 0) throw Error(ErrorKind::InvalidInput, "revolution count must be non-negative");
  return lambert_mean_angle(g.beta0, g.gamma0, b) / mean_motion(g.a, mu);
}

/// L = beta - gamma - (sin beta - sin gamma) + 2 k pi - n dt, rad.
inline double lambert_residual(const LambertGeometry& g, const LambertBranch& b, double dt, double mu = kMuEarth) {
  return lambert_mean_angle(g.beta0, g.gamma0, b) - mean_motion(g.a, mu) * dt;
}

/// Classifies the arc travelled from r1 to r2 (in the sense of motion given by
/// the angular momentum c) on the ellipse with semimajor axis a and
/// eccentricity vector e_vec; k full revolutions are added on top.
inline LambertBranch classify_branch(const Vec3& r1, const Vec3& r2, const Vec3& c, double a, const Vec3& e_vec,
                                     int k) {
  const double cn = c.norm();
  if (!(cn > 0.0)) throw Error(ErrorKind::InvalidInput, "zero angular momentum");
  if (!(a > 0.0)) throw Error(ErrorKind::InvalidInput, "non-positive semimajor axis");
  const double e = e_vec.norm();
  if (!(e < 1.0)) throw Error(ErrorKind::InvalidInput, "orbit is not elliptic");
  const Vec3 h = c / cn;
  const Vec3 p = e > 1e-12 ? Vec3(e_vec / e) : Vec3((r1 - r1.dot(h) * h).normalized());
  const Vec3 qv = h.cross(p);
  const double b_axis = a * std::sqrt(1.0 - e * e);

  auto ecc_anomaly = [&](const Vec3& r) {
    const double nu = std::atan2(r.dot(qv), r.dot(p));
    return std::atan2(std::sqrt(1.0 - e * e) * std::sin(nu), e + std::cos(nu));
  };
  const double E1 = ecc_anomaly(r1);
  const double sweep = wrap_two_pi(ecc_anomaly(r2) - E1);
  if (sweep < 1e-9 || sweep > kTwoPi - 1e-9) {
    throw Error(ErrorKind::AmbiguousRegion, "arc spans a whole number of revolutions");
  }

  // Plane coordinates centred on the attracting focus.
  auto plane = [&](double E) { return Eigen::Vector2d(a * (std::cos(E) - e), b_axis * std::sin(E)); };
  const Eigen::Vector2d P1 = plane(E1), P2 = plane(E1 + sweep), mid = plane(E1 + 0.5 * sweep);
  const Eigen::Vector2d chord = P2 - P1;
  const double chord_len = chord.norm();
  auto side = [&](const Eigen::Vector2d& x) {
    const Eigen::Vector2d rel = x - P1;
    return (chord.x() * rel.y() - chord.y() * rel.x()) / chord_len;  // signed distance
  };
  const double arc_side = side(mid);
  auto inside = [&](const Eigen::Vector2d& focus) {
    const double s = side(focus);
    if (std::abs(s) < 1e-9 * chord_len) {
      throw Error(ErrorKind::AmbiguousRegion, "chord passes through a focus");
    }
    return (s > 0.0) == (arc_side > 0.0);
  };
  const bool has_attracting = inside(Eigen::Vector2d(0.0, 0.0));
  const bool has_empty = e > 1e-12 ? inside(Eigen::Vector2d(-2.0 * a * e, 0.0)) : has_attracting;

  LambertBranch out;
  out.k = k;
  if (!has_attracting && !has_empty) out.case_id = LambertCase::I;
  else if (has_attracting && !has_empty) out.case_id = LambertCase::II;
  else if (has_attracting && has_empty) out.case_id = LambertCase::III;
  else out.case_id = LambertCase::IV;
  return out;
}

}  // namespace debris_linker
