#pragma once

// Two-body first integrals (angular momentum, energy, Laplace-Lenz vector) and
// the line-of-sight projection of the equation of motion, written in the
// attributable variables (rho, alpha, delta, rho_dot) plus the transverse
// velocity components (xi, zeta).

#include <array>
#include <cmath>

#include "debris_linker/core.hpp"
#include "debris_linker/radar_sim.hpp"

namespace debris_linker {

/// Angle corrections (d_alpha1, d_delta1, d_alpha2, d_delta2), rad.
struct DeltaCorrections {
  double d_alpha1 = 0.0, d_delta1 = 0.0, d_alpha2 = 0.0, d_delta2 = 0.0;

  static constexpr double kGuardBand = 0.1;

  Vec4 as_vector() const { return {d_alpha1, d_delta1, d_alpha2, d_delta2}; }
  static DeltaCorrections from_vector(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
  bool within_guard_band() const { return as_vector().cwiseAbs().maxCoeff() < kGuardBand; }
};

/// Transverse topocentric velocity components (xi1, zeta1, xi2, zeta2), km/s.
struct UnknownsX {
  double xi1 = 0.0, zeta1 = 0.0, xi2 = 0.0, zeta2 = 0.0;

  Vec4 as_vector() const { return {xi1, zeta1, xi2, zeta2}; }
  static UnknownsX from_vector(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
};

/// Everything that depends on one attributable and its angle corrections but
/// not on (xi, zeta).
struct EpochGeometry {
  Epoch t_bar;
  double alpha = 0.0, delta = 0.0;
  double rho = 0.0, rho_dot = 0.0, rho_ddot = 0.0;
  double mu = kMuEarth;
  DirectionFrame frame;
  ObserverState observer;
  Vec3 r = Vec3::Zero();
  double r_norm = 0.0;
  Vec3 A = Vec3::Zero();  // r x e_alpha
  Vec3 B = Vec3::Zero();  // r x e_delta
  Vec3 C = Vec3::Zero();  // r x q_dot + rho_dot q x e_rho
  Vec3 w = Vec3::Zero();  // rho_dot e_rho + q_dot
  double q_alpha = 0.0, q_delta = 0.0, qdot_alpha = 0.0, qdot_delta = 0.0;
  double radial_accel = 0.0;  // rho_ddot + q_ddot.e_rho + mu (r.e_rho)/|r|^3 = rho eta^2
  double eta_sq = 0.0;        // 1/s^2
  double D = 0.0;             // km^2/s^2
  double frak_D = 0.0;        // 2D - rho^2 eta^2 = |w|^2 - 2 mu/|r|
};

inline EpochGeometry epoch_geometry(const Attributable& att, double d_alpha, double d_delta, double mu = kMuEarth) {
  if (!(att.rho > 0.0)) throw Error(ErrorKind::InvalidInput, "attributable range must be positive");
  EpochGeometry g;
  g.t_bar = att.t_bar;
  g.alpha = att.alpha_bar + d_alpha;
  g.delta = att.delta_bar + d_delta;
  g.rho = att.rho;
  g.rho_dot = att.rho_dot;
  g.rho_ddot = att.rho_ddot;
  g.mu = mu;
  g.frame = direction_frame(g.alpha, g.delta);
  g.observer = att.observer;

  const Vec3& q = g.observer.q;
  const Vec3& qd = g.observer.q_dot;
  const Vec3& e = g.frame.e_rho;
  g.r = q + g.rho * e;
  g.r_norm = g.r.norm();
  g.A = g.r.cross(g.frame.e_alpha);
  g.B = g.r.cross(g.frame.e_delta);
  g.C = g.r.cross(qd) + g.rho_dot * q.cross(e);
  g.w = g.rho_dot * e + qd;
  g.q_alpha = q.dot(g.frame.e_alpha);
  g.q_delta = q.dot(g.frame.e_delta);
  g.qdot_alpha = qd.dot(g.frame.e_alpha);
  g.qdot_delta = qd.dot(g.frame.e_delta);

  const double r3 = g.r_norm * g.r_norm * g.r_norm;
  g.radial_accel = g.rho_ddot + g.observer.q_ddot.dot(e) + mu * g.r.dot(e) / r3;
  g.eta_sq = g.radial_accel / g.rho;
  if (g.eta_sq < 0.0) {
    throw Error(ErrorKind::NegativeEtaSquared,
                "radial equation gives eta^2 = " + std::to_string(g.eta_sq) + " 1/s^2");
  }
  g.D = 0.5 * (g.rho * g.rho * g.eta_sq + g.w.squaredNorm()) - mu / g.r_norm;
  g.frak_D = g.w.squaredNorm() - 2.0 * mu / g.r_norm;
  return g;
}

inline Vec3 angular_momentum(const EpochGeometry& g, double xi, double zeta) { return g.A * xi + g.B * zeta + g.C; }

/// Geocentric velocity xi e_alpha + zeta e_delta + rho_dot e_rho + q_dot.
inline Vec3 velocity(const EpochGeometry& g, double xi, double zeta) {
  return xi * g.frame.e_alpha + zeta * g.frame.e_delta + g.w;
}

inline double energy(const EpochGeometry& g, double xi, double zeta) {
  const double v2 = xi * xi + zeta * zeta + 2.0 * g.qdot_alpha * xi + 2.0 * g.qdot_delta * zeta + g.w.squaredNorm();
  return 0.5 * v2 - g.mu / g.r_norm;
}

/// Laplace-Lenz (eccentricity) vector, dimensionless.
inline Vec3 laplace_lenz(const EpochGeometry& g, double xi, double zeta) {
  const Vec3 v = velocity(g, xi, zeta);
  return ((v.squaredNorm() - g.mu / g.r_norm) * g.r - v.dot(g.r) * v) / g.mu;
}

/// v2 = e_rho2 x q2; orthogonal to r2 by construction.
inline Vec3 lenz_projection_axis(const EpochGeometry& g2) { return g2.frame.e_rho.cross(g2.observer.q); }

/// (L1 - L2).v2, km. The epoch-2 term uses r2.v2 = 0, leaving
/// L2.v2 = -(r2_dot.r2)(r2_dot.v2)/mu.
inline double laplace_lenz_diff_dot_v2(const EpochGeometry& g1, const EpochGeometry& g2, const UnknownsX& x) {
  const Vec3 v2 = lenz_projection_axis(g2);
  const Vec3 rd2 = velocity(g2, x.xi2, x.zeta2);
  const double l2_v2 = -(rd2.dot(g2.r)) * (rd2.dot(v2)) / g2.mu;
  return laplace_lenz(g1, x.xi1, x.zeta1).dot(v2) - l2_v2;
}

/// Line-of-sight residual of the equation of motion, km/s^2, with
/// eta^2 = (xi^2 + zeta^2)/rho^2.
inline double kcal(const EpochGeometry& g, double xi, double zeta) {
  return g.radial_accel - (xi * xi + zeta * zeta) / g.rho;
}

inline CartesianState state_from(const EpochGeometry& g, double xi, double zeta) {
  return CartesianState{g.r, velocity(g, xi, zeta), g.t_bar};
}

}  // namespace debris_linker
