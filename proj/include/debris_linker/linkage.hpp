#pragma once

// Linkage of two radar attributables by infinitesimal angle corrections.
//
// The eight unknowns (X, Delta) are split: X = (xi1, zeta1, xi2, zeta2) is
// eliminated through either the linear system M X = V (angular momentum plus
// the combination 2E + rho K at both epochs) or the quadratic system
// N Y = W, F2 zeta2^2 + F1 zeta2 + F0 = 0 (angular momentum plus equal
// energy). The remaining residual
//   G(Delta) = (K1, K2, (L1 - L2).v2, Lambert)
// is driven to zero by Newton-Raphson from Delta = 0 with an analytic Jacobian
// obtained through the unit vectors E = (e_rho, e_alpha, e_delta) at both epochs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "debris_linker/core.hpp"
#include "debris_linker/lambert.hpp"
#include "debris_linker/log.hpp"
#include "debris_linker/radar_sim.hpp"
#include "debris_linker/twobody_integrals.hpp"

namespace debris_linker {

enum class XMethod { Linear, Quadratic };

inline std::string_view to_string(XMethod m) { return m == XMethod::Linear ? "linear" : "quadratic"; }

// ---------------------------------------------------------------------------
// Small determinants by cofactor expansion.

inline double det3(const Mat3& m) {
  return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
         m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline double det4(const Mat4& m) {
  double det = 0.0;
  for (int j = 0; j < 4; ++j) {
    Mat3 minor;
    for (int r = 1; r < 4; ++r) {
      int cc = 0;
      for (int c = 0; c < 4; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += ((j % 2 == 0) ? 1.0 : -1.0) * m(0, j) * det3(minor);
  }
  return det;
}

template <typename Mat, typename Vec>
Mat with_column(Mat m, int col, const Vec& v) {
  m.col(col) = v;
  return m;
}

/// d|A|/dx = sum_h |A with column h replaced by dA/dx column h|.
template <typename Mat, typename DetFn>
double det_derivative(const Mat& a, const Mat& da, DetFn det) {
  double sum = 0.0;
  for (int h = 0; h < a.cols(); ++h) {
    if (da.col(h).isZero(0.0)) continue;
    sum += det(with_column(a, h, da.col(h)));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Linear reduction.

struct LinearSystemMV {
  Mat4 M = Mat4::Zero();
  Vec4 V = Vec4::Zero();
};

inline LinearSystemMV assemble_linear(const EpochGeometry& g1, const EpochGeometry& g2) {
  LinearSystemMV s;
  s.M.block<3, 1>(0, 0) = g1.A;
  s.M.block<3, 1>(0, 1) = g1.B;
  s.M.block<3, 1>(0, 2) = -g2.A;
  s.M.block<3, 1>(0, 3) = -g2.B;
  s.M.row(3) << g1.qdot_alpha, g1.qdot_delta, -g2.qdot_alpha, -g2.qdot_delta;
  s.V.head<3>() = g2.C - g1.C;
  s.V(3) = g2.D - g1.D;
  return s;
}

inline constexpr double kDeterminantEpsilon = 1e-12;

/// Hadamard bound on |det|: product of the row norms.
template <typename Mat>
double hadamard_scale(const Mat& m) {
  double p = 1.0;
  for (int r = 0; r < m.rows(); ++r) p *= m.row(r).norm();
  return p;
}

/// Cramer's rule: X_k = |M_k| / |M|.
inline UnknownsX solve_X_linear(const LinearSystemMV& sys) {
  const double det = det4(sys.M);
  if (!(std::abs(det) > kDeterminantEpsilon * hadamard_scale(sys.M))) {
    throw Error(ErrorKind::SingularGeometry, "linear system M is singular");
  }
  Vec4 x;
  for (int k = 0; k < 4; ++k) x(k) = det4(with_column(sys.M, k, sys.V)) / det;
  return UnknownsX::from_vector(x);
}

// ---------------------------------------------------------------------------
// Quadratic reduction.

struct QuadraticSystemNW {
  Mat3 N = Mat3::Zero();
  Vec3 W0 = Vec3::Zero();
  Vec3 W1 = Vec3::Zero();
  double det_N = 0.0;
  Vec3 minors0 = Vec3::Zero();  // |N_k^(0)|
  Vec3 minors1 = Vec3::Zero();  // |N_k^(1)|
  double qdot_alpha1 = 0.0, qdot_delta1 = 0.0, qdot_alpha2 = 0.0, qdot_delta2 = 0.0;
  double frak_D1 = 0.0, frak_D2 = 0.0;
  double F2 = 0.0, F1 = 0.0, F0 = 0.0;
};

namespace detail {

struct QuadraticCoefficients {
  double F2, F1, F0;
};

inline QuadraticCoefficients quadratic_coefficients(double det_n, const Vec3& m0, const Vec3& m1, double qa1,
                                                    double qd1, double qa2, double qd2, double fd1, double fd2) {
  const double n2 = det_n * det_n;
  QuadraticCoefficients c{};
  c.F2 = (m1(0) * m1(0) + m1(1) * m1(1) - m1(2) * m1(2)) / n2 - 1.0;
  c.F1 = 2.0 * (m1(0) * m0(0) + m1(1) * m0(1) - m1(2) * m0(2)) / n2 +
         2.0 * (qa1 * m1(0) + qd1 * m1(1) - qa2 * m1(2) - qd2 * det_n) / det_n;
  c.F0 = (m0(0) * m0(0) + m0(1) * m0(1) - m0(2) * m0(2)) / n2 +
         2.0 * (qa1 * m0(0) + qd1 * m0(1) - qa2 * m0(2)) / det_n + fd1 - fd2;
  return c;
}

}  // namespace detail

inline QuadraticSystemNW assemble_quadratic(const EpochGeometry& g1, const EpochGeometry& g2) {
  QuadraticSystemNW s;
  s.N.col(0) = g1.A;
  s.N.col(1) = g1.B;
  s.N.col(2) = -g2.A;
  s.W1 = g2.B;
  s.W0 = g2.C - g1.C;
  s.det_N = det3(s.N);
  if (!(std::abs(s.det_N) > kDeterminantEpsilon * hadamard_scale(s.N))) {
    throw Error(ErrorKind::SingularGeometry, "angular momentum system N is singular");
  }
  for (int k = 0; k < 3; ++k) {
    s.minors0(k) = det3(with_column(s.N, k, s.W0));
    s.minors1(k) = det3(with_column(s.N, k, s.W1));
  }
  s.qdot_alpha1 = g1.qdot_alpha;
  s.qdot_delta1 = g1.qdot_delta;
  s.qdot_alpha2 = g2.qdot_alpha;
  s.qdot_delta2 = g2.qdot_delta;
  s.frak_D1 = g1.frak_D;
  s.frak_D2 = g2.frak_D;
  const auto c = detail::quadratic_coefficients(s.det_N, s.minors0, s.minors1, s.qdot_alpha1, s.qdot_delta1,
                                                s.qdot_alpha2, s.qdot_delta2, s.frak_D1, s.frak_D2);
  s.F2 = c.F2;
  s.F1 = c.F1;
  s.F0 = c.F0;
  return s;
}

/// (xi1, zeta1, xi2) from N Y = zeta2 W1 + W0, completed with zeta2.
inline UnknownsX x_from_zeta2(const QuadraticSystemNW& sys, double zeta2) {
  const Vec3 y = (zeta2 * sys.minors1 + sys.minors0) / sys.det_N;
  return UnknownsX{y(0), y(1), y(2), zeta2};
}

/// Real roots zeta2 of F2 z^2 + F1 z + F0 = 0 in order of increasing |zeta2|.
inline std::vector<double> energy_roots(const QuadraticSystemNW& sys) {
  const double scale = std::max({std::abs(sys.F2), 1.0});
  if (std::abs(sys.F2) < 1e-14 * scale) {
    if (std::abs(sys.F1) < 1e-300) throw Error(ErrorKind::DegenerateQuadratic, "energy equation is degenerate");
    log::debug("energy_roots: F2 vanishes, using the linear root");
    return {-sys.F0 / sys.F1};
  }
  const double disc = sys.F1 * sys.F1 - 4.0 * sys.F2 * sys.F0;
  if (disc < 0.0) throw Error(ErrorKind::NoRealRoot, "energy equation has no real root");
  const double sq = std::sqrt(disc);
  const double qq = -0.5 * (sys.F1 + (sys.F1 >= 0.0 ? sq : -sq));
  std::vector<double> roots;
  if (qq != 0.0) {
    roots = {qq / sys.F2, sys.F0 / qq};
  } else {
    roots = {0.0, 0.0};
  }
  std::sort(roots.begin(), roots.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  return roots;
}

inline std::vector<UnknownsX> solve_X_quadratic(const QuadraticSystemNW& sys) {
  std::vector<UnknownsX> out;
  for (double z : energy_roots(sys)) out.push_back(x_from_zeta2(sys, z));
  return out;
}

// ---------------------------------------------------------------------------
// Derivatives through E = (e_rho1, e_alpha1, e_delta1, e_rho2, e_alpha2, e_delta2).

using RowE = Eigen::Matrix<double, 1, 18>;
using Mat4x18 = Eigen::Matrix<double, 4, 18>;
using Mat18x4 = Eigen::Matrix<double, 18, 4>;

enum class FrameBlock { Rho = 0, Alpha = 1, Delta = 2 };

inline constexpr int e_index(int epoch, FrameBlock block) { return 9 * epoch + 3 * static_cast<int>(block); }

/// dE/dDelta: per epoch [cos(delta) e_alpha, e_delta; e_perp, 0; -sin(delta) e_alpha, -e_rho].
inline Mat18x4 frame_jacobian(const EpochGeometry& g1, const EpochGeometry& g2) {
  Mat18x4 j = Mat18x4::Zero();
  const std::array<const EpochGeometry*, 2> gs{&g1, &g2};
  for (int ep = 0; ep < 2; ++ep) {
    const auto& f = gs[ep]->frame;
    const double cd = std::cos(gs[ep]->delta), sd = std::sin(gs[ep]->delta);
    const int ca = 2 * ep, cdl = 2 * ep + 1;
    j.block<3, 1>(e_index(ep, FrameBlock::Rho), ca) = cd * f.e_alpha;
    j.block<3, 1>(e_index(ep, FrameBlock::Alpha), ca) = f.e_perp;
    j.block<3, 1>(e_index(ep, FrameBlock::Delta), ca) = -sd * f.e_alpha;
    j.block<3, 1>(e_index(ep, FrameBlock::Rho), cdl) = f.e_delta;
    j.block<3, 1>(e_index(ep, FrameBlock::Delta), cdl) = -f.e_rho;
  }
  return j;
}

namespace detail {

/// d(rho eta^2)/d e_rho from the radial equation K = 0.
inline Vec3 radial_accel_gradient(const EpochGeometry& g) {
  const double r = g.r_norm;
  const double r3 = r * r * r;
  const Vec3& q = g.observer.q;
  return g.observer.q_ddot + g.mu * q / r3 * (1.0 - 3.0 * g.rho * g.r.dot(g.frame.e_rho) / (r * r));
}

/// First-order change of the epoch quantities along one unit direction of E.
struct EpochVariation {
  Vec3 dA = Vec3::Zero(), dB = Vec3::Zero(), dC = Vec3::Zero();
  double d_qdot_alpha = 0.0, d_qdot_delta = 0.0, dD = 0.0, d_frak_D = 0.0;
};

inline EpochVariation epoch_variation(const EpochGeometry& g, FrameBlock block, const Vec3& u) {
  EpochVariation v;
  const Vec3& q = g.observer.q;
  const Vec3& qd = g.observer.q_dot;
  const double r3 = g.r_norm * g.r_norm * g.r_norm;
  switch (block) {
    case FrameBlock::Rho: {
      const Vec3 dr = g.rho * u;
      v.dA = dr.cross(g.frame.e_alpha);
      v.dB = dr.cross(g.frame.e_delta);
      v.dC = dr.cross(qd) + g.rho_dot * q.cross(u);
      const Vec3 grad_w2_term = g.rho_dot * qd + g.mu * g.rho * q / r3;  // half gradient of |w|^2 - 2mu/r
      v.dD = (0.5 * g.rho * radial_accel_gradient(g) + grad_w2_term).dot(u);
      v.d_frak_D = 2.0 * grad_w2_term.dot(u);
      break;
    }
    case FrameBlock::Alpha:
      v.dA = g.r.cross(u);
      v.d_qdot_alpha = qd.dot(u);
      break;
    case FrameBlock::Delta:
      v.dB = g.r.cross(u);
      v.d_qdot_delta = qd.dot(u);
      break;
  }
  return v;
}

inline void for_each_direction(const auto& fn) {
  for (int ep = 0; ep < 2; ++ep) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        fn(ep, static_cast<FrameBlock>(b), Vec3::Unit(c), 9 * ep + 3 * b + c);
      }
    }
  }
}

}  // namespace detail

/// dX/dE for the linear reduction (determinant-derivative formula).
inline Mat4x18 linear_x_gradient(const EpochGeometry& g1, const EpochGeometry& g2, const LinearSystemMV& sys,
                                 const UnknownsX& x) {
  const double det = det4(sys.M);
  const Vec4 xv = x.as_vector();
  Mat4x18 out = Mat4x18::Zero();
  const std::array<const EpochGeometry*, 2> gs{&g1, &g2};
  auto det_fn = [](const Mat4& m) { return det4(m); };
  detail::for_each_direction([&](int ep, FrameBlock block, const Vec3& u, int idx) {
    const auto var = detail::epoch_variation(*gs[ep], block, u);
    Mat4 dM = Mat4::Zero();
    Vec4 dV = Vec4::Zero();
    const double sign = ep == 0 ? 1.0 : -1.0;
    dM.block<3, 1>(0, 2 * ep) = sign * var.dA;
    dM.block<3, 1>(0, 2 * ep + 1) = sign * var.dB;
    dM(3, 2 * ep) = sign * var.d_qdot_alpha;
    dM(3, 2 * ep + 1) = sign * var.d_qdot_delta;
    dV.head<3>() = -sign * var.dC;
    dV(3) = -sign * var.dD;
    const double d_det = det_derivative(sys.M, dM, det_fn);
    for (int k = 0; k < 4; ++k) {
      const Mat4 mk = with_column(sys.M, k, sys.V);
      const Mat4 dmk = with_column(dM, k, dV);
      const double d_minor = det_derivative(mk, dmk, det_fn);
      out(k, idx) = (d_minor - xv(k) * d_det) / det;
    }
  });
  return out;
}

/// dX/dE for the quadratic reduction: implicit differentiation of the energy
/// equation for zeta2, then Cramer on N for (xi1, zeta1, xi2).
inline Mat4x18 quadratic_x_gradient(const EpochGeometry& g1, const EpochGeometry& g2, const QuadraticSystemNW& sys,
                                    const UnknownsX& x) {
  const double z = x.zeta2;
  const double dFdz = 2.0 * sys.F2 * z + sys.F1;
  if (std::abs(dFdz) < 1e-300) throw Error(ErrorKind::JacobianSingular, "double root of the energy equation");
  const double n = sys.det_N;
  const Vec3 m0 = sys.minors0, m1 = sys.minors1;
  const Vec3 y(x.xi1, x.zeta1, x.xi2);
  Mat4x18 out = Mat4x18::Zero();
  const std::array<const EpochGeometry*, 2> gs{&g1, &g2};
  auto det_fn = [](const Mat3& m) { return det3(m); };

  detail::for_each_direction([&](int ep, FrameBlock block, const Vec3& u, int idx) {
    const auto var = detail::epoch_variation(*gs[ep], block, u);
    Mat3 dN = Mat3::Zero();
    Vec3 dW0 = Vec3::Zero(), dW1 = Vec3::Zero();
    double dqa1 = 0, dqd1 = 0, dqa2 = 0, dqd2 = 0, dfd1 = 0, dfd2 = 0;
    if (ep == 0) {
      dN.col(0) = var.dA;
      dN.col(1) = var.dB;
      dW0 = -var.dC;
      dqa1 = var.d_qdot_alpha;
      dqd1 = var.d_qdot_delta;
      dfd1 = var.d_frak_D;
    } else {
      dN.col(2) = -var.dA;
      dW1 = var.dB;
      dW0 = var.dC;
      dqa2 = var.d_qdot_alpha;
      dqd2 = var.d_qdot_delta;
      dfd2 = var.d_frak_D;
    }
    const double dn = det_derivative(sys.N, dN, det_fn);
    Vec3 dm0, dm1;
    for (int k = 0; k < 3; ++k) {
      dm0(k) = det_derivative(with_column(sys.N, k, sys.W0), with_column(dN, k, dW0), det_fn);
      dm1(k) = det_derivative(with_column(sys.N, k, sys.W1), with_column(dN, k, dW1), det_fn);
    }
    const double n2 = n * n, n3 = n2 * n;
    const double s11 = m1(0) * m1(0) + m1(1) * m1(1) - m1(2) * m1(2);
    const double s10 = m1(0) * m0(0) + m1(1) * m0(1) - m1(2) * m0(2);
    const double s00 = m0(0) * m0(0) + m0(1) * m0(1) - m0(2) * m0(2);
    const double d_s11 = 2.0 * (m1(0) * dm1(0) + m1(1) * dm1(1) - m1(2) * dm1(2));
    const double d_s10 = dm1(0) * m0(0) + m1(0) * dm0(0) + dm1(1) * m0(1) + m1(1) * dm0(1) -
                         dm1(2) * m0(2) - m1(2) * dm0(2);
    const double d_s00 = 2.0 * (m0(0) * dm0(0) + m0(1) * dm0(1) - m0(2) * dm0(2));
    const double t1 = sys.qdot_alpha1 * m1(0) + sys.qdot_delta1 * m1(1) - sys.qdot_alpha2 * m1(2);
    const double t0 = sys.qdot_alpha1 * m0(0) + sys.qdot_delta1 * m0(1) - sys.qdot_alpha2 * m0(2);
    const double d_t1 = dqa1 * m1(0) + sys.qdot_alpha1 * dm1(0) + dqd1 * m1(1) + sys.qdot_delta1 * dm1(1) -
                        dqa2 * m1(2) - sys.qdot_alpha2 * dm1(2);
    const double d_t0 = dqa1 * m0(0) + sys.qdot_alpha1 * dm0(0) + dqd1 * m0(1) + sys.qdot_delta1 * dm0(1) -
                        dqa2 * m0(2) - sys.qdot_alpha2 * dm0(2);

    const double dF2 = d_s11 / n2 - 2.0 * s11 * dn / n3;
    const double dF1 = 2.0 * (d_s10 / n2 - 2.0 * s10 * dn / n3) + 2.0 * (d_t1 / n - t1 * dn / n2) - 2.0 * dqd2;
    const double dF0 = d_s00 / n2 - 2.0 * s00 * dn / n3 + 2.0 * (d_t0 / n - t0 * dn / n2) + dfd1 - dfd2;

    const double dz = -(dF2 * z * z + dF1 * z + dF0) / dFdz;
    for (int k = 0; k < 3; ++k) {
      out(k, idx) = (m1(k) * dz + z * dm1(k) + dm0(k)) / n - y(k) * dn / n;
    }
    out(3, idx) = dz;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reduced residual.

struct ResidualScales {
  Vec4 s = Vec4::Ones();
};

/// Characteristic sizes of the G components: mu/rho_bar^2 for both radial
/// residuals, |q2| for (L1 - L2).v2 (km, L dimensionless), 2 pi for Lambert.
inline ResidualScales residual_scales(const Attributable& a1, const Attributable& a2, double mu) {
  const double rho_bar = 0.5 * (a1.rho + a2.rho);
  ResidualScales sc;
  sc.s << mu / (rho_bar * rho_bar), mu / (rho_bar * rho_bar), a2.observer.q.norm(), kTwoPi;
  return sc;
}

struct ReducedResidual {
  DeltaCorrections delta;
  UnknownsX X;
  Vec4 G = Vec4::Zero();
  Mat4 J = Mat4::Zero();
  Mat4 dG_dX = Mat4::Zero();
  Mat4x18 dG_dE = Mat4x18::Zero();
  Mat4x18 dX_dE = Mat4x18::Zero();
  double energy1 = 0.0, energy2 = 0.0;
  bool lambert_clamped = false;
  int root_index = -1;  // quadratic root picked (0: smaller |zeta2|)
  std::optional<EpochGeometry> g1, g2;
};

/// Which quadratic root to follow: an explicit index at the first evaluation,
/// then the root whose zeta2 is closest to the previous iterate.
struct RootSelector {
  int index = 0;
  std::optional<double> previous_zeta2;
};

namespace detail {

struct LambertTerms {
  double value = 0.0;
  RowE dE = RowE::Zero();
  Eigen::RowVector4d dX = Eigen::RowVector4d::Zero();
  bool clamped = false;
};

inline LambertTerms lambert_terms(const EpochGeometry& g1, const EpochGeometry& g2, const UnknownsX& x,
                                  const LambertBranch& branch, bool with_gradient) {
  const double mu = g1.mu;
  const double dt = g2.t_bar.seconds_since(g1.t_bar);
  const double e1 = energy(g1, x.xi1, x.zeta1);
  if (!(e1 < 0.0)) throw Error(ErrorKind::HyperbolicOrbit, "non-negative energy at the first epoch");
  const double r1 = g1.r_norm, r2 = g2.r_norm;
  const Vec3 chord = g1.r - g2.r;
  const double d = chord.norm();
  const double n = std::pow(-2.0 * e1, 1.5) / mu;

  constexpr double kMaxGamma = 1.0 - 1e-12;
  LambertTerms out;
  double gp = -(r1 + r2 + d) * e1 / (2.0 * mu);
  double gm = -(r1 + r2 - d) * e1 / (2.0 * mu);
  bool gp_clamped = false, gm_clamped = false;
  if (gp > kMaxGamma || gp < 0.0) {
    gp = std::clamp(gp, 0.0, kMaxGamma);
    gp_clamped = true;
  }
  if (gm > kMaxGamma || gm < 0.0) {
    gm = std::clamp(gm, 0.0, kMaxGamma);
    gm_clamped = true;
  }
  out.clamped = gp_clamped || gm_clamped;
  const double beta0 = 2.0 * std::asin(std::sqrt(gp));
  const double gamma0 = 2.0 * std::asin(std::sqrt(gm));
  out.value = lambert_mean_angle(beta0, gamma0, branch) - n * dt;
  if (!with_gradient) return out;

  const double sb = beta_sign(branch.case_id), sg = gamma_sign(branch.case_id);
  const double f_beta = gp_clamped ? 0.0 : sb * 2.0 * std::sqrt(gp / (1.0 - gp));
  const double f_gamma = gm_clamped ? 0.0 : sg * 2.0 * std::sqrt(gm / (1.0 - gm));
  const double dn_de1 = -3.0 * std::sqrt(-2.0 * e1) / mu;
  const double dgp_de1 = -(r1 + r2 + d) / (2.0 * mu);
  const double dgm_de1 = -(r1 + r2 - d) / (2.0 * mu);
  const double dg_dlen = -e1 / (2.0 * mu);  // dGamma/d(r1 + r2 +- d)
  const double dL_de1 = f_beta * dgp_de1 - f_gamma * dgm_de1 - dt * dn_de1;

  // dE1/dX and dE1/dE (first epoch only)
  out.dX << dL_de1 * (x.xi1 + g1.qdot_alpha), dL_de1 * (x.zeta1 + g1.qdot_delta), 0.0, 0.0;
  const Vec3& q1 = g1.observer.q;
  const Vec3& qd1 = g1.observer.q_dot;
  const Vec3& q2 = g2.observer.q;
  const double r1_3 = r1 * r1 * r1;
  out.dE.segment<3>(e_index(0, FrameBlock::Rho)) =
      dL_de1 * (g1.rho_dot * qd1 + mu * g1.rho * q1 / r1_3).transpose();
  out.dE.segment<3>(e_index(0, FrameBlock::Alpha)) = dL_de1 * x.xi1 * qd1.transpose();
  out.dE.segment<3>(e_index(0, FrameBlock::Delta)) = dL_de1 * x.zeta1 * qd1.transpose();

  // Geometry: r1, r2, d depend on e_rho1, e_rho2 only.
  const Vec3 dr1 = g1.rho * q1 / r1;
  const Vec3 dr2 = g2.rho * q2 / r2;
  const Vec3 dd1 = g1.rho * (q1 - g2.r) / d;
  const Vec3 dd2 = g2.rho * (q2 - g1.r) / d;
  const double c_plus = f_beta * dg_dlen, c_minus = f_gamma * dg_dlen;
  out.dE.segment<3>(e_index(0, FrameBlock::Rho)) +=
      (c_plus * (dr1 + dd1) - c_minus * (dr1 - dd1)).transpose();
  out.dE.segment<3>(e_index(1, FrameBlock::Rho)) +=
      (c_plus * (dr2 + dd2) - c_minus * (dr2 - dd2)).transpose();
  return out;
}

}  // namespace detail

/// Evaluates G(X(Delta), Delta) and, on request, its Jacobian dG/dDelta.
inline ReducedResidual reduced_residual(const Attributable& att1, const Attributable& att2,
                                        const DeltaCorrections& delta, XMethod method, const LambertBranch& branch,
                                        RootSelector selector = {}, bool with_jacobian = true,
                                        double mu = kMuEarth) {
  ReducedResidual res;
  res.delta = delta;
  const EpochGeometry g1 = epoch_geometry(att1, delta.d_alpha1, delta.d_delta1, mu);
  const EpochGeometry g2 = epoch_geometry(att2, delta.d_alpha2, delta.d_delta2, mu);

  std::optional<LinearSystemMV> lin;
  std::optional<QuadraticSystemNW> quad;
  if (method == XMethod::Linear) {
    lin = assemble_linear(g1, g2);
    res.X = solve_X_linear(*lin);
  } else {
    quad = assemble_quadratic(g1, g2);
    const auto roots = energy_roots(*quad);
    int pick = std::min<int>(selector.index, static_cast<int>(roots.size()) - 1);
    if (selector.previous_zeta2) {
      pick = 0;
      for (int i = 1; i < static_cast<int>(roots.size()); ++i) {
        if (std::abs(roots[i] - *selector.previous_zeta2) < std::abs(roots[pick] - *selector.previous_zeta2)) {
          pick = i;
        }
      }
    }
    res.root_index = pick;
    res.X = x_from_zeta2(*quad, roots[static_cast<std::size_t>(pick)]);
  }
  const UnknownsX& x = res.X;
  res.energy1 = energy(g1, x.xi1, x.zeta1);
  res.energy2 = energy(g2, x.xi2, x.zeta2);

  const auto lam = detail::lambert_terms(g1, g2, x, branch, with_jacobian);
  res.lambert_clamped = lam.clamped;
  res.G << kcal(g1, x.xi1, x.zeta1), kcal(g2, x.xi2, x.zeta2), laplace_lenz_diff_dot_v2(g1, g2, x), lam.value;

  if (with_jacobian) {
    const double m = mu;
    const Vec3 v2 = lenz_projection_axis(g2);
    const Vec3 rd1 = velocity(g1, x.xi1, x.zeta1);
    const Vec3 rd2 = velocity(g2, x.xi2, x.zeta2);
    const Vec3 &q1 = g1.observer.q, &qd1 = g1.observer.q_dot;
    const Vec3 &q2 = g2.observer.q, &qd2 = g2.observer.q_dot;
    const double a1 = g1.r.dot(v2), b1 = rd1.dot(g1.r), c1 = rd1.dot(v2);
    const double p1 = rd1.squaredNorm() - m / g1.r_norm;
    const double b2 = rd2.dot(g2.r), c2 = rd2.dot(v2);

    // dG/dX
    res.dG_dX.row(0) << -2.0 * x.xi1 / g1.rho, -2.0 * x.zeta1 / g1.rho, 0.0, 0.0;
    res.dG_dX.row(1) << 0.0, 0.0, -2.0 * x.xi2 / g2.rho, -2.0 * x.zeta2 / g2.rho;
    res.dG_dX.row(2) << (2.0 * (x.xi1 + g1.qdot_alpha) * a1 - (g1.q_alpha * c1 + b1 * g1.frame.e_alpha.dot(v2))) / m,
        (2.0 * (x.zeta1 + g1.qdot_delta) * a1 - (g1.q_delta * c1 + b1 * g1.frame.e_delta.dot(v2))) / m,
        (g2.q_alpha * c2 + b2 * g2.frame.e_alpha.dot(v2)) / m, (g2.q_delta * c2 + b2 * g2.frame.e_delta.dot(v2)) / m;
    res.dG_dX.row(3) = lam.dX;

    // dG/dE
    res.dG_dE.setZero();
    res.dG_dE.block<1, 3>(0, e_index(0, FrameBlock::Rho)) = detail::radial_accel_gradient(g1).transpose();
    res.dG_dE.block<1, 3>(1, e_index(1, FrameBlock::Rho)) = detail::radial_accel_gradient(g2).transpose();

    const double r1_3 = std::pow(g1.r_norm, 3);
    const Vec3 d_erho1 = (a1 * (2.0 * g1.rho_dot * qd1 + m * g1.rho * q1 / r1_3) + p1 * g1.rho * v2 -
                          c1 * (g1.rho_dot * q1 + g1.rho * qd1) - b1 * g1.rho_dot * v2) /
                         m;
    const Vec3 common1 = (2.0 * a1 * qd1 - c1 * q1 - b1 * v2) / m;
    const Vec3 lenz1 = laplace_lenz(g1, x.xi1, x.zeta1);
    const Vec3 d_erho2 = -lenz1.cross(q2) + ((g2.rho_dot * q2 + g2.rho * qd2) * c2 + b2 * q2.cross(qd2)) / m;
    const Vec3 d_ealpha2 = (x.xi2 * c2 + x.zeta2 * b2) * q2 / m;
    const Vec3 d_edelta2 = (x.zeta2 * c2 - x.xi2 * b2) * q2 / m;
    res.dG_dE.block<1, 3>(2, e_index(0, FrameBlock::Rho)) = d_erho1.transpose();
    res.dG_dE.block<1, 3>(2, e_index(0, FrameBlock::Alpha)) = x.xi1 * common1.transpose();
    res.dG_dE.block<1, 3>(2, e_index(0, FrameBlock::Delta)) = x.zeta1 * common1.transpose();
    res.dG_dE.block<1, 3>(2, e_index(1, FrameBlock::Rho)) = d_erho2.transpose();
    res.dG_dE.block<1, 3>(2, e_index(1, FrameBlock::Alpha)) = d_ealpha2.transpose();
    res.dG_dE.block<1, 3>(2, e_index(1, FrameBlock::Delta)) = d_edelta2.transpose();
    res.dG_dE.row(3) = lam.dE;

    res.dX_dE = method == XMethod::Linear ? linear_x_gradient(g1, g2, *lin, x) : quadratic_x_gradient(g1, g2, *quad, x);
    res.J = (res.dG_dX * res.dX_dE + res.dG_dE) * frame_jacobian(g1, g2);
  }
  res.g1 = g1;
  res.g2 = g2;
  return res;
}

// ---------------------------------------------------------------------------
// Branch guessing and Newton-Raphson.

struct BranchCandidate {
  XMethod method = XMethod::Quadratic;
  int root_index = -1;  // quadratic lineage; -1 for the linear path
  LambertBranch branch;
  double residual_at_zero = 0.0;  // Lambert residual at Delta = 0, rad
};

/// Revolution count between the two epochs implied by an orbit of energy e.
inline int revolutions_for_energy(double e, double dt, double mu) {
  if (!(e < 0.0)) return -1;
  const double a = -mu / (2.0 * e);
  return static_cast<int>(std::floor(mean_motion(a, mu) * dt / kTwoPi));
}

/// Lambert branches worth trying, from the orbits available at Delta = 0. For
/// each revolution count the case with the smallest |Lambert residual| is kept.
inline std::vector<BranchCandidate> guess_revolutions(const Attributable& att1, const Attributable& att2,
                                                      XMethod method, double mu = kMuEarth) {
  std::vector<BranchCandidate> out;
  const EpochGeometry g1 = epoch_geometry(att1, 0.0, 0.0, mu);
  const EpochGeometry g2 = epoch_geometry(att2, 0.0, 0.0, mu);
  const double dt = att2.t_bar.seconds_since(att1.t_bar);

  std::vector<std::pair<int, UnknownsX>> lineages;
  if (method == XMethod::Linear) {
    lineages.emplace_back(-1, solve_X_linear(assemble_linear(g1, g2)));
  } else {
    const auto xs = solve_X_quadratic(assemble_quadratic(g1, g2));
    for (std::size_t i = 0; i < xs.size(); ++i) lineages.emplace_back(static_cast<int>(i), xs[i]);
  }

  for (const auto& [root, x] : lineages) {
    std::vector<int> ks;
    for (double e : {energy(g1, x.xi1, x.zeta1), energy(g2, x.xi2, x.zeta2)}) {
      const int k = revolutions_for_energy(e, dt, mu);
      if (k >= 0 && std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
    for (int k : ks) {
      std::optional<BranchCandidate> best;
      for (LambertCase c : kAllLambertCases) {
        try {
          const auto lam = detail::lambert_terms(g1, g2, x, LambertBranch{c, k}, false);
          if (!best || std::abs(lam.value) < std::abs(best->residual_at_zero)) {
            best = BranchCandidate{method, root, LambertBranch{c, k}, lam.value};
          }
        } catch (const Error&) {
        }
      }
      if (best) out.push_back(*best);
    }
  }
  return out;
}

struct NewtonOptions {
  int max_iterations = 25;
  double step_tolerance = 1e-10;      // rad, infinity norm of the Delta update
  double residual_tolerance = 1e-9;   // normalised G
  int max_halvings = 4;
  double growth_limit = 10.0;         // damping kicks in when |G| grows by more
  double min_gap_seconds = 60.0;
  double mu = kMuEarth;
};

struct IterationRecord {
  DeltaCorrections delta;
  double residual_norm = 0.0;  // normalised
  double energy1 = 0.0, energy2 = 0.0;
  bool lambert_clamped = false;
};

struct LinkageSolution {
  DeltaCorrections delta;
  UnknownsX X;
  std::array<CartesianState, 2> states;
  std::array<KeplerianElements, 2> elements;
  LambertBranch branch;
  int iterations = 0;
  double residual_norm = 0.0;  // normalised
  std::string method;          // linear | quadratic-root-1 | quadratic-root-2 | ki-root-1 | ki-root-2
  double lenz_score = 0.0;     // |(L1 - L2).v2|, km
  bool preferred = false;
  bool lambert_clamped = false;
  std::vector<IterationRecord> trace;
};

struct BranchFailure {
  BranchCandidate candidate;
  ErrorKind kind = ErrorKind::NoConvergence;
  std::string message;
  std::vector<IterationRecord> trace;
};

struct LinkageReport {
  std::vector<LinkageSolution> solutions;
  std::vector<BranchFailure> failures;
  std::vector<BranchCandidate> candidates;
  std::optional<ErrorKind> setup_error;
  std::string setup_message;

  bool ok() const { return !solutions.empty(); }
  /// Failure class summarising why nothing converged.
  ErrorKind failure_kind() const {
    if (setup_error) return *setup_error;
    if (!failures.empty()) return failures.front().kind;
    return ErrorKind::NoBranch;
  }
};

inline void validate_pair(const Attributable& att1, const Attributable& att2, double min_gap_seconds) {
  const double gap = att2.t_bar.seconds_since(att1.t_bar);
  if (!(gap > 0.0)) throw Error(ErrorKind::InvalidInput, "attributables must satisfy t1 < t2");
  if (gap < min_gap_seconds) {
    throw Error(ErrorKind::InvalidInput, "attributables closer than " + std::to_string(min_gap_seconds) + " s");
  }
}

inline std::string quadratic_label(const char* prefix, int root) {
  return std::string(prefix) + "-root-" + std::to_string(root + 1);
}

inline void fill_states(LinkageSolution& sol, const ReducedResidual& res, double mu) {
  sol.states[0] = state_from(*res.g1, res.X.xi1, res.X.zeta1);
  sol.states[1] = state_from(*res.g2, res.X.xi2, res.X.zeta2);
  sol.elements[0] = cartesian_to_elements(sol.states[0], mu);
  sol.elements[1] = cartesian_to_elements(sol.states[1], mu);
  sol.lenz_score = std::abs(laplace_lenz_diff_dot_v2(*res.g1, *res.g2, res.X));
}

/// Newton-Raphson on one branch candidate, starting from Delta = 0.
inline LinkageSolution newton_branch(const Attributable& att1, const Attributable& att2,
                                     const BranchCandidate& cand, const NewtonOptions& opts,
                                     std::vector<IterationRecord>* trace_out = nullptr) {
  const ResidualScales scales = residual_scales(att1, att2, opts.mu);
  auto norm_of = [&](const Vec4& g) { return g.cwiseQuotient(scales.s).norm(); };

  std::vector<IterationRecord> trace;
  auto record = [&](const ReducedResidual& r) {
    trace.push_back(IterationRecord{r.delta, norm_of(r.G), r.energy1, r.energy2, r.lambert_clamped});
    if (trace_out) *trace_out = trace;
  };

  RootSelector selector{std::max(cand.root_index, 0), std::nullopt};
  ReducedResidual cur = reduced_residual(att1, att2, DeltaCorrections{}, cand.method, cand.branch, selector, true,
                                         opts.mu);
  record(cur);
  int iterations = 0;
  bool converged = norm_of(cur.G) < opts.residual_tolerance;

  while (!converged) {
    if (iterations >= opts.max_iterations) {
      throw Error(ErrorKind::NoConvergence, "iteration cap reached");
    }
    const Mat4 jn = scales.s.cwiseInverse().asDiagonal() * cur.J;
    const Vec4 gn = cur.G.cwiseQuotient(scales.s);
    Eigen::JacobiSVD<Mat4> svd(jn, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    if (!(sv(3) > 1e-14 * sv(0))) throw Error(ErrorKind::JacobianSingular, "reduced Jacobian is singular");
    const Vec4 step = -svd.solve(gn);

    const double cur_norm = norm_of(cur.G);
    double lambda = 1.0;
    std::optional<ReducedResidual> next;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      const Vec4 trial_v = cur.delta.as_vector() + lambda * step;
      const auto trial_delta = DeltaCorrections::from_vector(trial_v);
      if (!trial_delta.within_guard_band()) continue;
      try {
        RootSelector follow{0, cur.X.zeta2};
        ReducedResidual trial =
            reduced_residual(att1, att2, trial_delta, cand.method, cand.branch, follow, true, opts.mu);
        const double tn = norm_of(trial.G);
        if (std::isfinite(tn) && (tn <= opts.growth_limit * cur_norm || h == opts.max_halvings)) {
          next = std::move(trial);
          break;
        }
      } catch (const Error& e) {
        if (h == opts.max_halvings) throw;
      }
    }
    if (!next) throw Error(ErrorKind::NoConvergence, "step left the guard band of |Delta| < 0.1 rad");
    ++iterations;
    const double change = (next->delta.as_vector() - cur.delta.as_vector()).cwiseAbs().maxCoeff();
    cur = std::move(*next);
    record(cur);
    converged = change < opts.step_tolerance || norm_of(cur.G) < opts.residual_tolerance;
  }

  LinkageSolution sol;
  sol.delta = cur.delta;
  sol.X = cur.X;
  sol.branch = cand.branch;
  sol.iterations = iterations;
  sol.residual_norm = norm_of(cur.G);
  sol.lambert_clamped = cur.lambert_clamped;
  sol.method = cand.method == XMethod::Linear ? std::string("linear") : quadratic_label("quadratic", cur.root_index);
  fill_states(sol, cur, opts.mu);
  sol.trace = std::move(trace);
  return sol;
}

/// Orders solutions: converged residuals tie, then smaller |Delta| first.
inline void rank_solutions(std::vector<LinkageSolution>& sols, double residual_tolerance) {
  std::stable_sort(sols.begin(), sols.end(), [&](const LinkageSolution& a, const LinkageSolution& b) {
    const double ra = std::max(a.residual_norm, residual_tolerance);
    const double rb = std::max(b.residual_norm, residual_tolerance);
    if (ra != rb) return ra < rb;
    return a.delta.as_vector().cwiseAbs().maxCoeff() < b.delta.as_vector().cwiseAbs().maxCoeff();
  });
  for (std::size_t i = 0; i < sols.size(); ++i) sols[i].preferred = (i == 0);
}

inline bool same_solution(const LinkageSolution& a, const LinkageSolution& b) {
  return (a.delta.as_vector() - b.delta.as_vector()).cwiseAbs().maxCoeff() < 1e-9 &&
         (a.X.as_vector() - b.X.as_vector()).cwiseAbs().maxCoeff() < 1e-9 && a.branch == b.branch;
}

/// Full linkage: branch guessing at Delta = 0, then Newton on every candidate.
inline LinkageReport newton_solve(const Attributable& att1, const Attributable& att2, XMethod method,
                                  const NewtonOptions& opts = {}) {
  LinkageReport report;
  try {
    validate_pair(att1, att2, opts.min_gap_seconds);
    report.candidates = guess_revolutions(att1, att2, method, opts.mu);
  } catch (const Error& e) {
    report.setup_error = e.kind();
    report.setup_message = e.what();
    return report;
  }
  if (report.candidates.empty()) {
    report.setup_error = ErrorKind::NoBranch;
    report.setup_message = "no bound orbit at Delta = 0 to seed a Lambert branch";
    return report;
  }
  for (const auto& cand : report.candidates) {
    std::vector<IterationRecord> trace;
    try {
      auto sol = newton_branch(att1, att2, cand, opts, &trace);
      const bool dup = std::any_of(report.solutions.begin(), report.solutions.end(),
                                   [&](const LinkageSolution& s) { return same_solution(s, sol); });
      if (!dup) report.solutions.push_back(std::move(sol));
    } catch (const Error& e) {
      log::info("branch ", to_string(cand.branch.case_id), " k=", cand.branch.k, " failed: ", e.what());
      report.failures.push_back(BranchFailure{cand, e.kind(), e.what(), std::move(trace)});
    }
  }
  rank_solutions(report.solutions, opts.residual_tolerance);
  return report;
}

}  // namespace debris_linker
