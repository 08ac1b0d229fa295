#pragma once

// Best-fit orbital plane through geocentric positions and the rotation of each
// line of sight onto that plane at fixed range.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "debris_linker/core.hpp"
#include "debris_linker/observer.hpp"
#include "debris_linker/radar_sim.hpp"

namespace debris_linker {

struct PlaneFit {
  Vec3 nu = Vec3::UnitZ();      // unit normal
  double lambda_min = 0.0;      // km^2
  Vec3 eigenvalues = Vec3::Zero();  // ascending
  std::vector<double> residuals;  // r_j . nu, km
};

/// Minimises sum (r_j . nu)^2 over unit nu: the eigenvector of sum r_j r_j^T
/// for the smallest eigenvalue, oriented so that nu . (r1 x r2) >= 0.
inline PlaneFit fit_plane(const std::vector<Vec3>& positions) {
  if (positions.size() < 3) throw Error(ErrorKind::InvalidInput, "plane fit needs at least 3 positions");
  Mat3 s = Mat3::Zero();
  for (const auto& r : positions) s += r * r.transpose();

  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(s);
  const double scale = s.trace();
  const double direct_check = (s * eig.eigenvectors().col(0) - eig.eigenvalues()(0) * eig.eigenvectors().col(0)).norm();
  if (eig.info() != Eigen::Success || !(direct_check <= 1e-12 * scale)) eig.compute(s);
  if (eig.info() != Eigen::Success) throw Error(ErrorKind::CollinearPositions, "eigen-decomposition failed");

  PlaneFit fit;
  fit.eigenvalues = eig.eigenvalues();
  if (fit.eigenvalues(1) - fit.eigenvalues(0) < 1e-10 * fit.eigenvalues(2)) {
    throw Error(ErrorKind::CollinearPositions, "plane is not unique");
  }
  fit.nu = eig.eigenvectors().col(0).normalized();
  if (fit.nu.dot(positions[0].cross(positions[1])) < 0.0) fit.nu = -fit.nu;
  fit.lambda_min = fit.eigenvalues(0);
  fit.residuals.reserve(positions.size());
  for (const auto& r : positions) fit.residuals.push_back(r.dot(fit.nu));
  return fit;
}

/// Rotated range vector R rho = A nu + B e_rho with |R rho| = rho and
/// (q + R rho) . nu = 0, rotating the line of sight by at most 90 degrees.
inline Vec3 rotate_to_plane(double rho, const Vec3& e_rho, const Vec3& q, const Vec3& nu) {
  const double q_cos_theta = nu.dot(q);  // |q| cos(theta)
  const double cos_phi = nu.dot(e_rho);
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - cos_phi * cos_phi));
  if (sin_phi < 1e-12) throw Error(ErrorKind::ParallelToNormal, "line of sight parallel to the plane normal");
  const double radicand = rho * rho - q_cos_theta * q_cos_theta;
  if (radicand < 0.0) {
    throw Error(ErrorKind::InfeasibleCorrection,
                "range " + std::to_string(rho) + " km below the station's distance to the plane");
  }
  const double root = std::sqrt(radicand);
  const double b = root / sin_phi;
  const double a = -(q_cos_theta + cos_phi / sin_phi * root);
  return a * nu + b * e_rho;
}

struct CoplanarCorrection {
  RadarTrack track;
  PlaneFit before;
  std::vector<Vec3> positions;  // corrected geocentric positions
};

/// Fits the plane through the observed positions of a track and moves every
/// line of sight onto it, keeping the measured ranges.
inline CoplanarCorrection correct_track(const RadarTrack& track) {
  std::vector<Vec3> positions;
  std::vector<ObserverState> observers;
  positions.reserve(track.size());
  for (const auto& o : track.obs) {
    observers.push_back(station_state(o.station, o.epoch));
    positions.push_back(observers.back().q + o.rho * o.dir.unit_vector());
  }
  CoplanarCorrection out;
  out.before = fit_plane(positions);
  out.track = track;
  for (std::size_t j = 0; j < track.size(); ++j) {
    auto& o = out.track.obs[j];
    const Vec3 rr = rotate_to_plane(o.rho, o.dir.unit_vector(), observers[j].q, out.before.nu);
    o.dir = SphericalDirection::from_vector(rr);
    direction_frame(o.dir);  // rejects a corrected line of sight at a pole
    out.positions.push_back(observers[j].q + rr);
  }
  return out;
}

}  // namespace debris_linker
