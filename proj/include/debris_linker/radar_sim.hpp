#pragma once

// Synthetic radar tracks, Gaussian noise injection and track interpolation.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "debris_linker/core.hpp"
#include "debris_linker/log.hpp"
#include "debris_linker/observer.hpp"

namespace debris_linker {

struct RadarObservation {
  Epoch epoch;
  double rho = 0.0;  // km
  SphericalDirection dir;
  StationSpec station;
};

struct RadarTrack {
  std::vector<RadarObservation> obs;

  std::size_t size() const { return obs.size(); }

  /// Checks ordering, constant spacing and single-station origin.
  void validate(std::size_t min_obs = 4) const {
    if (obs.size() < min_obs) {
      throw Error(ErrorKind::TooFewObservations, "track has " + std::to_string(obs.size()) + " observations");
    }
    if (obs.size() < 2) return;
    const double dt = obs[1].epoch.seconds_since(obs[0].epoch);
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInput, "track epochs must increase");
    for (std::size_t j = 1; j < obs.size(); ++j) {
      const double step = obs[j].epoch.seconds_since(obs[j - 1].epoch);
      if (std::abs(step - dt) > 1e-9) throw Error(ErrorKind::InvalidInput, "track epochs are not equally spaced");
      if (obs[j].station.name != obs[0].station.name) {
        throw Error(ErrorKind::InvalidInput, "track mixes stations");
      }
    }
    for (const auto& o : obs) {
      if (!(o.rho > 0.0)) throw Error(ErrorKind::InvalidInput, "non-positive range");
    }
  }
};

/// RMS of the Gaussian errors injected into a track, plus the generator seed.
struct NoiseSpec {
  double sigma_alpha_deg = 0.0;
  double sigma_delta_deg = 0.0;
  double sigma_rho_km = 0.0;
  std::uint64_t seed = 0;
};

/// Interpolated track summary: mean epoch and angles, fitted range derivatives.
struct Attributable {
  Epoch t_bar;
  double alpha_bar = 0.0;  // rad
  double delta_bar = 0.0;  // rad
  double rho = 0.0;        // km
  double rho_dot = 0.0;    // km/s
  double rho_ddot = 0.0;   // km/s^2
  StationSpec station;
  ObserverState observer;  // evaluated at t_bar
  std::vector<std::string> diagnostics;
};

/// Exact topocentric quantities of a state seen from a station.
struct TopocentricTruth {
  double rho = 0.0, rho_dot = 0.0, rho_ddot = 0.0;
  double alpha = 0.0, delta = 0.0, alpha_dot = 0.0, delta_dot = 0.0;
  double xi = 0.0, zeta = 0.0;  // rho*alpha_dot*cos(delta), rho*delta_dot
  CartesianState state;
  ObserverState observer;
};

inline TopocentricTruth topocentric_truth(const CartesianState& state, const StationSpec& station,
                                          double mu = kMuEarth) {
  TopocentricTruth t;
  t.state = state;
  t.observer = station_state(station, state.epoch);
  const Vec3 p = state.r - t.observer.q;
  const Vec3 pd = state.v - t.observer.q_dot;
  const Vec3 pdd = -mu * state.r / std::pow(state.r.norm(), 3) - t.observer.q_ddot;
  t.rho = p.norm();
  t.rho_dot = p.dot(pd) / t.rho;
  t.rho_ddot = (pd.squaredNorm() + p.dot(pdd) - t.rho_dot * t.rho_dot) / t.rho;

  const auto dir = SphericalDirection::from_vector(p);
  t.alpha = dir.alpha;
  t.delta = dir.delta;
  const DirectionFrame f = direction_frame(dir);
  // d e_rho/dt = alpha_dot cos(delta) e_alpha + delta_dot e_delta
  const Vec3 erho_dot = (pd - t.rho_dot * f.e_rho) / t.rho;
  t.xi = t.rho * erho_dot.dot(f.e_alpha);
  t.zeta = t.rho * erho_dot.dot(f.e_delta);
  t.alpha_dot = t.xi / (t.rho * std::cos(t.delta));
  t.delta_dot = t.zeta / t.rho;
  return t;
}

/// Noise-free track of n observations spaced dt seconds, centred on t_bar.
inline RadarTrack simulate_track(const KeplerianElements& el, const StationSpec& station, const Epoch& t_bar,
                                 int n, double dt, double mu = kMuEarth) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "track needs at least one observation");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidInput, "observation spacing must be positive");
  station.validate();
  RadarTrack track;
  track.obs.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double offset = (j - 0.5 * (n - 1)) * dt;
    const Epoch t = t_bar.plus_seconds(offset);
    const CartesianState s = propagate_state(el, t, mu);
    const ObserverState obs = station_state(station, t);
    const Vec3 p = s.r - obs.q;
    if (!(p.dot(obs.q) > 0.0)) {
      throw Error(ErrorKind::BelowHorizon, "object below the horizon at MJD " + std::to_string(t.mjd()));
    }
    track.obs.push_back(RadarObservation{t, p.norm(), SphericalDirection::from_vector(p), station});
  }
  return track;
}

/// Seeded standard-normal source.
///
/// Mapping from seed to samples: std::mt19937_64 seeded with the 64-bit seed;
/// each pair of 64-bit words is turned into two uniforms u = (w >> 11) * 2^-53
/// (u1 is shifted to (0,1]) and then into two normals by Box-Muller,
/// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2),
/// returned in that order.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return radius * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Adds independent zero-mean Gaussian errors to every observation. Samples are
/// drawn in the order (alpha, delta, rho) per observation whatever the sigmas,
/// so changing one sigma does not reshuffle the other channels.
inline RadarTrack add_noise(const RadarTrack& track, const NoiseSpec& noise) {
  if (noise.sigma_alpha_deg < 0.0 || noise.sigma_delta_deg < 0.0 || noise.sigma_rho_km < 0.0) {
    throw Error(ErrorKind::InvalidInput, "noise sigmas must be non-negative");
  }
  GaussianSampler gauss(noise.seed);
  RadarTrack out = track;
  const double sa = deg_to_rad(noise.sigma_alpha_deg);
  const double sd = deg_to_rad(noise.sigma_delta_deg);
  for (auto& o : out.obs) {
    const double za = gauss.next(), zd = gauss.next(), zr = gauss.next();
    if (sa > 0.0) o.dir.alpha = wrap_two_pi(o.dir.alpha + sa * za);
    if (sd > 0.0) o.dir.delta += sd * zd;
    if (noise.sigma_rho_km > 0.0) o.rho += noise.sigma_rho_km * zr;
  }
  return out;
}

/// Least-squares polynomial of the given degree in the centred variable tau;
/// returns the coefficients c_0..c_degree of sum c_k tau^k.
inline Eigen::VectorXd polyfit(const std::vector<double>& tau, const std::vector<double>& y, int degree) {
  const auto n = static_cast<Eigen::Index>(tau.size());
  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      design(i, k) = p;
      p *= tau[static_cast<std::size_t>(i)];
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  return design.colPivHouseholderQr().solve(rhs);
}

/// Mean epoch, mean angles (right ascension unwrapped around the first value),
/// and a quadratic least-squares fit of rho(t) evaluated at the mean epoch.
inline Attributable interpolate_track(const RadarTrack& track) {
  if (track.size() < 3) {
    throw Error(ErrorKind::TooFewObservations, "need at least 3 observations, got " + std::to_string(track.size()));
  }
  track.validate(3);
  Attributable att;
  if (track.size() == 3) {
    att.diagnostics.emplace_back("quadratic range fit is exactly determined with 3 observations");
    log::warn("interpolate_track: only 3 observations, range fit has no redundancy");
  }

  const auto& first = track.obs.front();
  const std::size_t n = track.size();
  double mean_offset = 0.0;
  for (const auto& o : track.obs) mean_offset += o.epoch.seconds_since(first.epoch);
  mean_offset /= static_cast<double>(n);
  att.t_bar = first.epoch.plus_seconds(mean_offset);

  double alpha_sum = 0.0, delta_sum = 0.0;
  std::vector<double> tau, rho;
  tau.reserve(n);
  rho.reserve(n);
  for (const auto& o : track.obs) {
    alpha_sum += first.dir.alpha + wrap_pi(o.dir.alpha - first.dir.alpha);
    delta_sum += o.dir.delta;
    tau.push_back(o.epoch.seconds_since(att.t_bar));
    rho.push_back(o.rho);
  }
  att.alpha_bar = wrap_two_pi(alpha_sum / static_cast<double>(n));
  att.delta_bar = delta_sum / static_cast<double>(n);

  const Eigen::VectorXd c = polyfit(tau, rho, 2);
  att.rho = c(0);
  att.rho_dot = c(1);
  att.rho_ddot = 2.0 * c(2);
  if (!(att.rho > 0.0)) throw Error(ErrorKind::InvalidInput, "fitted range is not positive");

  att.station = first.station;
  att.observer = station_state(att.station, att.t_bar);
  return att;
}

/// Attributable built from the true state at t_bar: exact angles and range
/// derivatives. Used for noise-free reference runs.
inline Attributable exact_attributable(const KeplerianElements& el, const StationSpec& station, const Epoch& t_bar,
                                       double mu = kMuEarth) {
  const TopocentricTruth t = topocentric_truth(propagate_state(el, t_bar, mu), station, mu);
  Attributable att;
  att.t_bar = t_bar;
  att.alpha_bar = t.alpha;
  att.delta_bar = t.delta;
  att.rho = t.rho;
  att.rho_dot = t.rho_dot;
  att.rho_ddot = t.rho_ddot;
  att.station = station;
  att.observer = t.observer;
  return att;
}

/// Replaces the range channel of an attributable with the exact values of the
/// true orbit (the "exact ranges" noise case); angles are left as interpolated.
inline Attributable with_exact_ranges(Attributable att, const KeplerianElements& truth, double mu = kMuEarth) {
  const TopocentricTruth t = topocentric_truth(propagate_state(truth, att.t_bar, mu), att.station, mu);
  att.rho = t.rho;
  att.rho_dot = t.rho_dot;
  att.rho_ddot = t.rho_ddot;
  return att;
}

}  // namespace debris_linker
