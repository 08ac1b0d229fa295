// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "debris_linker/classical.hpp"
#include "debris_linker/coplanar.hpp"
#include "debris_linker/io.hpp"
#include "debris_linker/linkage.hpp"
#include "debris_linker/scenario.hpp"

using namespace debris_linker;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

KeplerianElements reference_orbit() {
  return KeplerianElements{7818.10, 0.066, deg_to_rad(65.81), deg_to_rad(216.25), deg_to_rad(357.16),
                           deg_to_rad(202.08), Epoch::from_mjd(54127.155035)};
}
const Epoch kEpoch1 = Epoch::from_mjd(54127.155035);
const Epoch kEpoch2 = Epoch::from_mjd(54127.582118);
const StationSpec kStation{deg_to_rad(-18.0), deg_to_rad(344.0), 6378.0, "RADAR"};

std::string sci(double v) { return io::format_sci(v, 2); }

std::array<Attributable, 2> noisy_pair(const NoiseSpec& base, std::uint64_t seed, bool exact_ranges) {
  std::array<Attributable, 2> att;
  const Epoch epochs[2] = {kEpoch1, kEpoch2};
  for (int k = 0; k < 2; ++k) {
    NoiseSpec ns = base;
    ns.seed = track_seed(seed, 0, 0, k);
    att[k] = interpolate_track(add_noise(simulate_track(reference_orbit(), kStation, epochs[k], 4, 10.0), ns));
    if (exact_ranges) att[k] = with_exact_ranges(att[k], reference_orbit());
  }
  return att;
}

Outcome zero_noise_round_trip() {
  const auto att = noisy_pair(NoiseSpec{}, 1, true);
  const auto rep = newton_solve(att[0], att[1], XMethod::Quadratic);
  if (!rep.ok()) return {false, "no solution: " + std::string(to_string(rep.failure_kind()))};
  const auto& s = rep.solutions.front();
  const auto truth = propagate_kepler(reference_orbit(), att[0].t_bar.seconds_since(reference_orbit().epoch));
  const auto d = element_errors(s.elements[0], truth);
  const double ang = std::max({std::abs(d.inclination), std::abs(d.node), std::abs(d.perigee), std::abs(d.mean_anomaly)});
  const bool ok = s.iterations <= 5 && std::abs(d.a) < 1e-3 && std::abs(d.e) < 1e-6 && ang < 1e-5;
  return {ok, "iterations " + std::to_string(s.iterations) + ", |da| " + sci(std::abs(d.a)) + " km, |de| " +
                  sci(std::abs(d.e)) + ", max angle " + sci(ang) + " deg"};
}

Outcome lambert_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<int, 4> seen_case{};
  std::array<int, 4> seen_k{};
  double worst = 0.0, worst_wrong = 0.0;
  int done = 0, ambiguous = 0;
  while (done < 1000) {
    KeplerianElements el{6800.0 + 35000.0 * u(rng), 0.8 * u(rng), 0.01 + 3.12 * u(rng), kTwoPi * u(rng),
                         kTwoPi * u(rng), kTwoPi * u(rng), Epoch::from_mjd(54127.0)};
    const int revs = done % 4;
    const double dt = (revs + 0.02 + 0.96 * u(rng)) * kTwoPi / mean_motion(el.a);
    const auto s1 = elements_to_cartesian(el);
    const auto s2 = propagate_state(el, el.epoch.plus_seconds(dt));
    const Vec3 c = s1.r.cross(s1.v);
    const Vec3 e = ((s1.v.squaredNorm() - kMuEarth / s1.r.norm()) * s1.r - s1.r.dot(s1.v) * s1.v) / kMuEarth;
    LambertBranch b;
    try {
      b = classify_branch(s1.r, s2.r, c, el.a, e, revs);
    } catch (const Error&) {
      ++ambiguous;
      continue;
    }
    const auto g = make_lambert_geometry(s1.r.norm(), s2.r.norm(), (s2.r - s1.r).norm(), el.a);
    worst = std::max(worst, std::abs(lambert_residual(g, b, dt)));
    LambertBranch wrong = b;
    wrong.k += 1;
    worst_wrong = std::max(worst_wrong, std::abs(std::abs(lambert_residual(g, wrong, dt)) - kTwoPi));
    ++seen_case[static_cast<int>(b.case_id)];
    ++seen_k[b.k];
    ++done;
  }
  bool covered = true;
  for (int i = 0; i < 4; ++i) covered = covered && seen_case[i] > 0 && seen_k[i] > 0;
  std::ostringstream os;
  os << "max |L| " << sci(worst) << " rad, max ||L(k+1)| - 2pi| " << sci(worst_wrong) << ", cases I-IV "
     << seen_case[0] << "/" << seen_case[1] << "/" << seen_case[2] << "/" << seen_case[3] << ", skipped " << ambiguous;
  return {worst < 1e-10 && worst_wrong < 1e-9 && covered, os.str()};
}

Outcome jacobian_suite() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  double worst = 0.0;
  int evaluated = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto att = noisy_pair(NoiseSpec{0.05, 0.05, 0.002, 0}, 500 + trial, false);
    const Vec4 d0(u(rng), u(rng), u(rng), u(rng));
    for (XMethod m : {XMethod::Linear, XMethod::Quadratic}) {
      try {
        const LambertBranch b{LambertCase::I, 5};
        const auto res = reduced_residual(att[0], att[1], DeltaCorrections::from_vector(d0), m, b);
        const double h = 1e-7;
        for (int k = 0; k < 4; ++k) {
          Vec4 dp = d0, dm = d0;
          dp(k) += h;
          dm(k) -= h;
          const RootSelector sel{0, res.X.zeta2};
          const Vec4 gp = reduced_residual(att[0], att[1], DeltaCorrections::from_vector(dp), m, b, sel, false).G;
          const Vec4 gm = reduced_residual(att[0], att[1], DeltaCorrections::from_vector(dm), m, b, sel, false).G;
          const Vec4 fd = (gp - gm) / (2 * h);
          for (int r = 0; r < 4; ++r) {
            worst = std::max(worst, std::abs(fd(r) - res.J(r, k)) / res.J.row(r).cwiseAbs().maxCoeff());
          }
        }
        ++evaluated;
      } catch (const Error&) {
      }
    }
  }
  return {worst < 1e-5 && evaluated >= 190,
          "max relative error " + sci(worst) + " over " + std::to_string(evaluated) + " evaluations"};
}

Outcome conservation_suite() {
  double worst_c = 0.0, worst_e = 0.0;
  int count = 0;
  auto check = [&](const LinkageSolution& s, bool energy_too) {
    const Vec3 c1 = s.states[0].r.cross(s.states[0].v), c2 = s.states[1].r.cross(s.states[1].v);
    worst_c = std::max(worst_c, (c1 - c2).norm() / c1.norm());
    if (energy_too) {
      const double e1 = 0.5 * s.states[0].v.squaredNorm() - kMuEarth / s.states[0].r.norm();
      const double e2 = 0.5 * s.states[1].v.squaredNorm() - kMuEarth / s.states[1].r.norm();
      worst_e = std::max(worst_e, std::abs(e1 - e2) / std::abs(e1));
    }
    ++count;
  };
  for (int trial = 0; trial < 30; ++trial) {
    const auto att = noisy_pair(NoiseSpec{0.1, 0.1, 0.005, 0}, 900 + trial, false);
    for (XMethod m : {XMethod::Linear, XMethod::Quadratic}) {
      for (const auto& s : newton_solve(att[0], att[1], m).solutions) check(s, m == XMethod::Quadratic);
    }
    try {
      for (const auto& s : keplerian_integrals_link(att[0], att[1])) check(s, true);
    } catch (const Error&) {
    }
  }
  return {count > 0 && worst_c < 1e-9 && worst_e < 1e-9,
          std::to_string(count) + " solutions, max |dc|/|c| " + sci(worst_c) + ", max |dE|/|E| " + sci(worst_e)};
}

Scenario comparison_scenario() {
  const std::string path = std::string(DEBRIS_LINKER_SOURCE_DIR) + "/scenarios/rms_comparison.cfg";
  return parse_scenario(io::read_file(path), path);
}

std::optional<ScenarioReport> comparison_report;

Outcome monte_carlo() {
  comparison_report = run_scenario(comparison_scenario());
  const auto& rep = *comparison_report;
  auto med = [&](const char* label, MethodId m) {
    const auto* s = rep.summary(label, m);
    return s ? s->median[0] : std::numeric_limits<double>::quiet_NaN();
  };
  const double q1 = med("RMS(1)", MethodId::InfAngQuadratic), k1 = med("RMS(1)", MethodId::KeplerianIntegrals);
  const double g1 = med("RMS(1)", MethodId::Gibbs);
  const double q2 = med("RMS(2)", MethodId::InfAngQuadratic), k2 = med("RMS(2)", MethodId::KeplerianIntegrals);
  const double q3 = med("RMS(3)", MethodId::InfAngQuadratic), k3 = med("RMS(3)", MethodId::KeplerianIntegrals);
  const bool a = q1 < k1 && q1 < 5.0 && k1 < 5.0 && g1 > 50.0;
  const bool b = q2 <= k2 && q3 <= k3;
  std::ostringstream os;
  os << "median |da| km: RMS(1) infang " << sci(q1) << " ki " << sci(k1) << " gibbs " << sci(g1) << "; RMS(2) infang "
     << sci(q2) << " ki " << sci(k2) << "; RMS(3) infang " << sci(q3) << " ki " << sci(k3);
  return {a && b, os.str()};
}

Outcome linear_limitation() {
  if (!comparison_report) return {false, "Monte Carlo report unavailable"};
  const auto* s = comparison_report->summary("RMS(3)", MethodId::InfAngLinear);
  if (!s) return {false, "no infang-linear summary for RMS(3)"};
  bool classified = true;
  for (const auto& r : comparison_report->rows) {
    if (r.noise_case == "RMS(3)" && r.method == "infang-linear" && !r.converged) classified &= !r.error_class.empty();
  }
  std::ostringstream os;
  os << "infang-linear converged " << s->converged << "/" << s->trials << ", failures:";
  for (const auto& [k, n] : s->failures) os << ' ' << k << "=" << n;
  return {classified && s->trials == comparison_report->scenario.trials, os.str()};
}

Outcome gibbs_order() {
  const KeplerianElements el{7000.0, 0.01, 0.9, 0.4, 0.3, 1.0, Epoch::from_mjd(54127)};
  std::vector<double> lx, ly;
  for (double h : {5.0, 10.0, 20.0, 40.0}) {
    GibbsInput in;
    for (int i = 0; i < 3; ++i) {
      const auto s = propagate_state(el, el.epoch.plus_seconds(i * h));
      in.r[i] = s.r;
      in.t[i] = s.epoch;
    }
    const double err = (gibbs_velocity(in) - propagate_state(el, in.t[1]).v).norm();
    lx.push_back(std::log(h));
    ly.push_back(std::log(err));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {std::abs(slope - 4.0) <= 0.5, "log-log slope " + io::format_fixed(slope, 3)};
}

Outcome coplanarity() {
  double worst_plane = 0.0, worst_range = 0.0, worst_drop = 1e300;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto track =
        add_noise(simulate_track(reference_orbit(), kStation, kEpoch1, 4, 10.0), NoiseSpec{0.2, 0.2, 0.0, seed});
    const auto corr = correct_track(track);
    for (std::size_t j = 0; j < track.size(); ++j) {
      const Vec3 q = station_state(track.obs[j].station, track.obs[j].epoch).q;
      worst_plane = std::max(worst_plane, std::abs(corr.positions[j].dot(corr.before.nu)) / corr.positions[j].norm());
      worst_range = std::max(worst_range, std::abs((corr.positions[j] - q).norm() - track.obs[j].rho) / track.obs[j].rho);
    }
    const auto after = fit_plane(corr.positions);
    worst_drop = std::min(worst_drop, corr.before.lambda_min / std::max(after.lambda_min, 1e-300));
  }
  return {worst_plane < 1e-9 && worst_range < 1e-12 && worst_drop >= 1e3,
          "max |r.nu|/|r| " + sci(worst_plane) + ", max range change " + sci(worst_range) + ", min lambda drop " +
              sci(worst_drop)};
}

Outcome determinism() {
  if (!comparison_report) return {false, "Monte Carlo report unavailable"};
  const auto again = run_scenario(comparison_scenario());
  const bool same = render_table(again) == render_table(*comparison_report) &&
                    render_records(again) == render_records(*comparison_report);
  return {same, same ? "table and records byte-identical" : "reports differ"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria{
      {1, "zero-noise round trip", 1.0, zero_noise_round_trip},
      {2, "Lambert oracle", 10.0, lambert_oracle},
      {3, "Jacobian suite", 30.0, jacobian_suite},
      {4, "conservation suite", 0.0, conservation_suite},
      {5, "Monte Carlo ordering", 120.0, monte_carlo},
      {6, "linear-path limitation", 0.0, linear_limitation},
      {7, "Gibbs order", 0.0, gibbs_order},
      {8, "coplanarity", 0.0, coplanarity},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + io::format_fixed(c.budget_s, 0) + " s budget";
    }
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
