#pragma once

// Scenario-driven comparison harness: simulated tracks, seeded noise,
// interpolation, the linkage methods and the baselines, per-trial comparison
// rows and per-method summaries.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "debris_linker/classical.hpp"
#include "debris_linker/coplanar.hpp"
#include "debris_linker/core.hpp"
#include "debris_linker/io.hpp"
#include "debris_linker/linkage.hpp"
#include "debris_linker/radar_sim.hpp"

namespace debris_linker {

enum class MethodId { InfAngLinear, InfAngQuadratic, KeplerianIntegrals, Gibbs };

inline std::string_view to_string(MethodId m) {
  switch (m) {
    case MethodId::InfAngLinear: return "infang-linear";
    case MethodId::InfAngQuadratic: return "infang-quadratic";
    case MethodId::KeplerianIntegrals: return "ki";
    case MethodId::Gibbs: return "gibbs";
  }
  return "?";
}

inline std::optional<MethodId> method_from_string(std::string_view s) {
  for (MethodId m : {MethodId::InfAngLinear, MethodId::InfAngQuadratic, MethodId::KeplerianIntegrals,
                     MethodId::Gibbs}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct NoiseCase {
  std::string label;
  double sigma_alpha_deg = 0.0, sigma_delta_deg = 0.0, sigma_rho_km = 0.0;
  bool exact_ranges = false;  // replace rho, rho_dot, rho_ddot by their true values
};

struct Scenario {
  std::string name = "scenario";
  KeplerianElements truth;
  std::vector<StationSpec> stations;  // one or two
  std::array<Epoch, 2> track_epochs;
  int n_obs = 4;
  double dt = 10.0;  // s
  std::vector<NoiseCase> cases;
  std::vector<MethodId> methods{MethodId::InfAngQuadratic, MethodId::KeplerianIntegrals, MethodId::Gibbs};
  bool coplanar = false;
  int trials = 1;
  std::uint64_t seed = 1;

  const StationSpec& station_for(int track) const {
    return stations[std::min<std::size_t>(static_cast<std::size_t>(track), stations.size() - 1)];
  }
};

namespace detail {

inline StationSpec parse_station(const io::KeyValueFile& kv, const std::string& prefix) {
  StationSpec st;
  st.name = kv.get_string(prefix + "_id", prefix);
  st.latitude = deg_to_rad(kv.get_double(prefix + "_latitude_deg"));
  st.longitude = deg_to_rad(kv.get_double(prefix + "_longitude_deg"));
  st.radius = kv.get_double(prefix + "_radius_km", 6378.0);
  try {
    st.validate();
  } catch (const Error& e) {
    io::parse_fail(kv.source(), kv.line_of(prefix + "_latitude_deg"), prefix, e.what());
  }
  return st;
}

inline NoiseCase parse_noise_case(const io::KeyValueFile& kv, const std::string& prefix, const std::string& label) {
  NoiseCase c;
  c.label = kv.get_string(prefix + "label", label);
  c.sigma_alpha_deg = kv.get_double(prefix + "sigma_alpha_deg", 0.0);
  c.sigma_delta_deg = kv.get_double(prefix + "sigma_delta_deg", 0.0);
  c.sigma_rho_km = kv.get_double(prefix + "sigma_rho_km", 0.0);
  c.exact_ranges = kv.get_bool(prefix + "exact_ranges", false);
  for (const char* k : {"sigma_alpha_deg", "sigma_delta_deg", "sigma_rho_km"}) {
    if (kv.get_double(prefix + k, 0.0) < 0.0) {
      io::parse_fail(kv.source(), kv.line_of(prefix + k), prefix + k, "must be non-negative");
    }
  }
  return c;
}

inline bool known_scenario_key(const std::string& k) {
  static const std::set<std::string> fixed{
      "name",         "a_km",          "e",           "inclination_deg",  "node_deg",       "perigee_deg",
      "mean_anomaly_deg", "elements_epoch_mjd", "track1_epoch_mjd", "track2_epoch_mjd", "n_obs", "dt_s",
      "trials",       "seed",          "methods",     "coplanar",         "label",          "sigma_alpha_deg",
      "sigma_delta_deg", "sigma_rho_km", "exact_ranges"};
  if (fixed.count(k)) return true;
  static const std::set<std::string> station_fields{"_id", "_latitude_deg", "_longitude_deg", "_radius_km"};
  for (const char* s : {"station1", "station2"}) {
    const std::string p(s);
    if (k.rfind(p, 0) == 0 && station_fields.count(k.substr(p.size()))) return true;
  }
  static const std::set<std::string> case_fields{"label", "sigma_alpha_deg", "sigma_delta_deg", "sigma_rho_km",
                                                 "exact_ranges"};
  if (k.size() > 6 && k.rfind("case", 0) == 0 && k[4] >= '1' && k[4] <= '9' && k[5] == '_') {
    return case_fields.count(k.substr(6)) != 0;
  }
  return false;
}

}  // namespace detail

/// Parses a flat `key = value` scenario. Noise cases are given either by the
/// top-level sigma_* keys (one case) or by case1_* ... case9_* groups.
inline Scenario parse_scenario(const std::string& text, const std::string& source = "scenario") {
  const auto kv = io::KeyValueFile::parse(text, source);
  kv.reject_unknown(detail::known_scenario_key);

  Scenario sc;
  sc.name = kv.get_string("name", "scenario");
  sc.track_epochs[0] = kv.get_epoch("track1_epoch_mjd");
  sc.track_epochs[1] = kv.get_epoch("track2_epoch_mjd");
  if (!(sc.track_epochs[0] < sc.track_epochs[1])) {
    io::parse_fail(source, kv.line_of("track2_epoch_mjd"), "track2_epoch_mjd", "must be later than track1_epoch_mjd");
  }
  KeplerianElements& el = sc.truth;
  el.a = kv.get_double("a_km");
  el.e = kv.get_double("e");
  if (!(el.a > 0.0)) io::parse_fail(source, kv.line_of("a_km"), "a_km", "must be positive");
  if (!(el.e >= 0.0 && el.e < 1.0)) io::parse_fail(source, kv.line_of("e"), "e", "must lie in [0, 1)");
  el.inclination = deg_to_rad(kv.get_double("inclination_deg"));
  el.node = deg_to_rad(kv.get_double("node_deg"));
  el.perigee = deg_to_rad(kv.get_double("perigee_deg"));
  el.mean_anomaly = deg_to_rad(kv.get_double("mean_anomaly_deg"));
  el.epoch = kv.has("elements_epoch_mjd") ? kv.get_epoch("elements_epoch_mjd") : sc.track_epochs[0];

  sc.stations.push_back(detail::parse_station(kv, "station1"));
  if (kv.has("station2_latitude_deg")) sc.stations.push_back(detail::parse_station(kv, "station2"));

  sc.n_obs = static_cast<int>(kv.get_int("n_obs", 4));
  if (sc.n_obs < 4) io::parse_fail(source, kv.line_of("n_obs"), "n_obs", "a radar track needs at least 4 observations");
  sc.dt = kv.get_double("dt_s", 10.0);
  if (!(sc.dt > 0.0)) io::parse_fail(source, kv.line_of("dt_s"), "dt_s", "must be positive");
  sc.trials = static_cast<int>(kv.get_int("trials", 1));
  if (sc.trials < 1) io::parse_fail(source, kv.line_of("trials"), "trials", "must be at least 1");
  sc.seed = kv.get_uint("seed", 1);
  sc.coplanar = kv.get_bool("coplanar", false);

  if (kv.has("methods")) {
    sc.methods.clear();
    std::istringstream is(kv.get_string("methods"));
    for (std::string tok; std::getline(is, tok, ',');) {
      const std::string t = io::trim(tok);
      const auto m = method_from_string(t);
      if (!m) io::parse_fail(source, kv.line_of("methods"), "methods", "unknown method '" + t + "'");
      if (std::find(sc.methods.begin(), sc.methods.end(), *m) == sc.methods.end()) sc.methods.push_back(*m);
    }
    if (sc.methods.empty()) io::parse_fail(source, kv.line_of("methods"), "methods", "empty list");
  }

  bool grouped = false;
  for (int i = 1; i <= 9; ++i) {
    const std::string p = "case" + std::to_string(i) + "_";
    const bool any = std::any_of(kv.keys().begin(), kv.keys().end(),
                                 [&](const std::string& k) { return k.rfind(p, 0) == 0; });
    if (!any) continue;
    grouped = true;
    sc.cases.push_back(detail::parse_noise_case(kv, p, "case" + std::to_string(i)));
  }
  if (!grouped) sc.cases.push_back(detail::parse_noise_case(kv, "", "noise"));
  return sc;
}

/// Seed of one noisy track: std::seed_seq over the 32-bit halves of the
/// scenario seed, the case index, the trial index and the track index; the
/// first two generated words form the 64-bit seed (low word first).
inline std::uint64_t track_seed(std::uint64_t base, int case_index, int trial, int track) {
  std::seed_seq seq{static_cast<std::uint32_t>(base & 0xffffffffu), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(case_index), static_cast<std::uint32_t>(trial),
                    static_cast<std::uint32_t>(track)};
  std::array<std::uint32_t, 2> w{};
  seq.generate(w.begin(), w.end());
  return static_cast<std::uint64_t>(w[0]) | (static_cast<std::uint64_t>(w[1]) << 32);
}

/// Signed element errors, computed minus true; angles in degrees.
struct ElementErrors {
  double a = 0.0, e = 0.0, inclination = 0.0, node = 0.0, perigee = 0.0, mean_anomaly = 0.0;
};

inline ElementErrors element_errors(const KeplerianElements& got, const KeplerianElements& truth) {
  ElementErrors d;
  d.a = got.a - truth.a;
  d.e = got.e - truth.e;
  d.inclination = rad_to_deg(got.inclination - truth.inclination);
  d.node = rad_to_deg(wrap_pi(got.node - truth.node));
  d.perigee = rad_to_deg(wrap_pi(got.perigee - truth.perigee));
  d.mean_anomaly = rad_to_deg(wrap_pi(got.mean_anomaly - truth.mean_anomaly));
  return d;
}

struct ComparisonRow {
  std::string noise_case;
  int trial = 0;
  std::string method;
  bool converged = false;
  std::string error_class;  // empty when converged
  std::string detail;       // solution label or failure message
  ElementErrors errors;
  KeplerianElements elements;
  int iterations = 0;
  double residual = 0.0;
  int solutions = 0;
  std::string branch;
};

struct AttributableRecord {
  std::string noise_case;
  int trial = 0;
  int track = 0;
  Attributable att;
};

struct MethodSummary {
  std::string noise_case;
  std::string method;
  int trials = 0;
  int converged = 0;
  std::map<std::string, int> failures;  // error class -> count
  std::array<double, 3> median{};       // |da| km, |de|, |dI| deg
  std::array<double, 3> iqr{};
};

struct ScenarioReport {
  Scenario scenario;
  std::vector<AttributableRecord> attributables;
  std::vector<ComparisonRow> rows;
  std::vector<MethodSummary> summaries;

  const MethodSummary* summary(const std::string& noise_case, MethodId m) const {
    for (const auto& s : summaries) {
      if (s.noise_case == noise_case && s.method == to_string(m)) return &s;
    }
    return nullptr;
  }
};

/// Linear-interpolation quantile of sorted values; +inf entries sort last.
inline double quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0) return sorted[lo];
  if (std::isinf(sorted[hi])) return sorted[hi];
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

namespace detail {

inline void fill_from_solution(ComparisonRow& row, const LinkageSolution& sol, const KeplerianElements& truth_at_t1) {
  row.converged = true;
  row.elements = sol.elements[0];
  row.errors = element_errors(sol.elements[0], truth_at_t1);
  row.iterations = sol.iterations;
  row.residual = sol.residual_norm;
  row.detail = sol.method;
  row.branch = std::string(to_string(sol.branch.case_id)) + ":" + std::to_string(sol.branch.k);
}

inline ComparisonRow run_method(MethodId m, const std::array<Attributable, 2>& att, const RadarTrack& track1,
                                const Scenario& sc, const KeplerianElements& truth_at_t1) {
  ComparisonRow row;
  row.method = std::string(to_string(m));
  try {
    switch (m) {
      case MethodId::InfAngLinear:
      case MethodId::InfAngQuadratic: {
        const auto rep =
            newton_solve(att[0], att[1], m == MethodId::InfAngLinear ? XMethod::Linear : XMethod::Quadratic);
        row.solutions = static_cast<int>(rep.solutions.size());
        if (!rep.ok()) {
          row.error_class = std::string(to_string(rep.failure_kind()));
          row.detail = rep.setup_error ? rep.setup_message
                                       : (rep.failures.empty() ? std::string("no branch") : rep.failures.front().message);
          if (!rep.failures.empty()) row.iterations = static_cast<int>(rep.failures.front().trace.size()) - 1;
          return row;
        }
        fill_from_solution(row, rep.solutions.front(), truth_at_t1);
        return row;
      }
      case MethodId::KeplerianIntegrals: {
        const auto sols = keplerian_integrals_link(att[0], att[1]);
        row.solutions = static_cast<int>(sols.size());
        for (const auto& s : sols) {
          if (s.preferred) fill_from_solution(row, s, truth_at_t1);
        }
        row.branch.clear();
        row.residual = 0.0;
        return row;
      }
      case MethodId::Gibbs: {
        const auto g = gibbs_from_track(track1);
        const KeplerianElements truth = propagate_kepler(sc.truth, g.state.epoch.seconds_since(sc.truth.epoch));
        row.converged = true;
        row.solutions = 1;
        row.elements = g.elements;
        row.errors = element_errors(g.elements, truth);
        row.detail = "obs 1,2,4";
        return row;
      }
    }
  } catch (const Error& e) {
    row.converged = false;
    row.error_class = std::string(to_string(e.kind()));
    row.detail = e.what();
  }
  return row;
}

inline MethodSummary summarize(const std::vector<ComparisonRow>& rows, const std::string& noise_case,
                               const std::string& method) {
  MethodSummary s;
  s.noise_case = noise_case;
  s.method = method;
  std::array<std::vector<double>, 3> v;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    if (r.noise_case != noise_case || r.method != method) continue;
    ++s.trials;
    if (r.converged) {
      ++s.converged;
      v[0].push_back(std::abs(r.errors.a));
      v[1].push_back(std::abs(r.errors.e));
      v[2].push_back(std::abs(r.errors.inclination));
    } else {
      ++s.failures[r.error_class];
      for (auto& x : v) x.push_back(inf);
    }
  }
  for (int i = 0; i < 3; ++i) {
    std::sort(v[i].begin(), v[i].end());
    s.median[i] = quantile(v[i], 0.5);
    const double q1 = quantile(v[i], 0.25), q3 = quantile(v[i], 0.75);
    s.iqr[i] = std::isinf(q3) ? inf : q3 - q1;
  }
  return s;
}

}  // namespace detail

/// Runs every trial of every noise case. Trials are independent; rows are
/// emitted in (case, trial, method) order so reports are reproducible.
inline ScenarioReport run_scenario(const Scenario& sc) {
  if (sc.stations.empty()) throw Error(ErrorKind::InvalidInput, "scenario has no station");
  ScenarioReport rep;
  rep.scenario = sc;
  std::array<RadarTrack, 2> clean;
  for (int k = 0; k < 2; ++k) clean[k] = simulate_track(sc.truth, sc.station_for(k), sc.track_epochs[k], sc.n_obs, sc.dt);

  for (std::size_t ci = 0; ci < sc.cases.size(); ++ci) {
    const NoiseCase& nc = sc.cases[ci];
    for (int trial = 0; trial < sc.trials; ++trial) {
      std::array<RadarTrack, 2> noisy;
      std::array<Attributable, 2> att;
      std::optional<Error> prep_error;
      try {
        for (int k = 0; k < 2; ++k) {
          const NoiseSpec ns{nc.sigma_alpha_deg, nc.sigma_delta_deg, nc.sigma_rho_km,
                             track_seed(sc.seed, static_cast<int>(ci), trial, k)};
          noisy[k] = add_noise(clean[k], ns);
          if (sc.coplanar) noisy[k] = correct_track(noisy[k]).track;
          att[k] = interpolate_track(noisy[k]);
          if (nc.exact_ranges) att[k] = with_exact_ranges(att[k], sc.truth);
          rep.attributables.push_back(AttributableRecord{nc.label, trial, k + 1, att[k]});
        }
      } catch (const Error& e) {
        prep_error = e;
      }
      const KeplerianElements truth_t1 =
          prep_error ? sc.truth : propagate_kepler(sc.truth, att[0].t_bar.seconds_since(sc.truth.epoch));
      for (MethodId m : sc.methods) {
        ComparisonRow row;
        if (prep_error) {
          row.method = std::string(to_string(m));
          row.error_class = std::string(to_string(prep_error->kind()));
          row.detail = prep_error->what();
        } else {
          row = detail::run_method(m, att, noisy[0], sc, truth_t1);
        }
        row.noise_case = nc.label;
        row.trial = trial;
        rep.rows.push_back(std::move(row));
      }
    }
    for (MethodId m : sc.methods) rep.summaries.push_back(detail::summarize(rep.rows, nc.label, std::string(to_string(m))));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Rendering.

inline std::string solver_settings_text() {
  const NewtonOptions o;
  std::ostringstream os;
  os << "Newton from Delta = 0; converged when max|dDelta| < " << io::format_sci(o.step_tolerance, 0)
     << " rad or |G/scale| < " << io::format_sci(o.residual_tolerance, 0) << "; at most " << o.max_iterations
     << " iterations; step halved up to " << o.max_halvings << " times when |G| grows more than "
     << io::format_fixed(o.growth_limit, 0) << "x; |Delta| < " << DeltaCorrections::kGuardBand
     << " rad. G scales: mu/rho^2 (K1, K2), |q2| km ((L1-L2).v2), 2pi (Lambert). Solutions ranked by scaled "
        "residual (converged ones tie) then by max|Delta|.";
  return os.str();
}

inline std::string render_table(const ScenarioReport& rep) {
  const Scenario& sc = rep.scenario;
  std::ostringstream os;
  os << "scenario " << sc.name << ": trials=" << sc.trials << " seed=" << sc.seed << " n_obs=" << sc.n_obs
     << " dt_s=" << io::format_double(sc.dt) << " coplanar=" << (sc.coplanar ? "on" : "off") << '\n';
  os << "truth: " << describe(sc.truth) << " at MJD " << io::format_epoch(sc.truth.epoch) << '\n';
  os << "solver: " << solver_settings_text() << '\n';
  os << "distances in km, angles in degrees\n";

  for (const auto& nc : sc.cases) {
    os << "\n== noise case " << nc.label << ": sigma_alpha=" << io::format_double(nc.sigma_alpha_deg)
       << " deg, sigma_delta=" << io::format_double(nc.sigma_delta_deg)
       << " deg, sigma_rho=" << io::format_double(nc.sigma_rho_km) << " km"
       << (nc.exact_ranges ? ", exact rho, rho_dot, rho_ddot" : "") << '\n';
    os << "attributables (trial 0):\n";
    os << "  track  t_bar_mjd            alpha_deg     delta_deg     rho_km        rho_dot_km_d     rho_ddot_km_d2\n";
    for (const auto& a : rep.attributables) {
      if (a.noise_case != nc.label || a.trial != 0) continue;
      os << "  " << a.track << "      " << io::format_fixed(a.att.t_bar.mjd(), 6) << "       "
         << io::format_fixed(rad_to_deg(a.att.alpha_bar), 6) << "    " << io::format_fixed(rad_to_deg(a.att.delta_bar), 6)
         << "    " << io::format_fixed(a.att.rho, 4) << "    " << io::format_fixed(a.att.rho_dot * kSecondsPerDay, 3)
         << "    " << io::format_fixed(a.att.rho_ddot * kSecondsPerDay * kSecondsPerDay, 1) << '\n';
    }
    os << "trials:\n";
    os << "  trial method            ok  da_km         de            dI_deg        dNode_deg     dPerigee_deg  "
          "dMean_deg     iter  detail\n";
    for (const auto& r : rep.rows) {
      if (r.noise_case != nc.label) continue;
      os << "  " << r.trial << "     " << r.method << std::string(18 - std::min<std::size_t>(17, r.method.size()), ' ');
      if (r.converged) {
        os << "y   " << io::format_sci(r.errors.a, 4) << "   " << io::format_sci(r.errors.e, 4) << "   "
           << io::format_sci(r.errors.inclination, 4) << "   " << io::format_sci(r.errors.node, 4) << "   "
           << io::format_sci(r.errors.perigee, 4) << "   " << io::format_sci(r.errors.mean_anomaly, 4) << "   "
           << r.iterations << "     " << r.detail << (r.branch.empty() ? "" : " branch " + r.branch) << '\n';
      } else {
        os << "n   " << r.error_class << ": " << r.detail << '\n';
      }
    }
    os << "summary (failures count as infinite error in the medians):\n";
    os << "  method            converged  median|da|_km  iqr|da|_km    median|de|    median|dI|_deg  failures\n";
    for (const auto& s : rep.summaries) {
      if (s.noise_case != nc.label) continue;
      os << "  " << s.method << std::string(18 - std::min<std::size_t>(17, s.method.size()), ' ') << s.converged << "/"
         << s.trials << "      " << io::format_sci(s.median[0], 4) << "    " << io::format_sci(s.iqr[0], 4) << "    "
         << io::format_sci(s.median[1], 4) << "    " << io::format_sci(s.median[2], 4) << "      ";
      if (s.failures.empty()) os << "-";
      bool first = true;
      for (const auto& [k, n] : s.failures) {
        os << (first ? "" : ", ") << k << "=" << n;
        first = false;
      }
      os << '\n';
    }
  }
  return os.str();
}

namespace detail {

inline nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return v > 0 ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(nullptr);
  return v;
}

inline nlohmann::ordered_json elements_json(const KeplerianElements& el) {
  nlohmann::ordered_json j;
  j["epoch_mjd"] = io::format_epoch(el.epoch);
  j["a_km"] = number(el.a);
  j["e"] = number(el.e);
  j["inclination_deg"] = number(rad_to_deg(el.inclination));
  j["node_deg"] = number(rad_to_deg(el.node));
  j["perigee_deg"] = number(rad_to_deg(el.perigee));
  j["mean_anomaly_deg"] = number(rad_to_deg(el.mean_anomaly));
  return j;
}

}  // namespace detail

/// One JSON object per line: a meta record, the attributables, one record per
/// comparison row and one per method summary.
inline std::string render_records(const ScenarioReport& rep) {
  using nlohmann::ordered_json;
  const Scenario& sc = rep.scenario;
  std::ostringstream os;
  {
    ordered_json j;
    j["record"] = "meta";
    j["scenario"] = sc.name;
    j["trials"] = sc.trials;
    j["seed"] = sc.seed;
    j["n_obs"] = sc.n_obs;
    j["dt_s"] = sc.dt;
    j["coplanar"] = sc.coplanar;
    j["truth"] = detail::elements_json(sc.truth);
    j["solver"] = solver_settings_text();
    os << j.dump() << '\n';
  }
  for (const auto& a : rep.attributables) {
    ordered_json j;
    j["record"] = "attributable";
    j["noise_case"] = a.noise_case;
    j["trial"] = a.trial;
    j["track"] = a.track;
    j["t_bar_mjd"] = io::format_epoch(a.att.t_bar);
    j["alpha_deg"] = rad_to_deg(a.att.alpha_bar);
    j["delta_deg"] = rad_to_deg(a.att.delta_bar);
    j["rho_km"] = a.att.rho;
    j["rho_dot_km_s"] = a.att.rho_dot;
    j["rho_ddot_km_s2"] = a.att.rho_ddot;
    os << j.dump() << '\n';
  }
  for (const auto& r : rep.rows) {
    ordered_json j;
    j["record"] = "comparison";
    j["noise_case"] = r.noise_case;
    j["trial"] = r.trial;
    j["method"] = r.method;
    j["converged"] = r.converged;
    if (r.converged) {
      j["da_km"] = detail::number(r.errors.a);
      j["de"] = detail::number(r.errors.e);
      j["dI_deg"] = detail::number(r.errors.inclination);
      j["dNode_deg"] = detail::number(r.errors.node);
      j["dPerigee_deg"] = detail::number(r.errors.perigee);
      j["dMean_deg"] = detail::number(r.errors.mean_anomaly);
      j["elements"] = detail::elements_json(r.elements);
      j["iterations"] = r.iterations;
      j["residual"] = detail::number(r.residual);
      j["solutions"] = r.solutions;
      j["branch"] = r.branch;
    } else {
      j["error_class"] = r.error_class;
    }
    j["detail"] = r.detail;
    os << j.dump() << '\n';
  }
  for (const auto& s : rep.summaries) {
    ordered_json j;
    j["record"] = "summary";
    j["noise_case"] = s.noise_case;
    j["method"] = s.method;
    j["trials"] = s.trials;
    j["converged"] = s.converged;
    j["failures"] = s.failures;
    j["median_abs_da_km"] = detail::number(s.median[0]);
    j["iqr_abs_da_km"] = detail::number(s.iqr[0]);
    j["median_abs_de"] = detail::number(s.median[1]);
    j["iqr_abs_de"] = detail::number(s.iqr[1]);
    j["median_abs_dI_deg"] = detail::number(s.median[2]);
    j["iqr_abs_dI_deg"] = detail::number(s.iqr[2]);
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace debris_linker
