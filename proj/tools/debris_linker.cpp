// Command-line harness: simulate, interpolate, link, gibbs, run.
//
// Exit codes: 0 success, 2 no solution, 3 bad input.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "debris_linker/classical.hpp"
#include "debris_linker/coplanar.hpp"
#include "debris_linker/io.hpp"
#include "debris_linker/linkage.hpp"
#include "debris_linker/scenario.hpp"

namespace dl = debris_linker;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoSolution = 2;
constexpr int kExitBadInput = 3;

bool is_input_error(dl::ErrorKind k) {
  switch (k) {
    case dl::ErrorKind::InvalidInput:
    case dl::ErrorKind::ParseError:
    case dl::ErrorKind::TooFewObservations:
    case dl::ErrorKind::BelowHorizon:
    case dl::ErrorKind::DegenerateTimes:
    case dl::ErrorKind::PolarSingularity:
      return true;
    default:
      return false;
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    dl::io::write_file(out_path, text);
  }
}

nlohmann::ordered_json solution_json(const dl::LinkageSolution& s) {
  nlohmann::ordered_json j;
  j["method"] = s.method;
  j["preferred"] = s.preferred;
  j["branch"] = std::string(dl::to_string(s.branch.case_id)) + ":" + std::to_string(s.branch.k);
  j["iterations"] = s.iterations;
  j["residual"] = s.residual_norm;
  j["lenz_score_km"] = s.lenz_score;
  j["lambert_clamped"] = s.lambert_clamped;
  j["delta_deg"] = {dl::rad_to_deg(s.delta.d_alpha1), dl::rad_to_deg(s.delta.d_delta1),
                    dl::rad_to_deg(s.delta.d_alpha2), dl::rad_to_deg(s.delta.d_delta2)};
  j["X_km_s"] = {s.X.xi1, s.X.zeta1, s.X.xi2, s.X.zeta2};
  for (int k = 0; k < 2; ++k) {
    const auto& st = s.states[k];
    nlohmann::ordered_json e = dl::detail::elements_json(s.elements[k]);
    e["r_km"] = {st.r.x(), st.r.y(), st.r.z()};
    e["v_km_s"] = {st.v.x(), st.v.y(), st.v.z()};
    j[k == 0 ? "epoch1" : "epoch2"] = e;
  }
  return j;
}

std::string solutions_table(const std::vector<dl::LinkageSolution>& sols) {
  std::ostringstream os;
  for (const auto& s : sols) {
    os << s.method << (s.preferred ? " (preferred)" : "") << " branch "
       << dl::to_string(s.branch.case_id) << ":" << s.branch.k << " iterations " << s.iterations << " residual "
       << dl::io::format_sci(s.residual_norm, 3) << " lenz_score_km " << dl::io::format_sci(s.lenz_score, 3) << '\n';
    os << "  delta_deg " << dl::io::format_sci(dl::rad_to_deg(s.delta.d_alpha1), 6) << ' '
       << dl::io::format_sci(dl::rad_to_deg(s.delta.d_delta1), 6) << ' '
       << dl::io::format_sci(dl::rad_to_deg(s.delta.d_alpha2), 6) << ' '
       << dl::io::format_sci(dl::rad_to_deg(s.delta.d_delta2), 6) << '\n';
    for (int k = 0; k < 2; ++k) {
      os << "  epoch " << k + 1 << " MJD " << dl::io::format_epoch(s.elements[k].epoch) << ": "
         << dl::describe(s.elements[k]) << '\n';
    }
  }
  return os.str();
}

dl::RadarTrack load_track(const std::string& path, bool coplanar) {
  dl::RadarTrack track = dl::io::parse_track(dl::io::read_file(path), path);
  track.validate();
  if (coplanar) track = dl::correct_track(track).track;
  return track;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preliminary orbits from pairs of radar tracks"};
  app.require_subcommand(1);
  std::string format = "table";
  std::string out;
  bool coplanar = false;

  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "records"}));
  };

  auto* simulate = app.add_subcommand("simulate", "Write the two noisy tracks of one scenario trial");
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  int case_index = 1, trial = 0;
  simulate->add_option("--scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--seed", seed, "Override the scenario seed");
  simulate->add_option("--case", case_index, "Noise case (1-based)")->check(CLI::PositiveNumber);
  simulate->add_option("--trial", trial, "Trial index")->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", out_dir, "Output directory")->capture_default_str();
  simulate->add_flag("--coplanar", coplanar, "Rotate the lines of sight onto the fitted plane");

  auto* interpolate = app.add_subcommand("interpolate", "Track file to attributable");
  std::string track_path;
  interpolate->add_option("track", track_path, "Track file")->required();
  interpolate->add_option("--out", out, "Output file (default stdout)");
  interpolate->add_flag("--coplanar", coplanar, "Rotate the lines of sight onto the fitted plane first");

  auto* link = app.add_subcommand("link", "Link two attributables");
  std::string att1_path, att2_path, method = "quadratic";
  link->add_option("attributable1", att1_path, "First attributable file")->required();
  link->add_option("attributable2", att2_path, "Second attributable file")->required();
  link->add_option("--method", method, "Reduction")->check(CLI::IsMember({"quadratic", "linear", "ki"}));
  link->add_option("--out", out, "Output file (default stdout)");
  add_format(link);

  auto* gibbs = app.add_subcommand("gibbs", "Gibbs' method on observations 1, 2 and 4 of a track");
  gibbs->add_option("track", track_path, "Track file")->required();
  gibbs->add_option("--out", out, "Output file (default stdout)");
  gibbs->add_flag("--coplanar", coplanar, "Rotate the lines of sight onto the fitted plane first");
  add_format(gibbs);

  auto* run = app.add_subcommand("run", "Run a scenario and report the comparison");
  std::vector<std::string> methods;
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--method", methods, "Restrict to these methods")
      ->check(CLI::IsMember({"infang-linear", "infang-quadratic", "ki", "gibbs"}));
  run->add_flag("--coplanar", coplanar, "Enable the plane pre-correction");
  run->add_option("--out", out, "Output directory (writes report.txt or records.jsonl)");
  add_format(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (simulate->parsed()) {
      dl::Scenario sc = dl::parse_scenario(dl::io::read_file(scenario_path), scenario_path);
      if (seed) sc.seed = *seed;
      if (case_index > static_cast<int>(sc.cases.size())) {
        throw dl::Error(dl::ErrorKind::InvalidInput, "scenario has " + std::to_string(sc.cases.size()) + " noise cases");
      }
      const auto& nc = sc.cases[static_cast<std::size_t>(case_index - 1)];
      std::filesystem::create_directories(out_dir);
      for (int k = 0; k < 2; ++k) {
        auto track = dl::simulate_track(sc.truth, sc.station_for(k), sc.track_epochs[k], sc.n_obs, sc.dt);
        track = dl::add_noise(track, {nc.sigma_alpha_deg, nc.sigma_delta_deg, nc.sigma_rho_km,
                                      dl::track_seed(sc.seed, case_index - 1, trial, k)});
        if (coplanar || sc.coplanar) track = dl::correct_track(track).track;
        const std::string path = (std::filesystem::path(out_dir) / ("track" + std::to_string(k + 1) + ".txt")).string();
        dl::io::write_file(path, dl::io::write_track(track));
        std::cout << path << '\n';
      }
      return kExitOk;
    }

    if (interpolate->parsed()) {
      const auto att = dl::interpolate_track(load_track(track_path, coplanar));
      emit(dl::io::write_attributable(att), out);
      return kExitOk;
    }

    if (link->parsed()) {
      const auto a1 = dl::io::parse_attributable(dl::io::read_file(att1_path), att1_path);
      const auto a2 = dl::io::parse_attributable(dl::io::read_file(att2_path), att2_path);
      dl::validate_pair(a1, a2, dl::NewtonOptions{}.min_gap_seconds);
      std::vector<dl::LinkageSolution> sols;
      std::string failure;
      if (method == "ki") {
        try {
          sols = dl::keplerian_integrals_link(a1, a2);
        } catch (const dl::Error& e) {
          if (is_input_error(e.kind())) throw;
          failure = e.what();
        }
      } else {
        const auto rep = dl::newton_solve(a1, a2, method == "linear" ? dl::XMethod::Linear : dl::XMethod::Quadratic);
        sols = rep.solutions;
        if (!rep.ok()) {
          failure = rep.setup_error ? rep.setup_message : std::string(dl::to_string(rep.failure_kind()));
          for (const auto& f : rep.failures) {
            std::cerr << "branch " << dl::to_string(f.candidate.branch.case_id) << ":" << f.candidate.branch.k
                      << " failed after " << (f.trace.empty() ? 0 : f.trace.size() - 1) << " iterations: " << f.message
                      << '\n';
          }
        }
      }
      if (sols.empty()) {
        std::cerr << "no solution: " << failure << '\n';
        return kExitNoSolution;
      }
      if (format == "records") {
        std::string text;
        for (const auto& s : sols) text += solution_json(s).dump() + "\n";
        emit(text, out);
      } else {
        emit(solutions_table(sols), out);
      }
      return kExitOk;
    }

    if (gibbs->parsed()) {
      const auto track = load_track(track_path, coplanar);
      const auto g = dl::gibbs_from_track(track);
      if (format == "records") {
        nlohmann::ordered_json j = dl::detail::elements_json(g.elements);
        j["r_km"] = {g.state.r.x(), g.state.r.y(), g.state.r.z()};
        j["v_km_s"] = {g.state.v.x(), g.state.v.y(), g.state.v.z()};
        j["coplanarity_deg"] = dl::rad_to_deg(g.coplanarity);
        emit(j.dump() + "\n", out);
      } else {
        emit("gibbs (obs 1,2,4) MJD " + dl::io::format_epoch(g.state.epoch) + ": " + dl::describe(g.elements) + "\n",
             out);
      }
      return kExitOk;
    }

    if (run->parsed()) {
      dl::Scenario sc = dl::parse_scenario(dl::io::read_file(scenario_path), scenario_path);
      if (seed) sc.seed = *seed;
      if (coplanar) sc.coplanar = true;
      if (!methods.empty()) {
        sc.methods.clear();
        for (const auto& m : methods) sc.methods.push_back(*dl::method_from_string(m));
      }
      const auto rep = dl::run_scenario(sc);
      const bool records = format == "records";
      const std::string text = records ? dl::render_records(rep) : dl::render_table(rep);
      if (out.empty()) {
        std::cout << text;
      } else {
        std::filesystem::create_directories(out);
        dl::io::write_file((std::filesystem::path(out) / (records ? "records.jsonl" : "report.txt")).string(), text);
      }
      return kExitOk;
    }
  } catch (const dl::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.kind()) ? kExitBadInput : kExitNoSolution;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}
