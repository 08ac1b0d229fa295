#pragma once

// Plain-text formats.
//
// Track file, whitespace delimited, one observation per line:
//   # station <id> <latitude_deg> <longitude_deg> <radius_km>
//   <mjd> <rho_km> <alpha_deg> <delta_deg> <station_id>
// Lines starting with '#' other than station definitions are comments.
// Numbers are written in shortest round-trip form, so parse(write(x)) == x for
// every field as stored in the file.
//
// Key/value files (attributables, scenarios): `key = value` per line, '#'
// starts a comment, units are part of the key name.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "debris_linker/core.hpp"
#include "debris_linker/observer.hpp"
#include "debris_linker/radar_sim.hpp"

namespace debris_linker::io {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed-point text with the given number of decimals (report tables).
inline std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[128];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
  return std::string(buf, res.ptr);
}

/// Scientific text with the given number of significant decimals.
inline std::string format_sci(double v, int decimals) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  char buf[128];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, decimals);
  return std::string(buf, res.ptr);
}

/// MJD as "<day>.<fraction digits>", exact for the stored day and fraction.
inline std::string format_epoch(const Epoch& t) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, t.day_fraction(), std::chars_format::fixed);
  std::string frac(buf, res.ptr);  // "0.xxx" or "0"
  std::string out = std::to_string(t.day());
  if (frac.size() > 1) out += frac.substr(1);
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int64(std::string_view s, std::int64_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_epoch(std::string_view s, Epoch& out) {
  const auto dot = s.find('.');
  std::int64_t day = 0;
  if (!s.empty() && s.front() != '-' && s.find_first_of("eE") == std::string_view::npos &&
      parse_int64(s.substr(0, dot), day)) {
    double frac = 0.0;
    if (dot != std::string_view::npos) {
      const std::string f = "0" + std::string(s.substr(dot));
      if (f.size() > 2 && !parse_double(f, frac)) return false;
      if (f.size() == 2) return false;  // trailing '.'
    }
    out = Epoch::from_day_fraction(day, frac);
    return true;
  }
  double mjd = 0.0;
  if (!parse_double(s, mjd)) return false;
  out = Epoch::from_mjd(mjd);
  return true;
}

[[noreturn]] inline void parse_fail(const std::string& source, int line, const std::string& field,
                                    const std::string& why) {
  throw Error(ErrorKind::ParseError, source + ":" + std::to_string(line) + ": field '" + field + "': " + why);
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Track files.

inline std::string write_track(const RadarTrack& track) {
  std::ostringstream os;
  os << "# debris_linker radar track\n";
  os << "# columns: mjd rho_km alpha_deg delta_deg station_id\n";
  std::set<std::string> seen;
  for (const auto& o : track.obs) {
    if (o.station.name.empty() || o.station.name.find_first_of(" \t#") != std::string::npos) {
      throw Error(ErrorKind::InvalidInput, "station id must be a non-empty token without blanks");
    }
    if (seen.insert(o.station.name).second) {
      os << "# station " << o.station.name << ' ' << format_double(rad_to_deg(o.station.latitude)) << ' '
         << format_double(rad_to_deg(o.station.longitude)) << ' ' << format_double(o.station.radius) << '\n';
    }
  }
  for (const auto& o : track.obs) {
    os << format_epoch(o.epoch) << ' ' << format_double(o.rho) << ' ' << format_double(rad_to_deg(o.dir.alpha))
       << ' ' << format_double(rad_to_deg(o.dir.delta)) << ' ' << o.station.name << '\n';
  }
  return os.str();
}

inline RadarTrack parse_track(const std::string& text, const std::string& source = "track") {
  std::map<std::string, StationSpec> stations;
  RadarTrack track;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  struct Pending {
    RadarObservation obs;
    std::string station;
    int line;
  };
  std::vector<Pending> pending;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto tok = split_ws(t.substr(1));
      if (tok.empty() || tok[0] != "station") continue;
      if (tok.size() != 5) parse_fail(source, lineno, "station", "expected: station <id> <lat_deg> <lon_deg> <radius_km>");
      StationSpec st;
      st.name = tok[1];
      double lat = 0, lon = 0;
      if (!parse_double(tok[2], lat)) parse_fail(source, lineno, "latitude_deg", "not a number: " + tok[2]);
      if (!parse_double(tok[3], lon)) parse_fail(source, lineno, "longitude_deg", "not a number: " + tok[3]);
      if (!parse_double(tok[4], st.radius)) parse_fail(source, lineno, "radius_km", "not a number: " + tok[4]);
      st.latitude = deg_to_rad(lat);
      st.longitude = deg_to_rad(lon);
      try {
        st.validate();
      } catch (const Error& e) {
        parse_fail(source, lineno, "station", e.what());
      }
      stations[st.name] = st;
      continue;
    }
    const auto tok = split_ws(t);
    if (tok.size() != 5) parse_fail(source, lineno, "record", "expected 5 columns, got " + std::to_string(tok.size()));
    Pending p;
    p.line = lineno;
    double a = 0, d = 0;
    if (!parse_epoch(tok[0], p.obs.epoch)) parse_fail(source, lineno, "mjd", "not an epoch: " + tok[0]);
    if (!parse_double(tok[1], p.obs.rho)) parse_fail(source, lineno, "rho_km", "not a number: " + tok[1]);
    if (!(p.obs.rho > 0.0)) parse_fail(source, lineno, "rho_km", "range must be positive");
    if (!parse_double(tok[2], a)) parse_fail(source, lineno, "alpha_deg", "not a number: " + tok[2]);
    if (!parse_double(tok[3], d)) parse_fail(source, lineno, "delta_deg", "not a number: " + tok[3]);
    if (std::abs(d) > 90.0) parse_fail(source, lineno, "delta_deg", "outside [-90, 90]");
    p.obs.dir.alpha = deg_to_rad(a);
    p.obs.dir.delta = deg_to_rad(d);
    p.station = tok[4];
    pending.push_back(std::move(p));
  }
  for (auto& p : pending) {
    const auto it = stations.find(p.station);
    if (it == stations.end()) parse_fail(source, p.line, "station_id", "undefined station " + p.station);
    p.obs.station = it->second;
    track.obs.push_back(std::move(p.obs));
  }
  return track;
}

// ---------------------------------------------------------------------------
// Key/value files.

class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueFile parse(const std::string& text, const std::string& source) {
    KeyValueFile kv;
    kv.source_ = source;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) parse_fail(source, lineno, t, "expected key = value");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) parse_fail(source, lineno, "", "empty key");
      if (kv.entries_.count(key)) parse_fail(source, lineno, key, "duplicate key");
      kv.entries_[key] = Entry{value, lineno};
      kv.order_.push_back(key);
    }
    return kv;
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key) const { return at(key).value; }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const auto& e = at(key);
    double v = 0.0;
    if (!parse_double(e.value, v)) parse_fail(source_, e.line, key, "not a number: " + e.value);
    return v;
  }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  std::int64_t get_int(const std::string& key) const {
    const auto& e = at(key);
    std::int64_t v = 0;
    if (!parse_int64(e.value, v)) parse_fail(source_, e.line, key, "not an integer: " + e.value);
    return v;
  }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& e = at(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size()) {
      parse_fail(source_, e.line, key, "not a non-negative integer: " + e.value);
    }
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& e = at(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    parse_fail(source_, e.line, key, "not a boolean: " + e.value);
  }

  Epoch get_epoch(const std::string& key) const {
    const auto& e = at(key);
    Epoch t;
    if (!parse_epoch(e.value, t)) parse_fail(source_, e.line, key, "not an MJD epoch: " + e.value);
    return t;
  }

  int line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }
  const std::string& source() const { return source_; }
  const std::vector<std::string>& keys() const { return order_; }

  /// Rejects keys outside the accepted set (catches typos in unit suffixes).
  template <typename Pred>
  void reject_unknown(Pred accepted) const {
    for (const auto& k : order_) {
      if (!accepted(k)) parse_fail(source_, entries_.at(k).line, k, "unknown key");
    }
  }

 private:
  const Entry& at(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) parse_fail(source_, 0, key, "missing required key");
    return it->second;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

// ---------------------------------------------------------------------------
// Attributable files.

inline std::string write_attributable(const Attributable& att) {
  std::ostringstream os;
  os << "# debris_linker attributable\n";
  os << "t_bar_mjd = " << format_epoch(att.t_bar) << '\n';
  os << "alpha_deg = " << format_double(rad_to_deg(att.alpha_bar)) << '\n';
  os << "delta_deg = " << format_double(rad_to_deg(att.delta_bar)) << '\n';
  os << "rho_km = " << format_double(att.rho) << '\n';
  os << "rho_dot_km_s = " << format_double(att.rho_dot) << '\n';
  os << "rho_ddot_km_s2 = " << format_double(att.rho_ddot) << '\n';
  os << "station_id = " << att.station.name << '\n';
  os << "station_latitude_deg = " << format_double(rad_to_deg(att.station.latitude)) << '\n';
  os << "station_longitude_deg = " << format_double(rad_to_deg(att.station.longitude)) << '\n';
  os << "station_radius_km = " << format_double(att.station.radius) << '\n';
  for (const auto& d : att.diagnostics) os << "# diagnostic: " << d << '\n';
  return os.str();
}

inline Attributable parse_attributable(const std::string& text, const std::string& source = "attributable") {
  const auto kv = KeyValueFile::parse(text, source);
  static const std::set<std::string> known{"t_bar_mjd",          "alpha_deg",           "delta_deg",
                                           "rho_km",             "rho_dot_km_s",        "rho_ddot_km_s2",
                                           "station_id",         "station_latitude_deg", "station_longitude_deg",
                                           "station_radius_km"};
  kv.reject_unknown([](const std::string& k) { return known.count(k) != 0; });
  Attributable att;
  att.t_bar = kv.get_epoch("t_bar_mjd");
  att.alpha_bar = deg_to_rad(kv.get_double("alpha_deg"));
  att.delta_bar = deg_to_rad(kv.get_double("delta_deg"));
  att.rho = kv.get_double("rho_km");
  if (!(att.rho > 0.0)) parse_fail(source, kv.line_of("rho_km"), "rho_km", "range must be positive");
  att.rho_dot = kv.get_double("rho_dot_km_s");
  att.rho_ddot = kv.get_double("rho_ddot_km_s2");
  att.station.name = kv.get_string("station_id", "station");
  att.station.latitude = deg_to_rad(kv.get_double("station_latitude_deg"));
  att.station.longitude = deg_to_rad(kv.get_double("station_longitude_deg"));
  att.station.radius = kv.get_double("station_radius_km", 6378.0);
  try {
    att.station.validate();
  } catch (const Error& e) {
    parse_fail(source, kv.line_of("station_radius_km"), "station", e.what());
  }
  att.observer = station_state(att.station, att.t_bar);
  return att;
}

}  // namespace debris_linker::io
