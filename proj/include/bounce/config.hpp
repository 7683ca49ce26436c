#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounce/errors.hpp"
#include "bounce/forcing.hpp"
#include "bounce/impact_map.hpp"
#include "bounce/orbit_finder.hpp"

/**
 * @file config.hpp
 *
 * @brief Run configuration: one JSON document.
 *
 * @code
 * {
 *   "g": 1.0,
 *   "forcing": {"cos": [0.0, 0.01], "sin": []},
 *   "keys": [[2, 1], [5, 2]],
 *   "initial_conditions": [{"t": 0.0, "v": 1.0, "steps": 4}],
 *   "twist": {"q": [1, 2, 3], "e_lo": 5.0, "e_hi": 50.0, "grid_n": 32},
 *   "sweep": {"amplitudes": [0.0, 0.01], "harmonic": 1},
 *   "grid": {"n_t": 64, "n_e": 64},
 *   "tolerances": {"newton_tol": 1e-10},
 *   "probe": {"enabled": false, "n_initial": 100},
 *   "seed": 1,
 *   "output_dir": "out"
 * }
 * @endcode
 *
 * Only g is required. Unknown fields are rejected.
 */

namespace bounce {

struct InitialCondition {
  double t = 0.0;
  double v = 1.0;
  int steps = 10;
};

struct TwistSettings {
  std::vector<int> q{1, 2, 3};
  double e_lo = 5.0;
  double e_hi = 50.0;
  int grid_n = 32;
};

struct SweepSettings {
  std::vector<double> amplitudes;
  int harmonic = 1;
};

struct RunConfig {
  double g = 1.0;
  std::optional<double> v_star;
  std::vector<double> cos_coeffs;
  std::vector<double> sin_coeffs;
  std::vector<OrbitKey> keys;
  std::vector<InitialCondition> initial_conditions;
  TwistSettings twist;
  SweepSettings sweep;
  SweepGrid grid;
  OrbitTolerances tolerances;
  bool probe_enabled = false;
  ProbeOptions probe;
  std::string output_dir = ".";

  [[nodiscard]] ForcingProfile profile() const { return {cos_coeffs, sin_coeffs}; }
  [[nodiscard]] MapParams params(ForcingProfile const& f) const { return MapParams::for_profile(f, g, v_star); }
};

namespace detail {

class ConfigReader {
public:
  explicit ConfigReader(std::string const& text) : text_(text) {}

  /// 1-based line of the first occurrence of "name" as a JSON key, 0 if absent.
  [[nodiscard]] int line_of(std::string const& name) const {
    std::size_t const pos = text_.find('"' + name + '"');
    if (pos == std::string::npos) {
      return 0;
    }
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  /// 1-based line of the first match of `pattern` after the key "after", 0 if absent.
  [[nodiscard]] int line_of_match(std::string const& after, std::regex const& pattern) const {
    std::size_t const start = text_.find('"' + after + '"');
    if (start == std::string::npos) {
      return 0;
    }
    std::smatch m;
    auto const begin = text_.begin() + static_cast<std::ptrdiff_t>(start);
    if (!std::regex_search(begin, text_.end(), m, pattern)) {
      return 0;
    }
    return 1 + static_cast<int>(std::count(text_.begin(), m[0].first, '\n'));
  }

  [[noreturn]] void fail(std::string const& path, std::string const& leaf, std::string const& what) const {
    fail_at(path, line_of(leaf), what);
  }

  [[noreturn]] static void fail_at(std::string const& path, int line, std::string const& what) {
    throw ConfigError(path, line > 0 ? "line " + std::to_string(line) + ": " + what : what);
  }

  void only(nlohmann::json const& obj, std::string const& path, std::set<std::string> const& allowed) const {
    if (!obj.is_object()) {
      fail(path, last(path), "expected an object");
    }
    for (auto const& [k, v] : obj.items()) {
      if (!allowed.count(k)) {
        fail(join(path, k), k, "unknown field");
      }
    }
  }

  double real(nlohmann::json const& j, std::string const& path) const {
    if (!j.is_number()) {
      fail(path, last(path), "expected a number");
    }
    return j.get<double>();
  }

  double positive(nlohmann::json const& j, std::string const& path) const {
    double const x = real(j, path);
    if (!(x > 0.0)) {
      fail(path, last(path), "must be positive");
    }
    return x;
  }

  long long integer(nlohmann::json const& j, std::string const& path) const {
    if (!j.is_number_integer()) {
      fail(path, last(path), "expected an integer");
    }
    return j.get<long long>();
  }

  int positive_int(nlohmann::json const& j, std::string const& path) const {
    long long const n = integer(j, path);
    if (n < 1 || n > 100'000'000) {
      fail(path, last(path), "must be a positive integer");
    }
    return static_cast<int>(n);
  }

  std::vector<double> reals(nlohmann::json const& j, std::string const& path) const {
    if (!j.is_array()) {
      fail(path, last(path), "expected an array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(real(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  static std::string join(std::string const& path, std::string const& k) { return path.empty() ? k : path + "." + k; }

  static std::string last(std::string const& path) {
    std::string p = path.substr(0, path.find('['));
    std::size_t const dot = p.rfind('.');
    return dot == std::string::npos ? p : p.substr(dot + 1);
  }

private:
  std::string const& text_;
};

}  // namespace detail

/// Parses and validates a configuration document. Throws ConfigError naming the field.
inline RunConfig parse_config(std::string const& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (json::parse_error const& err) {
    std::size_t const at = std::min<std::size_t>(err.byte, text.size());
    int const line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(at), '\n'));
    throw ConfigError("", "line " + std::to_string(line) + ": malformed JSON: " + err.what());
  }
  detail::ConfigReader const rd(text);
  rd.only(root, "",
          {"g", "v_star", "forcing", "keys", "initial_conditions", "twist", "sweep", "grid", "tolerances", "probe",
           "seed", "output_dir"});

  RunConfig cfg;
  if (!root.contains("g")) {
    throw ConfigError("g", "missing required field");
  }
  cfg.g = rd.positive(root["g"], "g");

  if (root.contains("forcing")) {
    json const& f = root["forcing"];
    rd.only(f, "forcing", {"cos", "sin"});
    if (f.contains("cos")) cfg.cos_coeffs = rd.reals(f["cos"], "forcing.cos");
    if (f.contains("sin")) cfg.sin_coeffs = rd.reals(f["sin"], "forcing.sin");
  }

  if (root.contains("v_star")) {
    cfg.v_star = rd.positive(root["v_star"], "v_star");
    double const v_min = 4.0 * cfg.profile().sup_norm(1);
    if (!(*cfg.v_star > v_min)) {
      rd.fail("v_star", "v_star", "must exceed 4 |f'| = " + std::to_string(v_min));
    }
  }

  if (root.contains("keys")) {
    json const& ks = root["keys"];
    if (!ks.is_array()) {
      rd.fail("keys", "keys", "expected an array of [p, q] pairs");
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
      std::string const path = "keys[" + std::to_string(i) + "]";
      if (!ks[i].is_array() || ks[i].size() != 2) {
        rd.fail(path, "keys", "expected [p, q]");
      }
      OrbitKey const key{rd.positive_int(ks[i][0], path + ".p"), rd.positive_int(ks[i][1], path + ".q")};
      if (!key.coprime()) {
        std::regex const pair("\\[\\s*" + std::to_string(key.p) + "\\s*,\\s*" + std::to_string(key.q) + "\\s*\\]");
        rd.fail_at(path, rd.line_of_match("keys", pair),
                   "(" + std::to_string(key.p) + ", " + std::to_string(key.q) + ") is not coprime");
      }
      if (std::find(cfg.keys.begin(), cfg.keys.end(), key) != cfg.keys.end()) {
        rd.fail(path, "keys", "duplicate key");
      }
      cfg.keys.push_back(key);
    }
  }

  if (root.contains("initial_conditions")) {
    json const& ics = root["initial_conditions"];
    if (!ics.is_array()) {
      rd.fail("initial_conditions", "initial_conditions", "expected an array");
    }
    for (std::size_t i = 0; i < ics.size(); ++i) {
      std::string const path = "initial_conditions[" + std::to_string(i) + "]";
      rd.only(ics[i], path, {"t", "v", "steps"});
      InitialCondition ic;
      if (ics[i].contains("t")) ic.t = rd.real(ics[i]["t"], path + ".t");
      if (ics[i].contains("v")) ic.v = rd.real(ics[i]["v"], path + ".v");
      if (ics[i].contains("steps")) ic.steps = rd.positive_int(ics[i]["steps"], path + ".steps");
      if (!(ic.v >= 0.0)) {
        rd.fail(path + ".v", "v", "initial velocity must be >= 0");
      }
      cfg.initial_conditions.push_back(ic);
    }
  }

  if (root.contains("twist")) {
    json const& tw = root["twist"];
    rd.only(tw, "twist", {"q", "e_lo", "e_hi", "grid_n"});
    if (tw.contains("q")) {
      if (!tw["q"].is_array() || tw["q"].empty()) {
        rd.fail("twist.q", "q", "expected a non-empty array of integers");
      }
      cfg.twist.q.clear();
      for (std::size_t i = 0; i < tw["q"].size(); ++i) {
        cfg.twist.q.push_back(rd.positive_int(tw["q"][i], "twist.q[" + std::to_string(i) + "]"));
      }
    }
    if (tw.contains("e_lo")) cfg.twist.e_lo = rd.positive(tw["e_lo"], "twist.e_lo");
    if (tw.contains("e_hi")) cfg.twist.e_hi = rd.positive(tw["e_hi"], "twist.e_hi");
    if (tw.contains("grid_n")) cfg.twist.grid_n = rd.positive_int(tw["grid_n"], "twist.grid_n");
    if (cfg.twist.e_hi < cfg.twist.e_lo) {
      rd.fail("twist.e_hi", "e_hi", "must be >= twist.e_lo");
    }
    if (cfg.twist.grid_n < 2) {
      rd.fail("twist.grid_n", "grid_n", "must be >= 2");
    }
  }

  if (root.contains("sweep")) {
    json const& sw = root["sweep"];
    rd.only(sw, "sweep", {"amplitudes", "harmonic"});
    if (sw.contains("amplitudes")) cfg.sweep.amplitudes = rd.reals(sw["amplitudes"], "sweep.amplitudes");
    if (sw.contains("harmonic")) cfg.sweep.harmonic = rd.positive_int(sw["harmonic"], "sweep.harmonic");
  }

  if (root.contains("grid")) {
    json const& gr = root["grid"];
    rd.only(gr, "grid", {"n_t", "n_e", "e_lo", "e_hi"});
    if (gr.contains("n_t")) cfg.grid.n_t = rd.positive_int(gr["n_t"], "grid.n_t");
    if (gr.contains("n_e")) cfg.grid.n_e = rd.positive_int(gr["n_e"], "grid.n_e");
    if (gr.contains("e_lo")) cfg.grid.e_lo = rd.positive(gr["e_lo"], "grid.e_lo");
    if (gr.contains("e_hi")) cfg.grid.e_hi = rd.positive(gr["e_hi"], "grid.e_hi");
    if (cfg.grid.n_t < 2 || cfg.grid.n_e < 2) {
      rd.fail("grid", "grid", "n_t and n_e must be >= 2");
    }
    if (cfg.grid.e_lo.has_value() != cfg.grid.e_hi.has_value()) {
      rd.fail("grid", "grid", "e_lo and e_hi must be given together");
    }
    if (cfg.grid.e_lo && !(*cfg.grid.e_hi > *cfg.grid.e_lo)) {
      rd.fail("grid.e_hi", "e_hi", "must exceed grid.e_lo");
    }
  }

  if (root.contains("tolerances")) {
    json const& tl = root["tolerances"];
    OrbitTolerances& t = cfg.tolerances;
    rd.only(tl, "tolerances",
            {"newton_tol", "polish_tol", "newton_max_iter", "singular_cond", "parabolic_tol", "dedup_tol",
             "morse_zero", "min_grad_tol", "minimax_grad_tol", "string_nodes", "string_max_iter",
             "curve_min_zeros", "curve_fill", "curve_check_samples", "curve_tol"});
    auto real_field = [&](char const* name, double& dst) {
      if (tl.contains(name)) dst = rd.positive(tl[name], std::string("tolerances.") + name);
    };
    auto int_field = [&](char const* name, int& dst) {
      if (tl.contains(name)) dst = rd.positive_int(tl[name], std::string("tolerances.") + name);
    };
    real_field("newton_tol", t.newton_tol);
    real_field("polish_tol", t.polish_tol);
    int_field("newton_max_iter", t.newton_max_iter);
    real_field("singular_cond", t.singular_cond);
    real_field("parabolic_tol", t.parabolic_tol);
    real_field("dedup_tol", t.dedup_tol);
    real_field("morse_zero", t.morse_zero);
    real_field("min_grad_tol", t.min_grad_tol);
    real_field("minimax_grad_tol", t.minimax_grad_tol);
    int_field("string_nodes", t.string_nodes);
    int_field("string_max_iter", t.string_max_iter);
    int_field("curve_min_zeros", t.curve_min_zeros);
    real_field("curve_fill", t.curve_fill);
    int_field("curve_check_samples", t.curve_check_samples);
    real_field("curve_tol", t.curve_tol);
    if (t.string_nodes < 5) {
      rd.fail("tolerances.string_nodes", "string_nodes", "must be >= 5");
    }
  }

  if (root.contains("probe")) {
    json const& pr = root["probe"];
    rd.only(pr, "probe", {"enabled", "n_initial", "radius", "periods", "escape", "fit_lo", "fit_hi"});
    if (pr.contains("enabled")) {
      if (!pr["enabled"].is_boolean()) {
        rd.fail("probe.enabled", "enabled", "expected true or false");
      }
      cfg.probe_enabled = pr["enabled"].get<bool>();
    }
    if (pr.contains("n_initial")) cfg.probe.n_initial = rd.positive_int(pr["n_initial"], "probe.n_initial");
    if (pr.contains("radius")) cfg.probe.radius = rd.positive(pr["radius"], "probe.radius");
    if (pr.contains("periods")) cfg.probe.periods = rd.positive_int(pr["periods"], "probe.periods");
    if (pr.contains("escape")) cfg.probe.escape = rd.positive(pr["escape"], "probe.escape");
    if (pr.contains("fit_lo")) cfg.probe.fit_lo = rd.positive(pr["fit_lo"], "probe.fit_lo");
    if (pr.contains("fit_hi")) cfg.probe.fit_hi = rd.positive(pr["fit_hi"], "probe.fit_hi");
    if (!(cfg.probe.fit_lo < cfg.probe.fit_hi)) {
      rd.fail("probe.fit_hi", "fit_hi", "must exceed probe.fit_lo");
    }
  }

  if (root.contains("seed")) {
    long long const s = rd.integer(root["seed"], "seed");
    if (s < 0) {
      rd.fail("seed", "seed", "must be >= 0");
    }
    cfg.probe.seed = static_cast<std::uint64_t>(s);
  }

  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string()) {
      rd.fail("output_dir", "output_dir", "expected a string");
    }
    cfg.output_dir = root["output_dir"].get<std::string>();
  }
  return cfg;
}

/// Reads and parses a configuration file. Throws ConfigError.
inline RunConfig load_config(std::string const& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot open config file " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace bounce
