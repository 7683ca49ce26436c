#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounce/impact_map.hpp"
#include "bounce/orbit_finder.hpp"
#include "bounce/twist_analysis.hpp"

/**
 * @file report_io.hpp
 *
 * @brief JSON and CSV forms of the report types.
 *
 * JSON numbers use the shortest representation that parses back to the same double, so
 * to_json(from_json(j)) reproduces j exactly. NaN is written as null. CSV numbers use %.17g.
 */

namespace bounce {

using json = nlohmann::json;

namespace detail {

inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double num_of(json const& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Stability stability_of(std::string const& s) {
  if (s == "Elliptic") return Stability::Elliptic;
  if (s == "Hyperbolic") return Stability::Hyperbolic;
  if (s == "Parabolic") return Stability::Parabolic;
  throw std::invalid_argument("unknown stability class: " + s);
}

inline SetKind kind_of(std::string const& s) {
  if (s == "Finite") return SetKind::Finite;
  if (s == "Degenerate") return SetKind::Degenerate;
  throw std::invalid_argument("unknown set kind: " + s);
}

}  // namespace detail

inline void to_json(json& j, OrbitKey const& k) { j = json::array({k.p, k.q}); }
inline void from_json(json const& j, OrbitKey& k) {
  k.p = j.at(0).get<int>();
  k.q = j.at(1).get<int>();
}

inline void to_json(json& j, EnergyState const& s) { j = json::array({s.t, s.e}); }
inline void from_json(json const& j, EnergyState& s) {
  s.t = j.at(0).get<double>();
  s.e = j.at(1).get<double>();
}

inline void to_json(json& j, JacobianTE const& m) {
  j = json::array({json::array({m.dt_dt, m.dt_de}), json::array({m.de_dt, m.de_de})});
}
inline void from_json(json const& j, JacobianTE& m) {
  m.dt_dt = j.at(0).at(0).get<double>();
  m.dt_de = j.at(0).at(1).get<double>();
  m.de_dt = j.at(1).at(0).get<double>();
  m.de_de = j.at(1).at(1).get<double>();
}

inline void to_json(json& j, PeriodicOrbit const& o) {
  j = json::object();
  j["key"] = o.key;
  j["times"] = o.times;
  j["energies"] = o.energies;
  j["action"] = detail::num(o.action);
  j["morse_index"] = o.morse_index;
  j["hessian_eigenvalues"] = o.hessian_eigenvalues;
  j["monodromy"] = o.monodromy;
  j["monodromy_trace"] = o.monodromy_trace;
  j["monodromy_det"] = o.monodromy_det;
  j["stability"] = to_string(o.stability);
  j["residue"] = o.residue;
  j["residual"] = o.residual;
  j["primitive"] = o.primitive;
}

inline void from_json(json const& j, PeriodicOrbit& o) {
  o.key = j.at("key").get<OrbitKey>();
  o.times = j.at("times").get<std::vector<double>>();
  o.energies = j.at("energies").get<std::vector<double>>();
  o.action = detail::num_of(j.at("action"));
  o.morse_index = j.at("morse_index").get<int>();
  o.hessian_eigenvalues = j.at("hessian_eigenvalues").get<std::vector<double>>();
  o.monodromy = j.at("monodromy").get<JacobianTE>();
  o.monodromy_trace = j.at("monodromy_trace").get<double>();
  o.monodromy_det = j.at("monodromy_det").get<double>();
  o.stability = detail::stability_of(j.at("stability").get<std::string>());
  o.residue = j.at("residue").get<double>();
  o.residual = j.at("residual").get<double>();
  o.primitive = j.at("primitive").get<bool>();
}

inline void to_json(json& j, DegeneracyReport const& r) {
  j = json::object();
  j["key"] = r.key;
  j["kind"] = to_string(r.kind);
  j["orbits"] = r.orbits;
  j["curve_samples"] = r.curve_samples;
  j["curve_cos"] = r.curve_cos;
  j["curve_sin"] = r.curve_sin;
  j["curve_residual"] = r.curve_residual;
  j["instability_witness"] = r.instability_witness ? json(*r.instability_witness) : json(nullptr);
  j["theory_violation"] = r.theory_violation;
  j["below_threshold"] = r.below_threshold;
  j["e_lo"] = r.e_lo;
  j["e_hi"] = r.e_hi;
}

inline void from_json(json const& j, DegeneracyReport& r) {
  r.key = j.at("key").get<OrbitKey>();
  r.kind = detail::kind_of(j.at("kind").get<std::string>());
  r.orbits = j.at("orbits").get<std::vector<PeriodicOrbit>>();
  r.curve_samples = j.at("curve_samples").get<std::vector<EnergyState>>();
  r.curve_cos = j.at("curve_cos").get<std::vector<double>>();
  r.curve_sin = j.at("curve_sin").get<std::vector<double>>();
  r.curve_residual = j.at("curve_residual").get<double>();
  json const& w = j.at("instability_witness");
  r.instability_witness = w.is_null() ? std::nullopt : std::optional<int>(w.get<int>());
  r.theory_violation = j.at("theory_violation").get<bool>();
  r.below_threshold = j.at("below_threshold").get<bool>();
  r.e_lo = j.at("e_lo").get<double>();
  r.e_hi = j.at("e_hi").get<double>();
}

inline void to_json(json& j, TwistSample const& s) { j = json::array({s.t, s.e, detail::num(s.f_tilde)}); }
inline void from_json(json const& j, TwistSample& s) {
  s.t = j.at(0).get<double>();
  s.e = j.at(1).get<double>();
  s.f_tilde = detail::num_of(j.at(2));
}

inline void to_json(json& j, TwistReport const& r) {
  j = json::object();
  j["q"] = r.q;
  j["n_t"] = r.n_t;
  j["n_e"] = r.n_e;
  j["e_lo"] = r.e_lo;
  j["e_hi"] = r.e_hi;
  j["f_tilde_max"] = detail::num(r.f_tilde_max);
  j["bound_holds"] = r.bound_holds;
  j["e_q_threshold"] = detail::num(r.e_q_threshold);
  j["method_agreement"] = r.method_agreement;
  j["failed_nodes"] = r.failed_nodes;
  j["below_domain"] = r.below_domain;
  json rows = json::array();
  for (std::size_t k = 0; k < r.row_e.size(); ++k) {
    rows.push_back(json::array({r.row_e[k], detail::num(r.row_max[k])}));
  }
  j["rows"] = rows;
  j["samples"] = r.samples;
}

inline void from_json(json const& j, TwistReport& r) {
  r.q = j.at("q").get<int>();
  r.n_t = j.at("n_t").get<int>();
  r.n_e = j.at("n_e").get<int>();
  r.e_lo = j.at("e_lo").get<double>();
  r.e_hi = j.at("e_hi").get<double>();
  r.f_tilde_max = detail::num_of(j.at("f_tilde_max"));
  r.bound_holds = j.at("bound_holds").get<bool>();
  r.e_q_threshold = detail::num_of(j.at("e_q_threshold"));
  r.method_agreement = j.at("method_agreement").get<double>();
  r.failed_nodes = j.at("failed_nodes").get<int>();
  r.below_domain = j.at("below_domain").get<bool>();
  r.row_e.clear();
  r.row_max.clear();
  for (json const& row : j.at("rows")) {
    r.row_e.push_back(row.at(0).get<double>());
    r.row_max.push_back(detail::num_of(row.at(1)));
  }
  r.samples = j.at("samples").get<std::vector<TwistSample>>();
}

/// Pretty-printed JSON with a trailing newline.
inline std::string dump_report(json const& j) { return j.dump(2) + "\n"; }

/// %.17g; non-finite values become "nan", "inf" or "-inf".
inline std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_trajectory_csv(std::ostream& os, Trajectory const& traj) {
  os << "n,t,v,e,grazing_flag\n";
  for (TrajectoryPoint const& p : traj.points) {
    os << p.n << ',' << csv_number(p.t) << ',' << csv_number(p.v) << ',' << csv_number(p.e) << ','
       << (p.grazing ? 1 : 0) << '\n';
  }
}

inline void write_twist_csv(std::ostream& os, TwistReport const& r) {
  os << "t,e,f_tilde\n";
  for (TwistSample const& s : r.samples) {
    os << csv_number(s.t) << ',' << csv_number(s.e) << ',' << csv_number(s.f_tilde) << '\n';
  }
}

struct SweepRow {
  double amplitude = 0.0;
  OrbitKey key;
  SetKind kind = SetKind::Finite;
  int n_orbits = 0;
  /// Largest |trace| over the orbits; NaN for an empty set.
  double max_trace = std::numeric_limits<double>::quiet_NaN();
};

inline SweepRow sweep_row(double amplitude, DegeneracyReport const& r) {
  SweepRow row{amplitude, r.key, r.kind, static_cast<int>(r.orbits.size())};
  for (PeriodicOrbit const& o : r.orbits) {
    double const a = std::abs(o.monodromy_trace);
    row.max_trace = std::isnan(row.max_trace) ? a : std::max(row.max_trace, a);
  }
  return row;
}

inline void write_sweep_csv(std::ostream& os, std::vector<SweepRow> const& rows) {
  os << "amplitude,p,q,kind,n_orbits,max_trace\n";
  for (SweepRow const& r : rows) {
    os << csv_number(r.amplitude) << ',' << r.key.p << ',' << r.key.q << ',' << to_string(r.kind) << ','
       << r.n_orbits << ',' << csv_number(r.max_trace) << '\n';
  }
}

}  // namespace bounce
