#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bounce/config.hpp"
#include "bounce/errors.hpp"
#include "bounce/orbit_finder.hpp"
#include "bounce/report_io.hpp"
#include "bounce/twist_analysis.hpp"
#include "bounce/variational.hpp"

/**
 * @file commands.hpp
 *
 * @brief The four bounce-lab subcommands. Each writes its files under `out` and a
 * human-readable summary to `log`, and returns the process exit code.
 */

namespace bounce {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_theory = 3 };

namespace detail {

inline void write_file(std::filesystem::path const& path, std::string const& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << content;
}

inline std::string fmt(double x, int digits = 10) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string key_name(OrbitKey k) { return "(" + std::to_string(k.p) + "," + std::to_string(k.q) + ")"; }

inline void require_keys(RunConfig const& cfg) {
  if (cfg.keys.empty()) {
    throw ConfigError("keys", "empty key list");
  }
}

}  // namespace detail

/// Writes trajectory_<i>.csv for every initial condition.
inline int cmd_simulate(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log) {
  if (cfg.initial_conditions.empty()) {
    throw ConfigError("initial_conditions", "simulate needs at least one initial condition");
  }
  ForcingProfile const f = cfg.profile();
  BouncingBallMap const map(f, cfg.params(f));
  std::filesystem::create_directories(out);
  for (std::size_t i = 0; i < cfg.initial_conditions.size(); ++i) {
    InitialCondition const& ic = cfg.initial_conditions[i];
    Trajectory const traj = map.simulate_bouncing({ic.t, ic.v}, ic.steps);
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    std::string const name = "trajectory_" + std::to_string(i) + ".csv";
    detail::write_file(out / name, csv.str());
    log << name << ": " << ic.steps << " steps from t=" << detail::fmt(ic.t) << " v=" << detail::fmt(ic.v);
    if (traj.first_grazing) {
      log << ", grazing from step " << *traj.first_grazing;
    }
    log << (traj.all_falling ? "" : ", some impact while rising") << "\n";
  }
  return exit_ok;
}

/// Variational cross-check for the summary: minimizer and mountain pass from an equispaced seed.
inline void variational_summary(OrbitKey key, GeneratingContext const& ctx, DegeneracyReport const& rep,
                                OrbitTolerances const& tol, std::ostream& log) {
  auto matched = [&](PeriodicOrbit const& o) {
    for (PeriodicOrbit const& r : rep.orbits) {
      if (same_orbit(o, r, 1e-6)) return true;
    }
    return false;
  };
  try {
    PeriodicOrbit const mn = minimize_action(key, ctx, equispaced_configuration(key, 0.3), tol);
    log << "  action minimizer: W=" << detail::fmt(mn.action) << " morse=" << mn.morse_index
        << (rep.kind == SetKind::Finite ? (matched(mn) ? " (in sweep set)" : " (NOT in sweep set)") : "") << "\n";
    try {
      PeriodicOrbit up = mn;
      up.times = neighbor_translate(mn.configuration()).times;
      PeriodicOrbit const mm = minimax_orbit(key, ctx, mn, up, tol);
      log << "  minimax: W=" << detail::fmt(mm.action) << " morse=" << mm.morse_index
          << (matched(mm) ? " (in sweep set)" : " (NOT in sweep set)") << "\n";
    } catch (PathCollapse const& err) {
      log << "  minimax: path collapsed (" << err.what() << ")\n";
    }
  } catch (Error const& err) {
    log << "  variational: unavailable (" << err.what() << ")\n";
  }
}

/// Writes orbits_p<p>_q<q>.json per key. Exit 3 on a theory-violation diagnostic.
inline int cmd_find_orbits(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log) {
  detail::require_keys(cfg);
  ForcingProfile const f = cfg.profile();
  GeneratingContext const ctx(BouncingBallMap(f, cfg.params(f)));
  double const alpha = existence_threshold(f, ctx.params());
  std::filesystem::create_directories(out);
  bool violation = false;
  for (OrbitKey const key : cfg.keys) {
    DegeneracyReport const rep = sweep_enumerate(key, ctx, cfg.grid, cfg.tolerances);
    std::string const name = "orbits_p" + std::to_string(key.p) + "_q" + std::to_string(key.q) + ".json";
    detail::write_file(out / name, dump_report(json(rep)));

    log << "key " << detail::key_name(key) << ": " << to_string(rep.kind) << ", " << rep.orbits.size()
        << (rep.kind == SetKind::Finite ? " orbit(s)" : " sampled zeros") << " -> " << name << "\n";
    if (key.ratio() <= alpha) {
      log << "  warning: p/q = " << detail::fmt(key.ratio()) << " <= alpha = " << detail::fmt(alpha)
          << "; existence is not guaranteed\n";
    }
    if (rep.kind == SetKind::Degenerate) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (EnergyState const& s : rep.curve_samples) {
        lo = std::min(lo, s.e);
        hi = std::max(hi, s.e);
      }
      log << "  curve e(t) in [" << detail::fmt(lo) << ", " << detail::fmt(hi)
          << "], residual " << detail::fmt(rep.curve_residual, 3) << "\n";
    } else {
      log << "  #  t0            e0            class       trace         action        morse\n";
      for (std::size_t i = 0; i < rep.orbits.size(); ++i) {
        PeriodicOrbit const& o = rep.orbits[i];
        char line[160];
        std::snprintf(line, sizeof line, "  %-2zu %-13.10g %-13.10g %-11s %-13.10g %-13.10g %d\n", i, o.times[0],
                      o.energies[0], to_string(o.stability), o.monodromy_trace, o.action, o.morse_index);
        log << line;
      }
    }
    variational_summary(key, ctx, rep, cfg.tolerances, log);
    if (cfg.probe_enabled && rep.kind == SetKind::Finite) {
      for (std::size_t i = 0; i < rep.orbits.size(); ++i) {
        if (rep.orbits[i].stability != Stability::Hyperbolic) continue;
        StabilityReport const s = classify_stability(rep.orbits[i], ctx, cfg.probe, cfg.tolerances);
        log << "  probe orbit " << i << ": growth " << detail::fmt(s.growth_rate, 6) << " vs ln|lambda| "
            << detail::fmt(s.expected_rate, 6) << ", max deviation " << detail::fmt(s.max_deviation, 3) << "\n";
      }
    }
    if (rep.theory_violation) {
      log << "  THEORY VIOLATION: finite set with only Elliptic orbits\n";
      violation = true;
    }
  }
  return violation ? exit_theory : exit_ok;
}

/// Writes twist_q<q>.json and twist_q<q>.csv per requested iterate.
inline int cmd_twist_check(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log) {
  ForcingProfile const f = cfg.profile();
  GeneratingContext const ctx(BouncingBallMap(f, cfg.params(f)));
  std::filesystem::create_directories(out);
  log << "|f''| = " << detail::fmt(f.sup_norm(2)) << ", e in [" << detail::fmt(cfg.twist.e_lo) << ", "
      << detail::fmt(cfg.twist.e_hi) << "]\n";
  for (int q : cfg.twist.q) {
    TwistReport const r = twist_certificate(ctx, q, cfg.twist.e_lo, cfg.twist.e_hi, cfg.twist.grid_n);
    std::string const stem = "twist_q" + std::to_string(q);
    detail::write_file(out / (stem + ".json"), dump_report(json(r)));
    std::ostringstream csv;
    write_twist_csv(csv, r);
    detail::write_file(out / (stem + ".csv"), csv.str());
    log << "q=" << q << ": max|ft|=" << detail::fmt(r.f_tilde_max, 6) << " bound " << (r.bound_holds ? "holds" : "fails")
        << ", threshold e=" << detail::fmt(r.e_q_threshold, 6) << ", method agreement "
        << detail::fmt(r.method_agreement, 3) << (r.failed_nodes ? ", failed nodes " + std::to_string(r.failed_nodes) : "")
        << (r.below_domain ? ", e_lo below e_#" : "") << "\n";
  }
  return exit_ok;
}

/// Writes sweep_index.csv over amplitudes (outer) and keys (inner), forcing a cos(2 pi k t).
inline int cmd_sweep(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log) {
  detail::require_keys(cfg);
  if (cfg.sweep.amplitudes.empty()) {
    throw ConfigError("sweep.amplitudes", "sweep needs at least one amplitude");
  }
  std::filesystem::create_directories(out);
  std::vector<SweepRow> rows;
  bool violation = false;
  for (double a : cfg.sweep.amplitudes) {
    ForcingProfile const f = ForcingProfile::cosine(a, cfg.sweep.harmonic);
    GeneratingContext const ctx(BouncingBallMap(f, cfg.params(f)));
    for (OrbitKey const key : cfg.keys) {
      DegeneracyReport const rep = sweep_enumerate(key, ctx, cfg.grid, cfg.tolerances);
      rows.push_back(sweep_row(a, rep));
      log << "a=" << detail::fmt(a) << " key " << detail::key_name(key) << ": " << to_string(rep.kind) << ", "
          << rep.orbits.size() << (rep.theory_violation ? " THEORY VIOLATION" : "") << "\n";
      violation = violation || rep.theory_violation;
    }
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  detail::write_file(out / "sweep_index.csv", csv.str());
  return violation ? exit_theory : exit_ok;
}

/// Runs a subcommand by name, mapping errors to exit codes. Diagnostics go to `err`.
inline int run_command(std::string const& name, RunConfig const& cfg, std::filesystem::path const& out,
                       std::ostream& log, std::ostream& err) {
  try {
    if (name == "simulate") return cmd_simulate(cfg, out, log);
    if (name == "find-orbits") return cmd_find_orbits(cfg, out, log);
    if (name == "twist-check") return cmd_twist_check(cfg, out, log);
    if (name == "sweep") return cmd_sweep(cfg, out, log);
    err << "unknown command: " << name << "\n";
    return exit_config;
  } catch (ConfigError const& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (std::exception const& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace bounce
