// bounce-lab: command-line front end for the bouncing-ball map library.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "bounce/commands.hpp"
#include "bounce/config.hpp"
#include "bounce/report_io.hpp"

namespace {

std::string config_help() {
  bounce::OrbitTolerances const t;
  bounce::SweepGrid const grid;
  bounce::ProbeOptions const probe;
  bounce::TwistSettings const twist;
  auto n = [](double x) { return bounce::csv_number(x); };
  std::ostringstream os;
  os << "Config (JSON). Only \"g\" is required; unknown fields are rejected.\n"
     << "  g                  gravity, > 0\n"
     << "  v_star             velocity threshold (default 4 |f'| + 1)\n"
     << "  forcing.cos        [a0, a1, ...] for a_k cos(2 pi k t) (default [])\n"
     << "  forcing.sin        [b1, b2, ...] for b_k sin(2 pi k t) (default [])\n"
     << "  keys               [[p, q], ...], gcd(p, q) = 1; q bounces per p periods\n"
     << "  initial_conditions [{\"t\": 0, \"v\": 1, \"steps\": 10}, ...] (simulate)\n"
     << "  twist.q            default [1, 2, 3]\n"
     << "  twist.e_lo, e_hi   default " << n(twist.e_lo) << ", " << n(twist.e_hi) << "\n"
     << "  twist.grid_n       default " << twist.grid_n << "\n"
     << "  sweep.amplitudes   [a, ...]: forcing a cos(2 pi k t) (sweep)\n"
     << "  sweep.harmonic     k, default 1\n"
     << "  grid.n_t, n_e      default " << grid.n_t << ", " << grid.n_e << "\n"
     << "  grid.e_lo, e_hi    default: window around the resonant energy\n"
     << "  seed               probe seed, default " << probe.seed << "\n"
     << "  probe.enabled      Lyapunov probe of hyperbolic orbits in find-orbits, default false\n"
     << "  probe.n_initial    default " << probe.n_initial << "\n"
     << "  probe.radius       default " << n(probe.radius) << "\n"
     << "  probe.periods      default " << probe.periods << "\n"
     << "  probe.escape       default " << n(probe.escape) << "\n"
     << "  probe.fit_lo, fit_hi default " << n(probe.fit_lo) << ", " << n(probe.fit_hi) << "\n"
     << "  tolerances.newton_tol          " << n(t.newton_tol) << "\n"
     << "  tolerances.polish_tol          " << n(t.polish_tol) << "\n"
     << "  tolerances.newton_max_iter     " << t.newton_max_iter << "\n"
     << "  tolerances.singular_cond       " << n(t.singular_cond) << "\n"
     << "  tolerances.parabolic_tol       " << n(t.parabolic_tol) << "\n"
     << "  tolerances.dedup_tol           " << n(t.dedup_tol) << "\n"
     << "  tolerances.morse_zero          " << n(t.morse_zero) << "\n"
     << "  tolerances.min_grad_tol        " << n(t.min_grad_tol) << "\n"
     << "  tolerances.minimax_grad_tol    " << n(t.minimax_grad_tol) << "\n"
     << "  tolerances.string_nodes        " << t.string_nodes << "\n"
     << "  tolerances.string_max_iter     " << t.string_max_iter << "\n"
     << "  tolerances.curve_min_zeros     " << t.curve_min_zeros << "\n"
     << "  tolerances.curve_fill          " << n(t.curve_fill) << "\n"
     << "  tolerances.curve_check_samples " << t.curve_check_samples << "\n"
     << "  tolerances.curve_tol           " << n(t.curve_tol) << "\n"
     << "  output_dir         default \".\" (overridden by --out)\n"
     << "\nExit codes: 0 ok, 1 solver failure, 2 config error, 3 theory-violation diagnostic.\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bouncing-ball map lab: simulation, periodic orbits, twist checks, sweeps."};
  app.footer(config_help());
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  for (auto [name, desc] : {std::pair{"simulate", "Write trajectory_<i>.csv per initial condition"},
                            std::pair{"find-orbits", "Write orbits_p<p>_q<q>.json per key and a summary"},
                            std::pair{"twist-check", "Write twist_q<q>.json and twist_q<q>.csv"},
                            std::pair{"sweep", "Write sweep_index.csv over amplitudes and keys"}}) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const rc = app.exit(e);
    return rc == 0 ? 0 : bounce::exit_config;
  }

  bounce::RunConfig cfg;
  try {
    cfg = bounce::load_config(config_path);
  } catch (bounce::ConfigError const& e) {
    std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
    return bounce::exit_config;
  }
  std::string const out = out_dir.empty() ? cfg.output_dir : out_dir;
  std::string const command = app.get_subcommands().front()->get_name();
  return bounce::run_command(command, cfg, out, std::cout, std::cerr);
}
