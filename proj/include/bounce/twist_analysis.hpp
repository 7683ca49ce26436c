#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bounce/errors.hpp"
#include "bounce/impact_map.hpp"
#include "bounce/variational.hpp"

/**
 * @file twist_analysis.hpp
 *
 * @brief Twist of the q-th iterate and the a-priori orbit estimates.
 *
 * Writing dt_q/de = (2q / (g sqrt(2e))) (1 + ft_q), the q-th iterate keeps a uniform twist
 * while |ft_q| < 1/2. dt_q/de is computed three ways: the product of one-step Jacobians,
 * central differences, and the recurrence in the inertial velocity y = sqrt(2e) + f'(t):
 *
 *   t_i = t_{i-1} + (2/g) (y_{i-1} - f[t_{i-1}, t_i]),
 *   y_i = y_{i-1} - 2 f[t_{i-1}, t_i] + 2 f'(t_i),
 *
 * differentiated in y_0 at fixed t_0.
 */

namespace bounce {

enum class TwistMethod { ChainRule, Recurrence, FiniteDiff };

/// Domain floor e_# = (v_star + 4 q |f'|)^2 / 2 of the q-th iterate.
inline double iterate_energy_floor(BouncingBallMap const& map, int q) {
  double const v = map.params().v_star + 4.0 * q * map.profile().sup_norm(1);
  return 0.5 * v * v;
}

/// dt_q/de at (t, e). Throws DomainExit when the orbit leaves the domain.
inline double dtq_de(GeneratingContext const& ctx, double t, double e, int q, TwistMethod method) {
  BouncingBallMap const& map = ctx.map();
  if (q < 1) {
    throw std::invalid_argument("dtq_de: q must be >= 1");
  }
  switch (method) {
    case TwistMethod::ChainRule:
      return map.iterate({t, e}, q).jacobian.dt_de;
    case TwistMethod::FiniteDiff: {
      double const h = 1e-6 * std::max(1.0, e);
      return (map.iterate_state({t, e + h}, q).t - map.iterate_state({t, e - h}, q).t) / (2.0 * h);
    }
    case TwistMethod::Recurrence: {
      ForcingProfile const& f = map.profile();
      double const two_g = 2.0 / map.g();
      OrbitSegment const seg = map.iterate({t, e}, q);
      double dt = 0.0;
      double dy = 1.0;
      for (int i = 1; i <= q; ++i) {
        double const a = seg.states[static_cast<std::size_t>(i - 1)].t;
        double const b = seg.states[static_cast<std::size_t>(i)].t;
        auto const [d1, d2] = f.divided_difference_partials(a, b);
        double const dt_next = (dt * (1.0 - two_g * d1) + two_g * dy) / (1.0 + two_g * d2);
        dy = dy - 2.0 * (d1 * dt + d2 * dt_next) + 2.0 * f.values(b).ddf * dt_next;
        dt = dt_next;
      }
      return dt / std::sqrt(2.0 * e);
    }
  }
  throw std::invalid_argument("dtq_de: unknown method");
}

/// ft_q = (g sqrt(2e) / (2q)) dt_q/de - 1.
inline double f_tilde(BouncingBallMap const& map, double e, int q, double dtq) {
  return map.g() * std::sqrt(2.0 * e) / (2.0 * q) * dtq - 1.0;
}

struct TwistSample {
  double t = 0.0;
  double e = 0.0;
  /// NaN when the node failed.
  double f_tilde = 0.0;
};

struct TwistReport {
  int q = 1;
  int n_t = 0;
  int n_e = 0;
  double e_lo = 0.0;
  double e_hi = 0.0;
  double f_tilde_max = 0.0;
  bool bound_holds = false;
  /// Lowest sampled e from which every row up to e_hi satisfies |ft_q| < 1/2 (NaN if none).
  double e_q_threshold = std::numeric_limits<double>::quiet_NaN();
  /// Largest pairwise relative discrepancy between the three methods.
  double method_agreement = 0.0;
  /// Nodes where the orbit left the domain.
  int failed_nodes = 0;
  /// e_lo at or below e_#.
  bool below_domain = false;
  /// Per energy row: e and max_t |ft_q|.
  std::vector<double> row_e;
  std::vector<double> row_max;
  std::vector<TwistSample> samples;
};

/**
 * @brief |ft_q| < 1/2 on a grid: n_t points in [0, 1) times n_e log-spaced energies.
 *
 * Failed nodes make bound_holds false but do not throw.
 */
inline TwistReport twist_certificate(GeneratingContext const& ctx, int q, double e_lo, double e_hi, int grid_n = 32) {
  if (!(e_lo > 0.0) || !(e_hi >= e_lo) || grid_n < 2) {
    throw std::invalid_argument("twist_certificate: need 0 < e_lo <= e_hi and grid_n >= 2");
  }
  BouncingBallMap const& map = ctx.map();
  TwistReport rep;
  rep.q = q;
  rep.n_t = grid_n;
  rep.n_e = grid_n;
  rep.e_lo = e_lo;
  rep.e_hi = e_hi;
  rep.below_domain = e_lo <= iterate_energy_floor(map, q);
  for (int j = 0; j < grid_n; ++j) {
    double const e = e_lo * std::pow(e_hi / e_lo, static_cast<double>(j) / (grid_n - 1));
    double row = 0.0;
    for (int i = 0; i < grid_n; ++i) {
      double const t = static_cast<double>(i) / grid_n;
      TwistSample s{t, e, std::numeric_limits<double>::quiet_NaN()};
      try {
        double const a = dtq_de(ctx, t, e, q, TwistMethod::ChainRule);
        double const b = dtq_de(ctx, t, e, q, TwistMethod::Recurrence);
        double const c = dtq_de(ctx, t, e, q, TwistMethod::FiniteDiff);
        double const scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
        rep.method_agreement = std::max(
            rep.method_agreement, std::max({std::abs(a - b), std::abs(a - c), std::abs(b - c)}) / scale);
        s.f_tilde = f_tilde(map, e, q, a);
        row = std::max(row, std::abs(s.f_tilde));
      } catch (Error const&) {
        ++rep.failed_nodes;
        row = std::numeric_limits<double>::infinity();
      }
      rep.samples.push_back(s);
    }
    rep.row_e.push_back(e);
    rep.row_max.push_back(row);
    rep.f_tilde_max = std::max(rep.f_tilde_max, row);
  }
  rep.bound_holds = rep.failed_nodes == 0 && rep.f_tilde_max < 0.5;
  for (int j = grid_n - 1; j >= 0 && rep.row_max[static_cast<std::size_t>(j)] < 0.5; --j) {
    rep.e_q_threshold = rep.row_e[static_cast<std::size_t>(j)];
  }
  return rep;
}

struct AprioriReport {
  int n_max = 0;
  /// Smallest slack of 4 n |f'| - |sqrt(2 e_n) - sqrt(2 e_0)|.
  double drift_slack = std::numeric_limits<double>::infinity();
  /// Smallest slack of 4 n^2 |f'| / g - |t_n - t_0 - (2/g) n sqrt(2 e_0)|.
  double time_slack = std::numeric_limits<double>::infinity();
  /// Smallest slack of t_n - t_{n-1} - (2/g)(y_0 - (4n + 1) |f'|), y_0 = sqrt(2 e_0) + f'(t_0).
  double step_slack = std::numeric_limits<double>::infinity();
  int violations = 0;
  [[nodiscard]] bool ok() const noexcept { return violations == 0; }
};

/// Checks the three a-priori bound families along n_max steps from s0. Throws DomainExit.
inline AprioriReport apriori_bounds_check(BouncingBallMap const& map, EnergyState s0, int n_max) {
  AprioriReport rep;
  rep.n_max = n_max;
  double const df = map.profile().sup_norm(1);
  double const g = map.g();
  double const v0 = std::sqrt(2.0 * s0.e);
  double const y0 = v0 + map.profile().values(s0.t).df;
  EnergyState prev = s0;
  EnergyState cur = s0;
  for (int n = 1; n <= n_max; ++n) {
    cur = map.iterate_state(prev, 1);
    double const round = 1e-12 * (1.0 + std::abs(cur.t - s0.t) + v0);
    double const drift = 4.0 * n * df - std::abs(std::sqrt(2.0 * cur.e) - v0);
    double const time = 4.0 * n * n * df / g - std::abs(cur.t - s0.t - 2.0 / g * n * v0);
    double const step = cur.t - prev.t - 2.0 / g * (y0 - (4.0 * n + 1.0) * df);
    rep.drift_slack = std::min(rep.drift_slack, drift);
    rep.time_slack = std::min(rep.time_slack, time);
    rep.step_slack = std::min(rep.step_slack, step);
    rep.violations += (drift < -round) + (time < -round) + (step < -round);
    prev = cur;
  }
  return rep;
}

}  // namespace bounce
