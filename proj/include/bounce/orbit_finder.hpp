#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "bounce/errors.hpp"
#include "bounce/impact_map.hpp"
#include "bounce/variational.hpp"

/**
 * @file orbit_finder.hpp
 *
 * @brief (p, q)-periodic bouncing motions: q impacts per period, time shift p.
 *
 * A (p, q) orbit is a fixed point of sigma^{-p} Phi^q on the lift, sigma(t, e) = (t + 1, e).
 * Orbits are searched three ways: Newton on the fixed-point residual, minimization of the
 * periodic action W, and a climbing-string mountain pass between neighbouring minima.
 */

namespace bounce {

enum class Stability { Elliptic, Hyperbolic, Parabolic };

inline const char* to_string(Stability s) noexcept {
  switch (s) {
    case Stability::Elliptic:
      return "Elliptic";
    case Stability::Hyperbolic:
      return "Hyperbolic";
    case Stability::Parabolic:
      return "Parabolic";
  }
  return "?";
}

struct OrbitKey {
  int p = 1;
  int q = 1;

  [[nodiscard]] bool coprime() const noexcept { return std::gcd(p, q) == 1; }
  [[nodiscard]] double ratio() const noexcept { return static_cast<double>(p) / q; }

  /// Throws std::invalid_argument unless p, q >= 1 and gcd(p, q) = 1.
  void validate() const {
    if (p < 1 || q < 1) {
      throw std::invalid_argument("orbit key needs p >= 1 and q >= 1");
    }
    if (!coprime()) {
      throw std::invalid_argument("orbit key (" + std::to_string(p) + ", " + std::to_string(q) + ") is not coprime");
    }
  }

  friend bool operator==(OrbitKey const&, OrbitKey const&) = default;
};

struct OrbitTolerances {
  double newton_tol = 1e-10;
  double polish_tol = 1e-12;
  int newton_max_iter = 50;
  double singular_cond = 1e12;
  double parabolic_tol = 1e-6;
  double dedup_tol = 1e-8;
  double morse_zero = 1e-9;
  double min_grad_tol = 1e-9;
  double minimax_grad_tol = 1e-8;
  int string_nodes = 33;
  int string_max_iter = 20000;
  int curve_min_zeros = 50;
  double curve_fill = 0.05;
  int curve_check_samples = 256;
  double curve_tol = 1e-8;
};

struct PeriodicOrbit {
  OrbitKey key;
  /// Impact times t_0 < ... < t_{q-1} < t_0 + p; t_0 is the point nearest above 0 mod 1,
  /// in [-1e-10, 1 - 1e-10).
  std::vector<double> times;
  std::vector<double> energies;
  /// W of the configuration; NaN when some segment is outside the admissible cone.
  double action = std::numeric_limits<double>::quiet_NaN();
  /// Negative Hessian eigenvalues of W; -1 when W is unavailable.
  int morse_index = -1;
  std::vector<double> hessian_eigenvalues;
  JacobianTE monodromy;
  double monodromy_trace = 0.0;
  double monodromy_det = 0.0;
  Stability stability = Stability::Parabolic;
  double residue = 0.0;
  /// |sigma^{-p} Phi^q(x) - x| at the stored point.
  double residual = 0.0;
  /// False when the orbit already closes after fewer impacts.
  bool primitive = true;

  [[nodiscard]] EnergyState point(int i = 0) const {
    return {times[static_cast<std::size_t>(i)], energies[static_cast<std::size_t>(i)]};
  }
  [[nodiscard]] ActionConfiguration configuration() const { return {times, key.p, key.q}; }
};

inline Stability classify_trace(double trace, double tol_par = 1e-6) noexcept {
  if (std::abs(std::abs(trace) - 2.0) <= tol_par) {
    return Stability::Parabolic;
  }
  return std::abs(trace) < 2.0 ? Stability::Elliptic : Stability::Hyperbolic;
}

/// alpha = 1 + (4/g)|f'| + (2/g) sqrt(2 e_star); existence is guaranteed for p/q > alpha.
inline double existence_threshold(ForcingProfile const& profile, MapParams const& params) {
  return 1.0 + 4.0 * profile.sup_norm(1) / params.g + 2.0 * std::sqrt(2.0 * params.e_star) / params.g;
}

/// Fixed-point residual sigma^{-p} Phi^q(x) - x and its Jacobian M - I.
struct FixedPointEval {
  Eigen::Vector2d residual;
  JacobianTE monodromy;
  OrbitSegment segment;
};

inline FixedPointEval fixed_point_eval(BouncingBallMap const& map, OrbitKey key, EnergyState x) {
  FixedPointEval out;
  out.segment = map.iterate(x, key.q);
  EnergyState const& y = out.segment.back();
  out.residual = {y.t - key.p - x.t, y.e - x.e};
  out.monodromy = out.segment.jacobian;
  return out;
}

namespace detail {

inline double frac_key(double t) {
  double const r = t - std::floor(t);
  return r > 1.0 - 1e-10 ? r - 1.0 : r;
}

inline double cyclic_distance(double a, double b) {
  double const d = a - b;
  return std::abs(d - std::round(d));
}

}  // namespace detail

/**
 * @brief Assemble a PeriodicOrbit from a fixed point of sigma^{-p} Phi^q.
 *
 * The orbit is rotated so that its first point has the smallest t mod 1 (times within 1e-10
 * below an integer count as that integer), then shifted by whole periods so t_0 is near [0, 1).
 */
inline PeriodicOrbit make_periodic_orbit(GeneratingContext const& ctx, OrbitKey key, EnergyState x,
                                         OrbitTolerances const& tol = {}) {
  BouncingBallMap const& map = ctx.map();
  OrbitSegment const first = map.iterate(x, key.q);
  int best = 0;
  for (int i = 1; i < key.q; ++i) {
    if (detail::frac_key(first.states[static_cast<std::size_t>(i)].t) <
        detail::frac_key(first.states[static_cast<std::size_t>(best)].t)) {
      best = i;
    }
  }
  EnergyState start = first.states[static_cast<std::size_t>(best)];
  start.t -= std::floor(start.t + 1e-10);

  FixedPointEval const ev = fixed_point_eval(map, key, start);
  PeriodicOrbit orb;
  orb.key = key;
  for (int i = 0; i < key.q; ++i) {
    orb.times.push_back(ev.segment.states[static_cast<std::size_t>(i)].t);
    orb.energies.push_back(ev.segment.states[static_cast<std::size_t>(i)].e);
  }
  orb.residual = ev.residual.norm();
  orb.monodromy = ev.monodromy;
  orb.monodromy_trace = ev.monodromy.trace();
  orb.monodromy_det = ev.monodromy.det();
  orb.stability = classify_trace(orb.monodromy_trace, tol.parabolic_tol);
  orb.residue = (2.0 - orb.monodromy_trace) / 4.0;

  for (int qq = 1; qq < key.q; ++qq) {
    if (key.q % qq != 0 || (key.p * qq) % key.q != 0) {
      continue;
    }
    EnergyState const& s = ev.segment.states[static_cast<std::size_t>(qq)];
    double const pp = static_cast<double>(key.p * qq / key.q);
    if (std::hypot(s.t - pp - start.t, s.e - start.e) < tol.dedup_tol) {
      orb.primitive = false;
      break;
    }
  }

  ActionConfiguration const cfg = orb.configuration();
  if (admissible(cfg, ctx)) {
    orb.action = action_W(cfg, ctx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> const eig(action_hess(cfg, ctx));
    orb.morse_index = 0;
    for (int i = 0; i < key.q; ++i) {
      double const lam = eig.eigenvalues()[i];
      orb.hessian_eigenvalues.push_back(lam);
      if (lam < -tol.morse_zero) {
        ++orb.morse_index;
      }
    }
  }
  return orb;
}

/// True when two orbits coincide modulo sigma and cyclic relabelling.
inline bool same_orbit(PeriodicOrbit const& a, PeriodicOrbit const& b, double tol = 1e-8) {
  if (a.key != b.key) {
    return false;
  }
  for (int i = 0; i < a.key.q; ++i) {
    if (detail::cyclic_distance(a.times[static_cast<std::size_t>(i)], b.times[0]) < tol &&
        std::abs(a.energies[static_cast<std::size_t>(i)] - b.energies[0]) < tol) {
      return true;
    }
  }
  return false;
}

enum class NewtonStatus { Converged, SingularJacobian, NoConvergence };

inline const char* to_string(NewtonStatus s) noexcept {
  switch (s) {
    case NewtonStatus::Converged:
      return "Converged";
    case NewtonStatus::SingularJacobian:
      return "SingularJacobian";
    case NewtonStatus::NoConvergence:
      return "NoConvergence";
  }
  return "?";
}

struct NewtonResult {
  NewtonStatus status = NewtonStatus::NoConvergence;
  /// Present whenever the residual reached the tolerance (also for SingularJacobian).
  std::optional<PeriodicOrbit> orbit;
  EnergyState point;
  double residual = std::numeric_limits<double>::infinity();
  double condition = 0.0;
  int iterations = 0;
  /// p/q <= alpha: the search ran but existence is not guaranteed.
  bool below_threshold = false;
};

/**
 * @brief Newton iteration on sigma^{-p} Phi^q(x) - x with a backtracking line search.
 *
 * Steps use the pseudo-inverse of M - I, so the integrable family (where M - I has rank one)
 * still converges; a condition number above tol.singular_cond is reported as SingularJacobian.
 */
inline NewtonResult newton_orbit(OrbitKey key, EnergyState seed, GeneratingContext const& ctx,
                                 OrbitTolerances const& tol = {}) {
  BouncingBallMap const& map = ctx.map();
  NewtonResult res;
  res.below_threshold = key.ratio() <= existence_threshold(ctx.profile(), ctx.params());
  auto eval = [&](EnergyState x) -> std::optional<FixedPointEval> {
    if (!(x.e > 0.0) || !std::isfinite(x.t) || !std::isfinite(x.e)) {
      return std::nullopt;
    }
    try {
      return fixed_point_eval(map, key, x);
    } catch (Error const&) {
      return std::nullopt;
    }
  };

  EnergyState x = seed;
  std::optional<FixedPointEval> cur = eval(x);
  if (!cur) {
    return res;
  }
  double r = cur->residual.norm();
  for (; res.iterations < tol.newton_max_iter && r >= tol.polish_tol; ++res.iterations) {
    JacobianTE const& M = cur->monodromy;
    Eigen::Matrix2d J;
    J << M.dt_dt - 1.0, M.dt_de, M.de_dt, M.de_de - 1.0;
    Eigen::JacobiSVD<Eigen::Matrix2d> const svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector2d const sv = svd.singularValues();
    Eigen::Vector2d coef = svd.matrixU().transpose() * (-cur->residual);
    for (int i = 0; i < 2; ++i) {
      coef[i] = sv[i] > sv[0] * 1e-13 && sv[i] > 0.0 ? coef[i] / sv[i] : 0.0;
    }
    Eigen::Vector2d const dx = svd.matrixV() * coef;

    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, lambda *= 0.5) {
      EnergyState const trial{x.t + lambda * dx[0], x.e + lambda * dx[1]};
      std::optional<FixedPointEval> next = eval(trial);
      if (next && next->residual.norm() < (1.0 - 1e-4 * lambda) * r) {
        x = trial;
        cur = std::move(next);
        r = cur->residual.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
  }

  JacobianTE const& M = cur->monodromy;
  Eigen::Matrix2d J;
  J << M.dt_dt - 1.0, M.dt_de, M.de_dt, M.de_de - 1.0;
  Eigen::Vector2d const sv = Eigen::JacobiSVD<Eigen::Matrix2d>(J).singularValues();
  res.condition = sv[1] > 0.0 ? sv[0] / sv[1] : std::numeric_limits<double>::infinity();
  res.point = x;
  res.residual = r;
  if (r < tol.newton_tol) {
    res.status = res.condition > tol.singular_cond ? NewtonStatus::SingularJacobian : NewtonStatus::Converged;
    res.orbit = make_periodic_orbit(ctx, key, x, tol);
  }
  return res;
}

/// Equispaced configuration t_i = t0 + i p / q.
inline ActionConfiguration equispaced_configuration(OrbitKey key, double t0) {
  std::vector<double> t;
  for (int i = 0; i < key.q; ++i) {
    t.push_back(t0 + static_cast<double>(i) * key.p / key.q);
  }
  return {std::move(t), key.p, key.q};
}

/**
 * @brief The nearest translate above a configuration in the Aubry order.
 *
 * Returns s_i = t_{i+k} - m with k p - m q = 1, which for a (p, q) configuration is the
 * smallest relabelled translate lying above it (shift by one period when q = 1).
 */
inline ActionConfiguration neighbor_translate(ActionConfiguration const& cfg) {
  int k = 0;
  while ((static_cast<long long>(k) * cfg.p - 1) % cfg.q != 0) {
    ++k;
    if (k > cfg.q) {
      throw std::invalid_argument("neighbor_translate: p and q must be coprime");
    }
  }
  int const m = static_cast<int>((static_cast<long long>(k) * cfg.p - 1) / cfg.q);
  std::vector<double> t;
  for (int i = 0; i < cfg.q; ++i) {
    t.push_back(cfg.at(i + k) - m);
  }
  return {std::move(t), cfg.p, cfg.q};
}

namespace detail {

inline Eigen::VectorXd to_vec(ActionConfiguration const& c) {
  return Eigen::Map<const Eigen::VectorXd>(c.times.data(), c.q);
}

inline ActionConfiguration from_vec(Eigen::VectorXd const& v, int p, int q) {
  return {std::vector<double>(v.data(), v.data() + v.size()), p, q};
}

inline std::optional<double> try_action(ActionConfiguration const& c, GeneratingContext const& ctx) {
  if (!admissible(c, ctx)) {
    return std::nullopt;
  }
  return action_W(c, ctx);
}

// Map-Newton polish from the state induced by a configuration; falls back to the configuration.
inline PeriodicOrbit polish_configuration(ActionConfiguration const& cfg, GeneratingContext const& ctx,
                                          OrbitTolerances const& tol) {
  OrbitKey const key{cfg.p, cfg.q};
  double const t0 = cfg.at(0);
  EnergyState const x{t0, -ctx.partials(t0, cfg.at(1)).h1};
  NewtonResult const nr = newton_orbit(key, x, ctx, tol);
  if (!nr.orbit) {
    throw NoConvergence("map-Newton polish failed from critical configuration (residual " +
                        std::to_string(nr.residual) + ")");
  }
  return *nr.orbit;
}

}  // namespace detail

/**
 * @brief Minimize W from an admissible seed configuration (Levenberg-Marquardt with line search).
 *
 * Stops when |grad W|_inf < tol.min_grad_tol, then polishes the induced state with map Newton.
 */
inline PeriodicOrbit minimize_action(OrbitKey key, GeneratingContext const& ctx, ActionConfiguration const& seed,
                                     OrbitTolerances const& tol = {}) {
  if (seed.p != key.p || seed.q != key.q) {
    throw std::invalid_argument("minimize_action: seed does not match key");
  }
  for (int i = 0; i < seed.q; ++i) {
    ctx.check_admissible(seed.at(i), seed.at(i + 1));
  }
  int const q = key.q;
  Eigen::VectorXd x = detail::to_vec(seed);
  double W = action_W(seed, ctx);
  double mu = 0.0;
  bool done = false;
  for (int it = 0; it < 500; ++it) {
    ActionConfiguration const cfg = detail::from_vec(x, key.p, q);
    Eigen::VectorXd const g = action_grad(cfg, ctx);
    if (g.lpNorm<Eigen::Infinity>() < tol.min_grad_tol) {
      done = true;
      break;
    }
    Eigen::MatrixXd const H = action_hess(cfg, ctx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> const eig(H);
    double const lmin = eig.eigenvalues().minCoeff();
    double const scale = std::max(1e-12, eig.eigenvalues().cwiseAbs().maxCoeff());
    double const shift = (lmin > 1e-6 * scale ? 0.0 : -lmin + 0.1 * scale) + mu;
    Eigen::MatrixXd const A = H + shift * Eigen::MatrixXd::Identity(q, q);
    Eigen::VectorXd const dx = A.ldlt().solve(-g);
    double const gnorm = g.lpNorm<Eigen::Infinity>();
    if (shift == 0.0 && gnorm < 1e-6) {
      // Close to a nondegenerate minimum W is at round-off level; judge Newton steps by the gradient.
      ActionConfiguration const tc = detail::from_vec(x + dx, key.p, q);
      if (admissible(tc, ctx) && action_grad(tc, ctx).lpNorm<Eigen::Infinity>() < gnorm) {
        x += dx;
        W = action_W(tc, ctx);
        continue;
      }
    }
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls, lambda *= 0.5) {
      Eigen::VectorXd const trial = x + lambda * dx;
      std::optional<double> const Wt = detail::try_action(detail::from_vec(trial, key.p, q), ctx);
      if (Wt && *Wt < W + 1e-4 * lambda * g.dot(dx)) {
        x = trial;
        W = *Wt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      mu = std::max(10.0 * mu, 1e-3 * scale);
      if (mu > 1e12 * scale) {
        break;
      }
      continue;
    }
    mu *= 0.1;
  }
  if (!done) {
    throw NoConvergence("minimize_action: gradient did not reach tolerance");
  }
  return detail::polish_configuration(detail::from_vec(x, key.p, q), ctx, tol);
}

/**
 * @brief Mountain-pass orbit between two minima of W by a climbing string.
 *
 * The string has tol.string_nodes nodes; all nodes except the highest descend along -grad W,
 * the highest follows grad W reflected along the string tangent, and both sub-strings are
 * re-spaced by arclength every step. Near the saddle a Newton step on grad W = 0 finishes.
 * Throws PathCollapse when the path has no barrier above its endpoints.
 */
inline PeriodicOrbit minimax_orbit(OrbitKey key, GeneratingContext const& ctx, PeriodicOrbit const& min1,
                                   PeriodicOrbit const& min2, OrbitTolerances const& tol = {}) {
  int const q = key.q;
  int const n = tol.string_nodes;
  Eigen::VectorXd const a = detail::to_vec(min1.configuration());
  Eigen::VectorXd const b = detail::to_vec(min2.configuration());
  if ((a - b).norm() < 1e-8) {
    throw PathCollapse("minimax_orbit: endpoints coincide");
  }
  double const Wa = action_W(min1.configuration(), ctx);
  double const Wb = action_W(min2.configuration(), ctx);
  double const Wend = std::max(Wa, Wb);
  double const flat = 1e-12 * (1.0 + std::abs(Wend));

  std::vector<Eigen::VectorXd> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = a + (b - a) * (static_cast<double>(i) / (n - 1));
  }

  auto cfg_of = [&](Eigen::VectorXd const& v) { return detail::from_vec(v, key.p, q); };
  auto require_admissible = [&](Eigen::VectorXd const& v) {
    ActionConfiguration const c = cfg_of(v);
    if (!admissible(c, ctx)) {
      throw InadmissibleSegment("minimax_orbit: string left the admissible cone");
    }
    return c;
  };

  double L = 0.0;
  for (auto const& v : nodes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> const eig(action_hess(require_admissible(v), ctx));
    L = std::max(L, eig.eigenvalues().cwiseAbs().maxCoeff());
  }
  double const tau = 0.5 / std::max(L, 1e-14);

  auto respace = [&](int lo, int hi) {
    std::vector<double> s(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (int i = lo + 1; i <= hi; ++i) {
      s[static_cast<std::size_t>(i - lo)] =
          s[static_cast<std::size_t>(i - lo - 1)] + (nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(i - 1)]).norm();
    }
    double const total = s.back();
    if (!(total > 0.0)) {
      return;
    }
    std::vector<Eigen::VectorXd> out(nodes.begin() + lo, nodes.begin() + hi + 1);
    int seg = 0;
    for (int i = lo + 1; i < hi; ++i) {
      double const target = total * (i - lo) / (hi - lo);
      while (seg + 1 < hi - lo && s[static_cast<std::size_t>(seg + 1)] < target) {
        ++seg;
      }
      double const len = s[static_cast<std::size_t>(seg + 1)] - s[static_cast<std::size_t>(seg)];
      double const w = len > 0.0 ? (target - s[static_cast<std::size_t>(seg)]) / len : 0.0;
      out[static_cast<std::size_t>(i - lo)] = nodes[static_cast<std::size_t>(lo + seg)] +
                                              w * (nodes[static_cast<std::size_t>(lo + seg + 1)] - nodes[static_cast<std::size_t>(lo + seg)]);
    }
    std::copy(out.begin(), out.end(), nodes.begin() + lo);
  };

  std::optional<Eigen::VectorXd> saddle;
  for (int it = 0; it < tol.string_max_iter; ++it) {
    int c = 1;
    double Wc = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::VectorXd> grads(static_cast<std::size_t>(n));
    for (int i = 1; i < n - 1; ++i) {
      ActionConfiguration const cfg = require_admissible(nodes[static_cast<std::size_t>(i)]);
      double const W = action_W(cfg, ctx);
      grads[static_cast<std::size_t>(i)] = action_grad(cfg, ctx);
      if (W > Wc) {
        Wc = W;
        c = i;
      }
    }
    if (Wc - Wend <= flat) {
      throw PathCollapse("minimax_orbit: no barrier between the minima (non-isolated critical set)");
    }
    Eigen::VectorXd const& gc = grads[static_cast<std::size_t>(c)];
    if (gc.lpNorm<Eigen::Infinity>() < 1e-6) {
      // Newton on grad W = 0 from the climbing node.
      Eigen::VectorXd x = nodes[static_cast<std::size_t>(c)];
      for (int k = 0; k < 20; ++k) {
        ActionConfiguration const cfg = require_admissible(x);
        Eigen::VectorXd const g = action_grad(cfg, ctx);
        if (g.lpNorm<Eigen::Infinity>() < 1e-13) {
          break;
        }
        x += action_hess(cfg, ctx).fullPivLu().solve(-g);
      }
      if (action_grad(require_admissible(x), ctx).lpNorm<Eigen::Infinity>() < tol.minimax_grad_tol) {
        saddle = x;
        break;
      }
    }
    Eigen::VectorXd tangent = nodes[static_cast<std::size_t>(c + 1)] - nodes[static_cast<std::size_t>(c - 1)];
    tangent.normalize();
    for (int i = 1; i < n - 1; ++i) {
      Eigen::VectorXd const& g = grads[static_cast<std::size_t>(i)];
      if (i == c) {
        nodes[static_cast<std::size_t>(i)] -= tau * (g - 2.0 * g.dot(tangent) * tangent);
      } else {
        nodes[static_cast<std::size_t>(i)] -= tau * g;
      }
    }
    respace(0, c);
    respace(c, n - 1);
  }
  if (!saddle) {
    throw NoConvergence("minimax_orbit: climbing string did not converge");
  }
  for (Eigen::VectorXd const& end : {a, b}) {
    if ((*saddle - end).norm() < 1e-6) {
      throw PathCollapse("minimax_orbit: string converged onto an endpoint");
    }
  }
  PeriodicOrbit orb = detail::polish_configuration(cfg_of(*saddle), ctx, tol);
  if (!(orb.action > Wend)) {
    throw PathCollapse("minimax_orbit: saddle action does not exceed the minima");
  }
  return orb;
}

enum class SetKind { Finite, Degenerate };

inline const char* to_string(SetKind k) noexcept { return k == SetKind::Finite ? "Finite" : "Degenerate"; }

struct SweepGrid {
  int n_t = 64;
  int n_e = 64;
  /// Energy window; derived from the resonant velocity when unset.
  std::optional<double> e_lo;
  std::optional<double> e_hi;
};

struct DegeneracyReport {
  OrbitKey key;
  SetKind kind = SetKind::Finite;
  /// Finite: the distinct orbits. Degenerate: the sampled zeros on the curve.
  std::vector<PeriodicOrbit> orbits;
  /// Degenerate only: e = gamma(t) at the verification samples.
  std::vector<EnergyState> curve_samples;
  /// gamma(t) = c_0 + sum_k [c_k cos(2 pi k t) + s_k sin(2 pi k t)].
  std::vector<double> curve_cos;
  std::vector<double> curve_sin;
  double curve_residual = 0.0;
  /// Index into orbits of a Hyperbolic or Parabolic orbit.
  std::optional<int> instability_witness;
  /// A finite non-empty set with only Elliptic orbits.
  bool theory_violation = false;
  bool below_threshold = false;
  double e_lo = 0.0;
  double e_hi = 0.0;
};

/// Default energy window: v around g p / (2 q), widened by the drift over q impacts.
inline std::pair<double, double> default_energy_window(OrbitKey key, GeneratingContext const& ctx) {
  double const g = ctx.params().g;
  double const v_res = g * key.p / (2.0 * key.q);
  double const dv = (4.0 * key.q + 2.0) * ctx.profile().sup_norm(1) + 0.1 * v_res;
  double const v_lo = std::max(0.05 * v_res, v_res - dv);
  double const v_hi = v_res + dv;
  return {0.5 * v_lo * v_lo, 0.5 * v_hi * v_hi};
}

namespace detail {

// Least-squares trigonometric fit of degree K to (t_i, e_i).
inline void fit_trig(std::vector<EnergyState> const& pts, int K, std::vector<double>& cs, std::vector<double>& sn) {
  int const m = static_cast<int>(pts.size());
  Eigen::MatrixXd A(m, 2 * K + 1);
  Eigen::VectorXd y(m);
  for (int i = 0; i < m; ++i) {
    double const t = pts[static_cast<std::size_t>(i)].t;
    A(i, 0) = 1.0;
    for (int k = 1; k <= K; ++k) {
      A(i, 2 * k - 1) = std::cos(two_pi * k * t);
      A(i, 2 * k) = std::sin(two_pi * k * t);
    }
    y[i] = pts[static_cast<std::size_t>(i)].e;
  }
  Eigen::VectorXd const c = A.colPivHouseholderQr().solve(y);
  cs.assign(static_cast<std::size_t>(K) + 1, 0.0);
  sn.assign(static_cast<std::size_t>(K), 0.0);
  cs[0] = c[0];
  for (int k = 1; k <= K; ++k) {
    cs[static_cast<std::size_t>(k)] = c[2 * k - 1];
    sn[static_cast<std::size_t>(k - 1)] = c[2 * k];
  }
}

inline double eval_trig(std::vector<double> const& cs, std::vector<double> const& sn, double t) {
  double v = cs[0];
  for (std::size_t k = 1; k < cs.size(); ++k) {
    v += cs[k] * std::cos(two_pi * static_cast<double>(k) * t) + sn[k - 1] * std::sin(two_pi * static_cast<double>(k) * t);
  }
  return v;
}

}  // namespace detail

/**
 * @brief Locate every zero of sigma^{-p} Phi^q - id on a grid over [0, 1) x [e_lo, e_hi].
 *
 * Cells over which both residual components straddle zero seed Newton. Zeros are merged modulo
 * sigma and cyclic relabelling. At least tol.curve_min_zeros zeros whose t-projections leave no
 * gap above tol.curve_fill trigger a curve fit e = gamma(t), checked at fresh samples; when it
 * holds the set is Degenerate. Throws GridTooCoarse when a zero sits in the boundary cells.
 */
inline DegeneracyReport sweep_enumerate(OrbitKey key, GeneratingContext const& ctx, SweepGrid const& grid = {},
                                        OrbitTolerances const& tol = {}) {
  BouncingBallMap const& map = ctx.map();
  auto const window = default_energy_window(key, ctx);
  DegeneracyReport rep;
  rep.key = key;
  rep.e_lo = grid.e_lo.value_or(window.first);
  rep.e_hi = grid.e_hi.value_or(window.second);
  rep.below_threshold = key.ratio() <= existence_threshold(ctx.profile(), ctx.params());
  int const nt = grid.n_t;
  int const ne = grid.n_e;
  double const de = (rep.e_hi - rep.e_lo) / (ne - 1);

  // Residuals at nodes; column nt repeats column 0 by sigma-equivariance.
  double const nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Eigen::Vector2d> G(static_cast<std::size_t>(nt) * ne, Eigen::Vector2d(nan, nan));
  auto at = [&](int i, int j) -> Eigen::Vector2d const& { return G[static_cast<std::size_t>((i % nt) * ne + j)]; };
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < ne; ++j) {
      try {
        G[static_cast<std::size_t>(i * ne + j)] =
            fixed_point_eval(map, key, {static_cast<double>(i) / nt, rep.e_lo + de * j}).residual;
      } catch (Error const&) {
      }
    }
  }

  double const straddle_tol = 1e-13;
  std::vector<PeriodicOrbit> found;
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j + 1 < ne; ++j) {
      std::array<Eigen::Vector2d, 4> const c = {at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)};
      bool ok = true;
      for (int comp = 0; comp < 2 && ok; ++comp) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (auto const& v : c) {
          if (!std::isfinite(v[comp])) {
            ok = false;
          }
          lo = std::min(lo, v[comp]);
          hi = std::max(hi, v[comp]);
        }
        ok = ok && lo <= straddle_tol && hi >= -straddle_tol;
      }
      if (!ok) {
        continue;
      }
      EnergyState const seed{(i + 0.5) / nt, rep.e_lo + de * (j + 0.5)};
      NewtonResult const nr = newton_orbit(key, seed, ctx, tol);
      if (!nr.orbit) {
        continue;
      }
      bool dup = false;
      for (auto const& o : found) {
        if (same_orbit(o, *nr.orbit, tol.dedup_tol)) {
          dup = true;
          break;
        }
      }
      if (!dup) {
        found.push_back(*nr.orbit);
      }
    }
  }

  for (auto const& o : found) {
    for (double e : o.energies) {
      if (e < rep.e_lo + de || e > rep.e_hi - de) {
        throw GridTooCoarse("sweep_enumerate: zero at e = " + std::to_string(e) + " lies at the edge of [" +
                            std::to_string(rep.e_lo) + ", " + std::to_string(rep.e_hi) + "]");
      }
    }
  }
  std::sort(found.begin(), found.end(), [](PeriodicOrbit const& x, PeriodicOrbit const& y) {
    return x.times[0] != y.times[0] ? x.times[0] < y.times[0] : x.energies[0] < y.energies[0];
  });
  rep.orbits = std::move(found);

  // Degeneracy: many zeros, densely filling the t circle.
  std::vector<EnergyState> pts;
  for (auto const& o : rep.orbits) {
    for (int i = 0; i < key.q; ++i) {
      double const t = o.times[static_cast<std::size_t>(i)];
      pts.push_back({t - std::floor(t), o.energies[static_cast<std::size_t>(i)]});
    }
  }
  std::sort(pts.begin(), pts.end(), [](EnergyState const& x, EnergyState const& y) { return x.t < y.t; });
  bool dense = static_cast<int>(rep.orbits.size()) >= tol.curve_min_zeros && !pts.empty();
  for (std::size_t i = 0; dense && i < pts.size(); ++i) {
    double const next = i + 1 < pts.size() ? pts[i + 1].t : pts[0].t + 1.0;
    dense = next - pts[i].t < tol.curve_fill;
  }
  if (dense) {
    int const K = std::min(8, (static_cast<int>(pts.size()) - 1) / 2);
    detail::fit_trig(pts, K, rep.curve_cos, rep.curve_sin);
    double worst = 0.0;
    std::vector<EnergyState> samples;
    for (int s = 0; s < tol.curve_check_samples; ++s) {
      double const t = (s + 0.5) / tol.curve_check_samples + 0.5 / (static_cast<double>(nt) * tol.curve_check_samples);
      EnergyState const x{t, detail::eval_trig(rep.curve_cos, rep.curve_sin, t)};
      samples.push_back(x);
      try {
        worst = std::max(worst, fixed_point_eval(map, key, x).residual.norm());
      } catch (Error const&) {
        worst = std::numeric_limits<double>::infinity();
      }
    }
    rep.curve_residual = worst;
    if (worst < tol.curve_tol) {
      rep.kind = SetKind::Degenerate;
      rep.curve_samples = std::move(samples);
    } else {
      rep.curve_cos.clear();
      rep.curve_sin.clear();
    }
  }

  for (std::size_t i = 0; i < rep.orbits.size(); ++i) {
    if (rep.orbits[i].stability != Stability::Elliptic) {
      rep.instability_witness = static_cast<int>(i);
      break;
    }
  }
  rep.theory_violation = rep.kind == SetKind::Finite && !rep.orbits.empty() && !rep.instability_witness;
  return rep;
}

struct ProbeOptions {
  int n_initial = 100;
  double radius = 1e-6;
  int periods = 10'000;
  std::uint64_t seed = 1;
  /// Trajectories stop once the deviation exceeds this.
  double escape = 1e-1;
  /// Deviation window used to fit the growth rate.
  double fit_lo = 1e-5;
  double fit_hi = 1e-3;
};

struct StabilityReport {
  Stability stability = Stability::Parabolic;
  double trace = 0.0;
  double residue = 0.0;
  /// Largest |eigenvalue| of the monodromy.
  double multiplier = 1.0;
  double max_deviation = 0.0;
  /// Mean fitted growth rate of log deviation per period, over trajectories that crossed the window.
  double growth_rate = 0.0;
  double expected_rate = 0.0;
  int n_fitted = 0;
  int n_escaped = 0;
  /// First period at which some trajectory reached 1e-2, or -1.
  int periods_to_1e2 = -1;
};

/**
 * @brief Trace class plus a Lyapunov probe: random perturbations of size radius, iterated
 * under sigma^{-p} Phi^q for up to `periods` periods.
 */
inline StabilityReport classify_stability(PeriodicOrbit const& orbit, GeneratingContext const& ctx,
                                          ProbeOptions const& opt = {}, OrbitTolerances const& tol = {}) {
  StabilityReport rep;
  rep.trace = orbit.monodromy_trace;
  rep.stability = classify_trace(rep.trace, tol.parabolic_tol);
  rep.residue = (2.0 - rep.trace) / 4.0;
  double const disc = rep.trace * rep.trace - 4.0;
  rep.multiplier = disc > 0.0 ? 0.5 * (std::abs(rep.trace) + std::sqrt(disc)) : 1.0;
  rep.expected_rate = std::log(rep.multiplier);

  BouncingBallMap const& map = ctx.map();
  EnergyState const x0 = orbit.point(0);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> angle(0.0, two_pi);
  double rate_sum = 0.0;
  for (int k = 0; k < opt.n_initial; ++k) {
    double const th = angle(rng);
    EnergyState x{x0.t + opt.radius * std::cos(th), x0.e + opt.radius * std::sin(th)};
    double sn = 0.0, sl = 0.0, snn = 0.0, snl = 0.0;
    int m = 0;
    for (int n = 1; n <= opt.periods; ++n) {
      try {
        x = map.iterate_state(x, orbit.key.q);
      } catch (Error const&) {
        ++rep.n_escaped;
        break;
      }
      x.t -= orbit.key.p;
      double const d = std::hypot(x.t - x0.t, x.e - x0.e);
      rep.max_deviation = std::max(rep.max_deviation, d);
      if (d >= 1e-2 && (rep.periods_to_1e2 < 0 || n < rep.periods_to_1e2)) {
        rep.periods_to_1e2 = n;
      }
      if (d >= opt.fit_lo && d <= opt.fit_hi) {
        double const l = std::log(d);
        sn += n;
        sl += l;
        snn += static_cast<double>(n) * n;
        snl += n * l;
        ++m;
      }
      if (d > opt.escape) {
        ++rep.n_escaped;
        break;
      }
    }
    if (m >= 3) {
      double const den = m * snn - sn * sn;
      if (den > 0.0) {
        rate_sum += (m * snl - sn * sl) / den;
        ++rep.n_fitted;
      }
    }
  }
  rep.growth_rate = rep.n_fitted > 0 ? rate_sum / rep.n_fitted : 0.0;
  return rep;
}

struct BirkhoffReport {
  bool ordered = false;
  bool gaps_ok = false;
  double min_gap = 0.0;
  double gap_bound = 0.0;
  [[nodiscard]] bool ok() const noexcept { return ordered && gaps_ok; }
};

/**
 * @brief Birkhoff ordering and the gap estimate t_{n+1} - t_n > p/q - 1.
 *
 * Over two periods of the orbit, every translate t_i + m must sit relative to t_j exactly as
 * the rigid rotation i p/q + m sits relative to j p/q.
 */
inline BirkhoffReport birkhoff_validate(PeriodicOrbit const& orbit) {
  OrbitKey const key = orbit.key;
  ActionConfiguration const cfg(orbit.times, key.p, key.q);
  BirkhoffReport rep;
  rep.gap_bound = key.ratio() - 1.0;
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < key.q; ++i) {
    rep.min_gap = std::min(rep.min_gap, cfg.at(i + 1) - cfg.at(i));
  }
  rep.gaps_ok = rep.min_gap > rep.gap_bound;
  rep.ordered = true;
  int const span = 2 * key.q;
  for (int i = 0; i < span && rep.ordered; ++i) {
    for (int j = 0; j < span && rep.ordered; ++j) {
      for (int m = -key.p - 1; m <= key.p + 1; ++m) {
        double const lhs = cfg.at(i) + m - cfg.at(j);
        double const rigid = static_cast<double>((i - j) * key.p + m * key.q);
        if (rigid == 0.0) {
          continue;
        }
        if ((lhs > 0.0) != (rigid > 0.0)) {
          rep.ordered = false;
          break;
        }
      }
    }
  }
  return rep;
}

}  // namespace bounce
