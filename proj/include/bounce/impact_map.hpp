#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <optional>
#include <string>
#include <vector>

#include "bounce/errors.hpp"
#include "bounce/forcing.hpp"

/**
 * @file impact_map.hpp
 *
 * @brief The bouncing-ball impact map in time-velocity and time-energy coordinates.
 *
 * A ball leaves the racket at time t with inertial velocity w = v + f'(t) and flies freely
 * under gravity until the first later time tb at which its height meets the racket again:
 *
 *   f(t) + w (tb - t) - g/2 (tb - t)^2 = f(tb).
 *
 * The elastic reflection gives the new relative velocity
 *
 *   vb = v - 2 f[t, tb] + f'(tb) + f'(t),
 *
 * and the energy form uses e = v^2 / 2. Everything here works on the lift (t is not reduced).
 */

namespace bounce {

struct MapParams {
  double g = 1.0;
  double v_star = 1.0;
  double e_star = 0.5;

  /**
   * @brief Parameters for a profile. The default velocity threshold is 4 |f'| + 1.
   *
   * Throws std::invalid_argument if g <= 0 or v_star <= 4 |f'|.
   */
  static MapParams for_profile(ForcingProfile const& profile, double g = 1.0,
                               std::optional<double> v_star = std::nullopt) {
    if (!(g > 0.0)) {
      throw std::invalid_argument("MapParams: g must be positive");
    }
    double const v_min = 4.0 * profile.sup_norm(1);
    double const vs = v_star.value_or(v_min + 1.0);
    if (!(vs > v_min)) {
      throw std::invalid_argument("MapParams: v_star must exceed 4 |f'|");
    }
    return {g, vs, 0.5 * vs * vs};
  }
};

struct VelocityState {
  double t = 0.0;
  double v = 0.0;
};

struct EnergyState {
  double t = 0.0;
  double e = 0.0;
};

inline VelocityState to_velocity(EnergyState s) { return {s.t, std::sqrt(2.0 * s.e)}; }
inline EnergyState to_energy(VelocityState s) { return {s.t, 0.5 * s.v * s.v}; }

/// Jacobian of a map in (t, e) coordinates, row-major.
struct JacobianTE {
  double dt_dt = 1.0;
  double dt_de = 0.0;
  double de_dt = 0.0;
  double de_de = 1.0;

  [[nodiscard]] double det() const noexcept { return dt_dt * de_de - dt_de * de_dt; }
  [[nodiscard]] double trace() const noexcept { return dt_dt + de_de; }

  friend JacobianTE operator*(JacobianTE const& a, JacobianTE const& b) noexcept {
    return {a.dt_dt * b.dt_dt + a.dt_de * b.de_dt, a.dt_dt * b.dt_de + a.dt_de * b.de_de,
            a.de_dt * b.dt_dt + a.de_de * b.de_dt, a.de_dt * b.dt_de + a.de_de * b.de_de};
  }
};

/// Orbit segment (t_0, e_0) .. (t_q, e_q) with the chain-rule product of step Jacobians.
struct OrbitSegment {
  std::vector<EnergyState> states;
  JacobianTE jacobian;

  [[nodiscard]] EnergyState const& back() const { return states.back(); }
};

/// One application of the completed bouncing rule.
struct BounceStep {
  VelocityState state;
  bool grazing = false;
  /// The ball was moving downward (w - g T < 0) when it reached the racket.
  bool falling = true;
};

struct TrajectoryPoint {
  int n = 0;
  double t = 0.0;
  double v = 0.0;
  double e = 0.0;
  bool grazing = false;
  bool falling = true;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  /// Index of the first step that triggered the grazing rule, if any.
  std::optional<int> first_grazing;
  bool all_falling = true;
};

class BouncingBallMap {
public:
  static constexpr double scan_start = 1e-9;
  static constexpr int scan_cells = 4096;
  static constexpr double bracket_width = 1e-14;

  BouncingBallMap(ForcingProfile profile, MapParams params) : profile_(std::move(profile)), params_(params) {
    if (!(params_.g > 0.0)) {
      throw std::invalid_argument("BouncingBallMap: g must be positive");
    }
  }

  explicit BouncingBallMap(ForcingProfile profile, double g = 1.0)
      : BouncingBallMap(profile, MapParams::for_profile(profile, g)) {}

  [[nodiscard]] ForcingProfile const& profile() const noexcept { return profile_; }
  [[nodiscard]] MapParams const& params() const noexcept { return params_; }
  [[nodiscard]] double g() const noexcept { return params_.g; }

  /// Energy threshold above which q iterates stay above e_star: (v_star + 4 q |f'|)^2 / 2.
  [[nodiscard]] double e_sharp(int q) const noexcept {
    double const v = params_.v_star + 4.0 * q * profile_.sup_norm(1);
    return 0.5 * v * v;
  }

  /**
   * @brief Flight duration T = tb - t to the first racket contact.
   *
   * Works with phi(T) = w - f[t, t+T] - g T / 2, which has the sign of the free-fall residual
   * for T > 0 and no cancellation near T = 0. The scan advances by max(T_max / 4096, phi / L)
   * where L = (|f''| + g) / 2 bounds |phi'|, so a step never jumps over a sign change that
   * is resolvable at the uniform resolution. The first bracket is refined by a safeguarded
   * Newton/bisection iteration down to width 1e-14.
   */
  [[nodiscard]] double flight_time(double t, double w) const {
    double const g = params_.g;
    auto phi = [&](double T) { return w - profile_.divided_difference(t, t + T) - 0.5 * g * T; };

    if (!(w > profile_.values(t).df)) {
      throw GrazingImpact("outgoing velocity does not exceed racket velocity");
    }
    double lo = scan_start;
    double phi_lo = phi(lo);
    if (!(phi_lo > 0.0)) {
      throw GrazingImpact("flight shorter than the scan start");
    }
    double const osc = profile_.oscillation_norm();
    double const t_max = (w + std::sqrt(w * w + 8.0 * g * osc)) / g * (1.0 + 1e-9) + 1e-12;
    double const h_min = t_max / scan_cells;
    double const lip = 0.5 * (profile_.sup_norm(2) + g) * (1.0 + 1e-9);

    double hi = lo;
    double phi_hi = phi_lo;
    while (true) {
      if (lo >= t_max) {
        throw SolverFailure("no racket contact inside the a-priori flight bound");
      }
      hi = std::min(t_max, lo + std::max(h_min, phi_lo / lip));
      phi_hi = phi(hi);
      if (phi_hi <= 0.0) {
        break;
      }
      lo = hi;
      phi_lo = phi_hi;
    }
    if (phi_hi == 0.0) {
      return hi;
    }
    return refine_root(t, w, lo, hi);
  }

  /// Smallest tb > t solving the free-fall equation; requires w > f'(t).
  [[nodiscard]] double next_impact_time(double t, double w) const { return t + flight_time(t, w); }

  /// Free-fall residual f(t) + w T - g T^2 / 2 - f(t + T).
  [[nodiscard]] double free_fall_residual(double t, double w, double tb) const {
    double const T = tb - t;
    return profile_(t) + w * T - 0.5 * params_.g * T * T - profile_(tb);
  }

  /// Velocity-form step. Throws GrazingImpact when v <= 0.
  [[nodiscard]] VelocityState step_velocity(VelocityState s) const {
    if (!(s.v > 0.0)) {
      throw GrazingImpact("relative velocity is not positive");
    }
    ForcingValues const fv = profile_.values(s.t);
    double const tb = next_impact_time(s.t, s.v + fv.df);
    double const vb = s.v - 2.0 * profile_.divided_difference(s.t, tb) + profile_.values(tb).df + fv.df;
    return {tb, vb};
  }

  /// Completed bouncing rule: if w <= f'(t) the state is left unchanged and flagged.
  [[nodiscard]] BounceStep bounce(VelocityState s) const {
    if (!(s.v > 0.0)) {
      return {s, true, false};
    }
    try {
      ForcingValues const fv = profile_.values(s.t);
      double const w = s.v + fv.df;
      double const T = flight_time(s.t, w);
      double const tb = s.t + T;
      double const vb = s.v - 2.0 * profile_.divided_difference(s.t, tb) + profile_.values(tb).df + fv.df;
      return {{tb, vb}, false, w - params_.g * T < 0.0};
    } catch (GrazingImpact const&) {
      return {s, true, false};
    }
  }

  [[nodiscard]] EnergyState step_energy(EnergyState s) const {
    if (!(s.e > 0.0)) {
      throw GrazingImpact("energy is not positive");
    }
    return to_energy(step_velocity(to_velocity(s)));
  }

  /**
   * @brief Exact Jacobian of step_energy by implicit differentiation of the free-fall equation.
   *
   * With T = tb - t the arrival relative speed vb appears as the denominator:
   *   dtb/dt = (f''(t) T + g T - v) / vb,  dtb/dv = T / vb,
   *   dvb/dt = (f''(tb) + g) dtb/dt - f''(t) - g,  dvb/dv = (f''(tb) + g) dtb/dv - 1.
   */
  [[nodiscard]] JacobianTE jacobian_energy(EnergyState s) const { return step_with_jacobian(s).second; }

  [[nodiscard]] std::pair<EnergyState, JacobianTE> step_with_jacobian(EnergyState s) const {
    VelocityState const in = to_velocity(s);
    VelocityState const out = step_velocity(in);
    double const g = params_.g;
    double const T = out.t - in.t;
    double const ddf0 = profile_.values(in.t).ddf;
    double const ddf1 = profile_.values(out.t).ddf;
    if (!(out.v > 1e-12 * std::max(1.0, in.v))) {
      throw SingularImplicitSystem("arrival velocity vanishes");
    }
    double const dtb_dt = (ddf0 * T + g * T - in.v) / out.v;
    double const dtb_dv = T / out.v;
    double const dvb_dt = (ddf1 + g) * dtb_dt - ddf0 - g;
    double const dvb_dv = (ddf1 + g) * dtb_dv - 1.0;
    JacobianTE j{dtb_dt, dtb_dv / in.v, out.v * dvb_dt, out.v * dvb_dv / in.v};
    return {to_energy(out), j};
  }

  /**
   * @brief q steps of the energy map with the accumulated Jacobian.
   *
   * Throws DomainExit when an iterate leaves e > 0 or grazes.
   */
  [[nodiscard]] OrbitSegment iterate(EnergyState s, int q) const {
    if (q < 1) {
      throw std::invalid_argument("iterate: q must be >= 1");
    }
    OrbitSegment seg;
    seg.states.reserve(static_cast<std::size_t>(q) + 1);
    seg.states.push_back(s);
    for (int i = 0; i < q; ++i) {
      try {
        auto [next, jac] = step_with_jacobian(seg.states.back());
        if (!(next.e > 0.0)) {
          throw DomainExit("iterate left e > 0 at step " + std::to_string(i + 1));
        }
        seg.states.push_back(next);
        seg.jacobian = jac * seg.jacobian;
      } catch (GrazingImpact const& err) {
        throw DomainExit(std::string("grazing at step ") + std::to_string(i + 1) + ": " + err.what());
      } catch (SingularImplicitSystem const& err) {
        throw DomainExit(std::string("singular step ") + std::to_string(i + 1) + ": " + err.what());
      }
    }
    return seg;
  }

  /// q steps without Jacobians.
  [[nodiscard]] EnergyState iterate_state(EnergyState s, int q) const {
    for (int i = 0; i < q; ++i) {
      try {
        s = step_energy(s);
      } catch (GrazingImpact const& err) {
        throw DomainExit(std::string("grazing at step ") + std::to_string(i + 1) + ": " + err.what());
      }
      if (!(s.e > 0.0)) {
        throw DomainExit("iterate left e > 0");
      }
    }
    return s;
  }

  /// Forward bouncing motion; grazing steps keep the state and are flagged.
  [[nodiscard]] Trajectory simulate_bouncing(VelocityState s0, int n_steps) const {
    Trajectory traj;
    traj.points.reserve(static_cast<std::size_t>(std::max(n_steps, 0)) + 1);
    traj.points.push_back({0, s0.t, s0.v, 0.5 * s0.v * s0.v, !(s0.v > 0.0), true});
    if (!(s0.v > 0.0)) {
      traj.first_grazing = 0;
    }
    VelocityState s = s0;
    for (int n = 1; n <= n_steps; ++n) {
      BounceStep const step = bounce(s);
      s = step.state;
      traj.points.push_back({n, s.t, s.v, 0.5 * s.v * s.v, step.grazing, step.falling});
      if (step.grazing && !traj.first_grazing) {
        traj.first_grazing = n;
      }
      if (!step.grazing && !step.falling) {
        traj.all_falling = false;
      }
    }
    return traj;
  }

private:
  // phi(lo) > 0 >= phi(hi). Newton steps with the analytic slope, falling back to bisection
  // whenever a step leaves the bracket or fails to halve it.
  [[nodiscard]] double refine_root(double t, double w, double lo, double hi) const {
    double const g = params_.g;
    double const goal = std::max(bracket_width, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(t + hi));
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      double const dd = profile_.divided_difference(t, t + x);
      double const fx = w - dd - 0.5 * g * x;
      if (fx == 0.0) {
        return x;
      }
      (fx > 0.0 ? lo : hi) = x;
      if (hi - lo <= goal) {
        return 0.5 * (lo + hi);
      }
      double const slope = -(profile_.values(t + x).df - dd) / x - 0.5 * g;
      double next = x - fx / slope;
      if (!(next > lo && next < hi) || std::abs(next - x) > 0.5 * (hi - lo)) {
        next = 0.5 * (lo + hi);
      } else if (std::abs(next - x) <= 0.25 * goal) {
        return next;
      }
      x = next;
    }
    return x;
  }

  ForcingProfile profile_;
  MapParams params_;
};

struct InjectivityReport {
  int local_pairs = 0;
  /// Range of |image separation| / (sigma_min(J) |dx|) over neighbouring grid pairs.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  /// Smallest image separation (on the cylinder) over all distinct grid pairs.
  double min_separation = 0.0;
  [[nodiscard]] bool ok() const noexcept { return min_ratio > 0.5 && min_separation > 0.0; }
};

/**
 * @brief Embedding sanity check on an n x n grid over [0,1) x [e_lo, e_hi].
 *
 * Adjacent pairs must not land closer than the smallest singular value of the local Jacobian allows, and
 * no two grid points may share an image on the cylinder.
 */
inline InjectivityReport injectivity_probe(BouncingBallMap const& map, int n, double e_lo, double e_hi) {
  struct Node {
    EnergyState x;
    EnergyState img;
    JacobianTE jac;
  };
  auto wrap = [](double dt) { return dt - std::round(dt); };
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      EnergyState const x{static_cast<double>(i) / n, e_lo + (e_hi - e_lo) * j / (n - 1)};
      auto [img, jac] = map.step_with_jacobian(x);
      nodes.push_back({x, img, jac});
    }
  }
  InjectivityReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.min_separation = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n * n; ++a) {
    for (int b = a + 1; b < n * n; ++b) {
      Node const& A = nodes[static_cast<std::size_t>(a)];
      Node const& B = nodes[static_cast<std::size_t>(b)];
      double const it = wrap(B.img.t - A.img.t);
      double const ie = B.img.e - A.img.e;
      double const sep = std::hypot(it, ie);
      rep.min_separation = std::min(rep.min_separation, sep);
      int const di = std::abs(a / n - b / n);
      int const dj = std::abs(a % n - b % n);
      if (std::min(di, n - di) <= 1 && dj <= 1) {
        // Lifted images: the seam pair (i = 0, n - 1) differs by one period in t.
        double const dt = wrap(B.x.t - A.x.t);
        double const de = B.x.e - A.x.e;
        double const lift = dt - (B.x.t - A.x.t);
        double const lt = B.img.t + lift - A.img.t;
        double const jtt = 0.5 * (A.jac.dt_dt + B.jac.dt_dt);
        double const jte = 0.5 * (A.jac.dt_de + B.jac.dt_de);
        double const jet = 0.5 * (A.jac.de_dt + B.jac.de_dt);
        double const jee = 0.5 * (A.jac.de_de + B.jac.de_de);
        // Smallest singular value of the averaged Jacobian: the closest image it allows.
        double const fro = jtt * jtt + jte * jte + jet * jet + jee * jee;
        double const det = std::abs(jtt * jee - jte * jet);
        double const smin = std::sqrt(std::max(0.0, 0.5 * (fro - std::sqrt(std::max(0.0, fro * fro - 4 * det * det)))));
        double const ratio = std::hypot(lt, ie) / (smin * std::hypot(dt, de));
        rep.min_ratio = std::min(rep.min_ratio, ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        ++rep.local_pairs;
      }
    }
  }
  return rep;
}

}  // namespace bounce
