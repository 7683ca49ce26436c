#pragma once

#include <cmath>
#include <vector>

#include "bounce/impact_map.hpp"

/**
 * Brute-force localization of (p, 1) orbits, independent of the Newton and action code.
 *
 * An n x n grid over [0, 1) x [e_lo, e_hi]. In each t column the first residual
 * t_1 - t - p changes sign in e (the map twists); that crossing is bisected. The energy
 * residual along the resulting curve is then scanned across columns and its sign changes
 * bisected in t, each evaluation bisecting e again. Only plain forward steps are used.
 */
namespace bounce::oracle {

struct GridZero {
  double t;
  double e;
};

class GridOracle {
public:
  GridOracle(BouncingBallMap const& map, int p, double e_lo, double e_hi, int n = 400)
      : map_(map), p_(p), e_lo_(e_lo), e_hi_(e_hi), n_(n) {}

  // e with t_1(t, e) - t - p = 0 in [e_lo, e_hi]; NaN when the column has no crossing.
  [[nodiscard]] double timing_curve(double t) const {
    double prev_e = e_lo_;
    double prev = timing(t, prev_e);
    for (int j = 1; j < n_; ++j) {
      double const e = e_lo_ + (e_hi_ - e_lo_) * j / (n_ - 1);
      double const cur = timing(t, e);
      if ((prev < 0) != (cur < 0)) {
        double lo = prev_e, hi = e, flo = prev;
        for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
          double const mid = 0.5 * (lo + hi);
          double const fm = timing(t, mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        return 0.5 * (lo + hi);
      }
      prev_e = e;
      prev = cur;
    }
    return std::nan("");
  }

  [[nodiscard]] double energy_residual(double t) const {
    double const e = timing_curve(t);
    return map_.step_energy({t, e}).e - e;
  }

  [[nodiscard]] std::vector<GridZero> zeros() const {
    std::vector<GridZero> out;
    double prev = energy_residual(0.0);
    for (int i = 1; i <= n_; ++i) {
      double lo = static_cast<double>(i - 1) / n_;
      double hi = static_cast<double>(i) / n_;
      double const cur = energy_residual(hi);
      if (prev == 0.0) {
        out.push_back({lo, timing_curve(lo)});
      } else if ((prev < 0) != (cur < 0) && cur != 0.0) {
        double flo = prev;
        for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
          double const mid = 0.5 * (lo + hi);
          double const fm = energy_residual(mid);
          if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        double const t = 0.5 * (lo + hi);
        out.push_back({t, timing_curve(t)});
      }
      prev = cur;
    }
    // A zero on the seam can be picked up at both t ~ 0 and t ~ 1.
    std::vector<GridZero> unique;
    for (GridZero const& z : out) {
      bool dup = false;
      for (GridZero const& u : unique) {
        double const d = z.t - u.t;
        dup = dup || std::abs(d - std::round(d)) < 1e-9;
      }
      if (!dup) {
        unique.push_back({z.t - std::floor(z.t + 1e-9), z.e});
      }
    }
    return unique;
  }

private:
  [[nodiscard]] double timing(double t, double e) const { return map_.step_energy({t, e}).t - t - p_; }

  BouncingBallMap const& map_;
  int p_;
  double e_lo_, e_hi_;
  int n_;
};

}  // namespace bounce::oracle
