#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "bounce/errors.hpp"
#include "bounce/forcing.hpp"
#include "bounce/impact_map.hpp"

/**
 * @file variational.hpp
 *
 * @brief Generating function of the time-energy map and the discrete periodic action.
 *
 * For impact times t0 < t1 the ball flies along the parabola joining the racket at both ends.
 * With T = t1 - t0, D = f[t0, t1] and the free-fall Lagrangian action
 *
 *   A(t0, t1) = T D^2 / 2 - g D T^2 / 2 - g^2 T^3 / 24 - g f(t0) T,
 *
 * the generating function is h = -A + G(t1) - G(t0) with G' = f'^2 / 2 - g f. Its partials are
 *
 *   h_1 = -(D + g T / 2 - f'(t0))^2 / 2 = -e0,    h_2 = (D - g T / 2 - f'(t1))^2 / 2 = e1,
 *
 * the post-impact energy at t0 and the energy after the bounce at t1. G is split into m t plus
 * a periodic trigonometric polynomial, so h(t0 + 1, t1 + 1) = h(t0, t1) exactly.
 */

namespace bounce {

/// First and second partials of h at one segment.
struct SegmentPartials {
  double h1 = 0.0;
  double h2 = 0.0;
  double h11 = 0.0;
  double h12 = 0.0;
  double h21 = 0.0;
  double h22 = 0.0;
};

class GeneratingContext {
public:
  /// Segments are admissible when both end energies exceed this fraction of e_star.
  static constexpr double floor_fraction = 0.1;

  explicit GeneratingContext(BouncingBallMap map) : map_(std::move(map)) { build_primitive(); }

  [[nodiscard]] BouncingBallMap const& map() const noexcept { return map_; }
  [[nodiscard]] ForcingProfile const& profile() const noexcept { return map_.profile(); }
  [[nodiscard]] MapParams const& params() const noexcept { return map_.params(); }

  /// Mean over one period of f'^2 / 2 - g f.
  [[nodiscard]] double mean_m() const noexcept { return mean_; }

  [[nodiscard]] double energy_floor() const noexcept { return floor_fraction * params().e_star; }

  /// G'(t) = f'(t)^2 / 2 - g f(t).
  [[nodiscard]] double boundary_density(double t) const noexcept {
    ForcingValues const v = profile().values(t);
    return 0.5 * v.df * v.df - params().g * v.f;
  }

  /// G(t) = m t + P(t) with P periodic and P(0) chosen so that P has zero mean.
  [[nodiscard]] double boundary_primitive(double t) const noexcept { return mean_ * t + periodic_part(t); }

  /// Action of the free parabola joining the racket at t0 and t1.
  [[nodiscard]] double free_fall_action(double t0, double t1) const noexcept {
    double const g = params().g;
    double const T = t1 - t0;
    double const D = profile().divided_difference(t0, t1);
    double const f0 = profile()(t0);
    return 0.5 * T * D * D - 0.5 * g * D * T * T - g * g * T * T * T / 24.0 - g * f0 * T;
  }

  /// Generating function h(t0, t1); throws InadmissibleSegment outside the admissible cone.
  [[nodiscard]] double h(double t0, double t1) const {
    check_admissible(t0, t1);
    return -free_fall_action(t0, t1) + mean_ * (t1 - t0) + periodic_part(t1) - periodic_part(t0);
  }

  /// Energies (e0, e1) = (-h_1, h_2) implied by the segment, without admissibility checks.
  [[nodiscard]] std::pair<double, double> segment_energies(double t0, double t1) const noexcept {
    auto const [a, b] = segment_velocities(t0, t1);
    return {0.5 * a * a, 0.5 * b * b};
  }

  [[nodiscard]] bool admissible(double t0, double t1) const noexcept {
    if (!(t1 > t0)) {
      return false;
    }
    auto const [a, b] = segment_velocities(t0, t1);
    double const floor = energy_floor();
    return a > 0.0 && b < 0.0 && 0.5 * a * a > floor && 0.5 * b * b > floor;
  }

  void check_admissible(double t0, double t1) const {
    if (!admissible(t0, t1)) {
      throw InadmissibleSegment("segment (" + std::to_string(t0) + ", " + std::to_string(t1) +
                                ") is not an admissible free-fall arc");
    }
  }

  [[nodiscard]] SegmentPartials partials(double t0, double t1) const {
    check_admissible(t0, t1);
    double const g = params().g;
    double const T = t1 - t0;
    double const D = profile().divided_difference(t0, t1);
    auto const [d_t0, d_t1] = profile().divided_difference_partials(t0, t1);
    ForcingValues const v0 = profile().values(t0);
    ForcingValues const v1 = profile().values(t1);
    double const a = D + 0.5 * g * T - v0.df;
    double const b = D - 0.5 * g * T - v1.df;
    SegmentPartials out;
    out.h1 = -0.5 * a * a;
    out.h2 = 0.5 * b * b;
    out.h11 = -a * (d_t0 - 0.5 * g - v0.ddf);
    out.h12 = -a * (d_t1 + 0.5 * g);
    out.h21 = b * (d_t0 + 0.5 * g);
    out.h22 = b * (d_t1 - 0.5 * g - v1.ddf);
    return out;
  }

private:
  // (post-impact relative speed at t0, minus arrival relative speed at t1).
  [[nodiscard]] std::pair<double, double> segment_velocities(double t0, double t1) const noexcept {
    double const g = params().g;
    double const T = t1 - t0;
    double const D = profile().divided_difference(t0, t1);
    return {D + 0.5 * g * T - profile().values(t0).df, D - 0.5 * g * T - profile().values(t1).df};
  }

  // Exact Fourier series of f'^2 / 2 - g f, integrated term by term.
  void build_primitive() {
    ForcingProfile const& f = profile();
    double const g = params().g;
    int const K = f.degree();
    auto const a = f.cos_coeffs();
    auto const sin_c = f.sin_coeffs();
    auto b = [&](int k) { return k >= 1 && k <= static_cast<int>(sin_c.size()) ? sin_c[k - 1] : 0.0; };

    // f' = sum_k C_k exp(2 pi i k t), C_k = (c_k - i s_k) / 2 with c_k = 2 pi k b_k, s_k = -2 pi k a_k.
    std::vector<std::complex<double>> C(2 * K + 1);
    for (int k = 1; k <= K; ++k) {
      double const wk = two_pi * k;
      std::complex<double> const ck(0.5 * wk * b(k), 0.5 * wk * a[k]);
      C[K + k] = ck;
      C[K - k] = std::conj(ck);
    }
    int const N = 2 * K;
    cos_.assign(N + 1, 0.0);
    sin_.assign(N + 1, 0.0);
    double d0 = 0.0;
    for (int n = 0; n <= N; ++n) {
      std::complex<double> D = 0.0;
      for (int k = -K; k <= K; ++k) {
        int const j = n - k;
        if (j >= -K && j <= K) {
          D += C[K + k] * C[K + j];
        }
      }
      if (n == 0) {
        d0 = D.real();
      } else {
        cos_[n] = D.real();   // (1/2) * 2 Re D_n
        sin_[n] = -D.imag();  // (1/2) * (-2 Im D_n)
      }
    }
    for (int k = 1; k <= K; ++k) {
      cos_[k] -= g * a[k];
      sin_[k] -= g * b(k);
    }
    mean_ = 0.5 * d0 - g * a[0];
  }

  [[nodiscard]] double periodic_part(double t) const noexcept {
    double sum = 0.0;
    for (std::size_t n = 1; n < cos_.size(); ++n) {
      if (cos_[n] == 0.0 && sin_[n] == 0.0) {
        continue;
      }
      double const wn = two_pi * static_cast<double>(n);
      double x = static_cast<double>(n) * t;
      x -= std::floor(x);
      double const ang = two_pi * x;
      sum += (cos_[n] * std::sin(ang) - sin_[n] * std::cos(ang)) / wn;
    }
    return sum;
  }

  BouncingBallMap map_;
  double mean_ = 0.0;
  std::vector<double> cos_;  // zero-mean part of G', cosine amplitudes by harmonic
  std::vector<double> sin_;
};

/**
 * @brief Impact times t_0..t_{q-1} of a (p, q) configuration, closed by t_q = t_0 + p.
 *
 * p and q need not be coprime here; orbit keys enforce that separately.
 */
struct ActionConfiguration {
  std::vector<double> times;
  int p = 1;
  int q = 1;

  ActionConfiguration() = default;
  ActionConfiguration(std::vector<double> t, int p_, int q_) : times(std::move(t)), p(p_), q(q_) {
    if (q < 1 || p < 1 || static_cast<int>(times.size()) != q) {
      throw std::invalid_argument("ActionConfiguration: need p >= 1 and q >= 1 times");
    }
  }

  /// t_i for any integer i, using t_{i+q} = t_i + p.
  [[nodiscard]] double at(int i) const {
    int const r = ((i % q) + q) % q;
    int const wraps = (i - r) / q;
    return times[static_cast<std::size_t>(r)] + static_cast<double>(wraps) * p;
  }

  [[nodiscard]] ActionConfiguration shifted(double dt) const {
    ActionConfiguration out = *this;
    for (double& t : out.times) {
      t += dt;
    }
    return out;
  }
};

/// W = sum_i h(t_i, t_{i+1}).
inline double action_W(ActionConfiguration const& cfg, GeneratingContext const& ctx) {
  double sum = 0.0;
  for (int i = 0; i < cfg.q; ++i) {
    sum += ctx.h(cfg.at(i), cfg.at(i + 1));
  }
  return sum;
}

inline bool admissible(ActionConfiguration const& cfg, GeneratingContext const& ctx) {
  for (int i = 0; i < cfg.q; ++i) {
    if (!ctx.admissible(cfg.at(i), cfg.at(i + 1))) {
      return false;
    }
  }
  return true;
}

/// dW/dt_i = h_2(t_{i-1}, t_i) + h_1(t_i, t_{i+1}).
inline Eigen::VectorXd action_grad(ActionConfiguration const& cfg, GeneratingContext const& ctx) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(cfg.q);
  for (int i = 0; i < cfg.q; ++i) {
    SegmentPartials const s = ctx.partials(cfg.at(i), cfg.at(i + 1));
    grad[i] += s.h1;
    grad[(i + 1) % cfg.q] += s.h2;
  }
  return grad;
}

/// Cyclic tridiagonal Hessian of W (entries accumulate when q <= 2).
inline Eigen::MatrixXd action_hess(ActionConfiguration const& cfg, GeneratingContext const& ctx) {
  int const q = cfg.q;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q, q);
  for (int i = 0; i < q; ++i) {
    int const j = (i + 1) % q;
    SegmentPartials const s = ctx.partials(cfg.at(i), cfg.at(i + 1));
    H(i, i) += s.h11;
    H(j, j) += s.h22;
    H(i, j) += s.h12;
    H(j, i) += s.h21;
  }
  return H;
}

/// Residuals (|h_1 + e0|, |h_2 - e1|) of the generating identity at one map step.
struct GeneratingResidual {
  double initial = 0.0;
  double final = 0.0;
  EnergyState image;
};

inline GeneratingResidual gen_h_consistency(GeneratingContext const& ctx, EnergyState s) {
  EnergyState const img = ctx.map().step_energy(s);
  SegmentPartials const p = ctx.partials(s.t, img.t);
  return {std::abs(p.h1 + s.e), std::abs(p.h2 - img.e), img};
}

/**
 * @brief Action of a chain t_0 < ... < t_q with fixed endpoints, interior times made stationary.
 *
 * `interior` is the starting guess for t_1..t_{q-1} and is overwritten with the solution.
 */
inline double stationary_chain_action(GeneratingContext const& ctx, double t_first, double t_last,
                                      std::vector<double>& interior) {
  int const n = static_cast<int>(interior.size());
  auto time = [&](int i) { return i == 0 ? t_first : (i == n + 1 ? t_last : interior[static_cast<std::size_t>(i - 1)]); };
  for (int it = 0; it < 50 && n > 0; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i <= n; ++i) {
      SegmentPartials const s = ctx.partials(time(i), time(i + 1));
      if (i >= 1) {
        grad[i - 1] += s.h1;
        H(i - 1, i - 1) += s.h11;
      }
      if (i + 1 <= n) {
        grad[i] += s.h2;
        H(i, i) += s.h22;
      }
      if (i >= 1 && i + 1 <= n) {
        H(i - 1, i) += s.h12;
        H(i, i - 1) += s.h21;
      }
    }
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14) {
      break;
    }
    Eigen::VectorXd const step = H.fullPivLu().solve(-grad);
    for (int i = 0; i < n; ++i) {
      interior[static_cast<std::size_t>(i)] += step[i];
    }
    if (step.lpNorm<Eigen::Infinity>() < 1e-15) {
      break;
    }
  }
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    sum += ctx.h(time(i), time(i + 1));
  }
  return sum;
}

/**
 * @brief Checks that the q-step chain action generates the q-th iterate.
 *
 * Differentiates the stationary chain action in its endpoints by central differences and
 * compares with -e_0 and e_q from the map. Returns (|dH/dt_0 + e_0|, |dH/dt_q - e_q|).
 */
inline std::pair<double, double> chain_generator_residuals(GeneratingContext const& ctx, EnergyState s, int q,
                                                          double step = 1e-5) {
  OrbitSegment const seg = ctx.map().iterate(s, q);
  std::vector<double> interior;
  for (int i = 1; i < q; ++i) {
    interior.push_back(seg.states[static_cast<std::size_t>(i)].t);
  }
  double const t0 = seg.states.front().t;
  double const tq = seg.states.back().t;
  auto H = [&](double a, double b) {
    std::vector<double> guess = interior;
    return stationary_chain_action(ctx, a, b, guess);
  };
  double const d0 = (H(t0 + step, tq) - H(t0 - step, tq)) / (2.0 * step);
  double const dq = (H(t0, tq + step) - H(t0, tq - step)) / (2.0 * step);
  return {std::abs(d0 + s.e), std::abs(dq - seg.states.back().e)};
}

}  // namespace bounce
