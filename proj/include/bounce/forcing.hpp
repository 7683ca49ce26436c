#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

/**
 * @file forcing.hpp
 *
 * @brief Racket height profile: a 1-periodic trigonometric polynomial
 *
 *   f(t) = a_0 + sum_{k=1..K} [ a_k cos(2 pi k t) + b_k sin(2 pi k t) ].
 */

namespace bounce {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// f, f' and f'' at one time.
struct ForcingValues {
  double f = 0.0;
  double df = 0.0;
  double ddf = 0.0;
};

class ForcingProfile {
public:
  /// Below this gap the divided difference switches to quadrature of f'.
  static constexpr double dd_switch = 1e-5;
  static constexpr int sup_samples = 10'001;

  ForcingProfile() : ForcingProfile(std::vector<double>{}, std::vector<double>{}) {}

  /**
   * @brief Build from cosine amplitudes [a_0, a_1, ...] and sine amplitudes [b_1, b_2, ...].
   *
   * The degree is the larger of the two series; missing entries are zero.
   */
  ForcingProfile(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
    std::size_t const degree = std::max(cos_coeffs.empty() ? 0 : cos_coeffs.size() - 1, sin_coeffs.size());
    cos_.assign(degree + 1, 0.0);
    sin_.assign(degree + 1, 0.0);
    std::copy(cos_coeffs.begin(), cos_coeffs.end(), cos_.begin());
    std::copy(sin_coeffs.begin(), sin_coeffs.end(), sin_.begin() + 1);
    for (int m = 0; m < 3; ++m) {
      sup_[m] = compute_sup_norm(m);
    }
    osc_ = compute_oscillation_norm();
  }

  /// Pure cosine harmonic a cos(2 pi k t).
  static ForcingProfile cosine(double amplitude, int harmonic = 1) {
    std::vector<double> c(static_cast<std::size_t>(harmonic) + 1, 0.0);
    c.back() = amplitude;
    return {std::move(c), {}};
  }

  [[nodiscard]] int degree() const noexcept { return static_cast<int>(cos_.size()) - 1; }

  /// Cosine amplitudes a_0..a_K.
  [[nodiscard]] std::span<const double> cos_coeffs() const noexcept { return cos_; }

  /// Sine amplitudes b_1..b_K.
  [[nodiscard]] std::span<const double> sin_coeffs() const noexcept {
    return std::span<const double>(sin_).subspan(1);
  }

  [[nodiscard]] bool is_zero() const noexcept {
    return std::all_of(cos_.begin(), cos_.end(), [](double x) { return x == 0.0; }) &&
           std::all_of(sin_.begin(), sin_.end(), [](double x) { return x == 0.0; });
  }

  /// Value and first two derivatives at t. Phases are reduced mod 1 harmonic by harmonic.
  [[nodiscard]] ForcingValues values(double t) const noexcept {
    ForcingValues out{cos_[0], 0.0, 0.0};
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      double const a = cos_[k];
      double const b = sin_[k];
      if (a == 0.0 && b == 0.0) {
        continue;
      }
      double const w = two_pi * static_cast<double>(k);
      double const ang = two_pi * phase(k, t);
      double const c = std::cos(ang);
      double const s = std::sin(ang);
      out.f += a * c + b * s;
      out.df += w * (b * c - a * s);
      out.ddf -= w * w * (a * c + b * s);
    }
    return out;
  }

  /// The order-th derivative of f at t, order in {0, 1, 2}.
  [[nodiscard]] double eval(double t, int order = 0) const {
    ForcingValues const v = values(t);
    switch (order) {
      case 0:
        return v.f;
      case 1:
        return v.df;
      case 2:
        return v.ddf;
      default:
        throw std::invalid_argument("ForcingProfile::eval: order must be 0, 1 or 2");
    }
  }

  [[nodiscard]] double operator()(double t) const noexcept { return values(t).f; }

  /// Sup norm of the order-th derivative over one period (precomputed).
  [[nodiscard]] double sup_norm(int order) const {
    if (order < 0 || order > 2) {
      throw std::invalid_argument("ForcingProfile::sup_norm: order must be 0, 1 or 2");
    }
    return sup_[static_cast<std::size_t>(order)];
  }

  /// sup |f - a_0|: half-width bound on the racket excursion, max f - min f <= 2 * this.
  [[nodiscard]] double oscillation_norm() const noexcept { return osc_; }

  /// Coefficient bound sum_k (2 pi k)^order (|a_k| + |b_k|) on the sup norm.
  [[nodiscard]] double coefficient_bound(int order) const noexcept {
    double sum = order == 0 ? std::abs(cos_[0]) : 0.0;
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      sum += std::pow(two_pi * static_cast<double>(k), order) * (std::abs(cos_[k]) + std::abs(sin_[k]));
    }
    return sum;
  }

  /**
   * @brief Divided difference f[t0, t1] = (f(t1) - f(t0)) / (t1 - t0).
   *
   * For |t1 - t0| < dd_switch the mean of f' over the segment is integrated with 8-point
   * Gauss-Legendre; at t0 == t1 this is f'(t0). The direct branch uses the product form
   * cos x - cos y = -2 sin((x+y)/2) sin((x-y)/2), which is free of cancellation.
   */
  [[nodiscard]] double divided_difference(double t0, double t1) const noexcept {
    double const h = t1 - t0;
    if (std::abs(h) < dd_switch) {
      return mean_derivative(t0, h);
    }
    double const mid = 0.5 * (t0 + t1);
    double sum = 0.0;
    for (std::size_t k = 1; k < cos_.size(); ++k) {
      double const a = cos_[k];
      double const b = sin_[k];
      if (a == 0.0 && b == 0.0) {
        continue;
      }
      double const half = std::numbers::pi * static_cast<double>(k) * h;
      double const ang = two_pi * phase(k, mid);
      double const sm = std::sin(ang);
      double const cm = std::cos(ang);
      double const sh = std::sin(half);
      sum += 2.0 * sh * (b * cm - a * sm);
    }
    return sum / h;
  }

  /// Partials (d/dt0, d/dt1) of f[t0, t1]; quadrature of s f'' and (1 - s) f'' on short gaps.
  [[nodiscard]] std::pair<double, double> divided_difference_partials(double t0, double t1) const noexcept {
    double const h = t1 - t0;
    if (std::abs(h) < dd_switch) {
      double d0 = 0.0;
      double d1 = 0.0;
      gauss_legendre_01([&](double s, double wt) {
        double const ddf = values(t0 + s * h).ddf;
        d0 += wt * (1.0 - s) * ddf;
        d1 += wt * s * ddf;
      });
      return {d0, d1};
    }
    double const dd = divided_difference(t0, t1);
    return {(dd - values(t0).df) / h, (values(t1).df - dd) / h};
  }

private:
  // Calls fn(node, weight) for 8-point Gauss-Legendre on [0, 1].
  template <class Fn>
  static void gauss_legendre_01(Fn&& fn) {
    static constexpr std::array<double, 4> nodes = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                                    0.9602898564975363};
    static constexpr std::array<double, 4> weights = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                      0.1012285362903763};
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      fn(0.5 * (1.0 - nodes[i]), 0.5 * weights[i]);
      fn(0.5 * (1.0 + nodes[i]), 0.5 * weights[i]);
    }
  }

  static double phase(std::size_t k, double t) noexcept {
    double const x = static_cast<double>(k) * t;
    return x - std::floor(x);
  }

  // Mean of f' over [t0, t0 + h] by 8-point Gauss-Legendre on [0, 1].
  [[nodiscard]] double mean_derivative(double t0, double h) const noexcept {
    double sum = 0.0;
    gauss_legendre_01([&](double s, double wt) { sum += wt * values(t0 + s * h).df; });
    return sum;
  }

  template <class Fn>
  static double sampled_sup(Fn&& fn) {
    double best = 0.0;
    int arg = 0;
    for (int i = 0; i < sup_samples; ++i) {
      double const v = std::abs(fn(static_cast<double>(i) / (sup_samples - 1)));
      if (v > best) {
        best = v;
        arg = i;
      }
    }
    // Golden-section refinement on the two cells around the sampled argmax.
    double const h = 1.0 / (sup_samples - 1);
    double lo = static_cast<double>(arg) * h - h;
    double hi = static_cast<double>(arg) * h + h;
    double const r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = std::abs(fn(x1));
    double f2 = std::abs(fn(x2));
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
      if (f1 > f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - r * (hi - lo);
        f1 = std::abs(fn(x1));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + r * (hi - lo);
        f2 = std::abs(fn(x2));
      }
    }
    return std::max({best, f1, f2});
  }

  [[nodiscard]] double compute_sup_norm(int order) const {
    if (is_zero()) {
      return 0.0;
    }
    return sampled_sup([&](double t) { return eval(t, order); });
  }

  [[nodiscard]] double compute_oscillation_norm() const {
    if (is_zero()) {
      return 0.0;
    }
    double const a0 = cos_[0];
    return sampled_sup([&](double t) { return values(t).f - a0; });
  }

  std::vector<double> cos_;  // a_0..a_K
  std::vector<double> sin_;  // b_0 (always 0)..b_K
  std::array<double, 3> sup_{};
  double osc_ = 0.0;
};

}  // namespace bounce
