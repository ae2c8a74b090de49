#pragma once

// Gauss-Legendre rules, fixed-panel composite integration and a small
// adaptive bisection integrator.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace hostlab {

template <typename Scalar>
struct GaussLegendreRule {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector nodes;    // on [-1, 1], ascending
  Vector weights;
};

// n-point rule by Newton iteration on the Legendre recurrence.
template <typename Scalar = double>
GaussLegendreRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  GaussLegendreRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      const Scalar pn = n == 1 ? x : p1;
      const Scalar pnm1 = n == 1 ? Scalar(1) : p0;
      dp = Scalar(n) * (x * pn - pnm1) / (x * x - 1);
      const Scalar dx = pn / dp;
      x -= dx;
      if (std::abs(dx) <= 4 * eps) break;
    }
    // Recompute the derivative at the converged node for the weight.
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n == 1 ? Scalar(1) : Scalar(n) * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0;
  return rule;
}

const GaussLegendreRule<double>& gauss_legendre_16();

// One rule application on [lo, hi].
template <typename F, typename Scalar>
auto gauss_panel(F&& f, Scalar lo, Scalar hi, const GaussLegendreRule<Scalar>& rule) {
  const Scalar half = (hi - lo) / 2;
  const Scalar mid = (hi + lo) / 2;
  using Result = std::decay_t<decltype(f(mid))>;
  Result acc{};
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

// Per-panel values, summed left to right by the caller for a fixed
// reduction order.
template <typename F>
auto panel_values(F&& f, double lo, double hi, std::size_t panels,
                  const GaussLegendreRule<double>& rule) {
  using Result = std::decay_t<decltype(f(lo))>;
  std::vector<Result> out(panels);
  const double width = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + width * static_cast<double>(p);
    const double b = p + 1 == panels ? hi : a + width;
    out[p] = gauss_panel(f, a, b, rule);
  }
  return out;
}

namespace detail {
template <typename F, typename Result>
Result adaptive_step(F& f, double lo, double hi, Result whole, double tol, int depth,
                     bool& converged) {
  const double mid = 0.5 * (lo + hi);
  const Result left = gauss_panel(f, lo, mid, gauss_legendre_16());
  const Result right = gauss_panel(f, mid, hi, gauss_legendre_16());
  const Result both = left + right;
  if (std::abs(both - whole) <= tol) return both;
  if (depth == 0) {
    converged = false;
    return both;
  }
  return adaptive_step(f, lo, mid, left, tol / 2, depth - 1, converged) +
         adaptive_step(f, mid, hi, right, tol / 2, depth - 1, converged);
}
}  // namespace detail

// Bisects until the 16-point rule on a panel agrees with its two halves to
// the panel's share of `tol`.
template <typename F>
auto integrate_adaptive(F&& f, double lo, double hi, double tol, bool* converged = nullptr,
                        int max_depth = 40) {
  using Result = std::decay_t<decltype(f(lo))>;
  bool ok = true;
  const Result whole = gauss_panel(f, lo, hi, gauss_legendre_16());
  Result value = detail::adaptive_step(f, lo, hi, whole, tol, max_depth, ok);
  if (converged) *converged = ok;
  return value;
}

}  // namespace hostlab
