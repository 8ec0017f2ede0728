#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace mfl {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

/// Cached rule of the given order (thread-safe).
const GaussRule& gauss_legendre(int order);

/// Integrate f over [a, b] with n equal Gauss-Legendre panels.
template <typename F>
auto integrate_panels(F&& f, double a, double b, int panels, int order = 48)
    -> decltype(f(0.0)) {
  const GaussRule& rule = gauss_legendre(order);
  using R = decltype(f(0.0));
  R total{};
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    R acc{};
    for (int i = 0; i < order; ++i)
      acc += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

namespace detail {

template <typename F, typename R>
void adapt_rec(F& f, double a, double b, R whole, double tol, double floor,
               int depth, int order, R& out, int& evals) {
  const double m = 0.5 * (a + b);
  R left = integrate_panels(f, a, m, 1, order);
  R right = integrate_panels(f, m, b, 1, order);
  evals += 2 * order;
  const double err = std::abs(left + right - whole);
  // the floor keeps round-off noise in sharp-feature integrands from
  // forcing unreachable subdivision depths
  const double accept = std::max(tol, floor);
  if (err < accept || depth <= 0) {
    if (depth <= 0 && err > 16 * accept)
      throw QuadratureError("adaptive quadrature did not converge");
    out += left + right;
    return;
  }
  adapt_rec(f, a, m, left, 0.5 * tol, floor, depth - 1, order, out, evals);
  adapt_rec(f, m, b, right, 0.5 * tol, floor, depth - 1, order, out, evals);
}

}  // namespace detail

/// Adaptive bisection quadrature; throws QuadratureError when the requested
/// absolute tolerance is unreachable within the depth budget.
template <typename F>
auto integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-12,
                        int max_depth = 40, int order = 24)
    -> decltype(f(0.0)) {
  using R = decltype(f(0.0));
  R whole = integrate_panels(f, a, b, 1, order);
  R out{};
  int evals = order;
  const double floor = 1e-15 * (std::abs(whole) + 1.0);
  detail::adapt_rec(f, a, b, whole, abs_tol, floor, max_depth, order, out,
                    evals);
  return out;
}

}  // namespace mfl
