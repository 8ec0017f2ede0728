#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "mfl/equilibrium.hpp"
#include "mfl/quadrature.hpp"
#include "oracles.hpp"

using mfl::Equilibrium;

namespace {

// Independent PV oracle: integrate f'(v)/v with the removable singularity
// filled by its Taylor value, using adaptive Simpson on both half-lines.
// The cutoff radius keeps the cancellation noise of f'(v) near v = 0 out of
// the integrand (the quadratic correction covers the truncation).
double penrose_oracle(const Equilibrium& eq) {
  const double vmax = eq.v_max();
  const double a = 1e-4;
  const double f2 = eq.second_derivative(0.0);
  // fourth-derivative estimate for the inner quadratic term
  const double h = 1e-2;
  const double f4 = (eq.second_derivative(h) - 2.0 * f2 +
                     eq.second_derivative(-h)) / (h * h);
  const double inner = 2.0 * a * f2 + a * a * a * f4 / 9.0;
  return oracle::integrate([&](double v) { return eq.derivative(v) / v; },
                           -vmax, -a, 1e-11) +
         inner +
         oracle::integrate([&](double v) { return eq.derivative(v) / v; }, a,
                           vmax, 1e-11);
}

}  // namespace

TEST_CASE("maxwellian point values") {
  const auto eq = Equilibrium::maxwellian(1.0);
  CHECK(eq.value(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI))
                             .epsilon(1e-14));
  CHECK(eq.derivative(0.0) == 0.0);
  CHECK(eq.derivative(1.0) ==
        doctest::Approx(-std::exp(-0.5) / std::sqrt(2.0 * M_PI))
            .epsilon(1e-14));
}

TEST_CASE("two-stream reduces to shifted maxwellian halves") {
  const auto eq = Equilibrium::two_stream(0.1, 0.7);
  const auto m = Equilibrium::maxwellian(0.1);
  for (const double v : {-1.3, -0.2, 0.0, 0.4, 2.0}) {
    CHECK(eq.value(v) ==
          doctest::Approx(0.5 * (m.value(v - 0.7) + m.value(v + 0.7)))
              .epsilon(1e-14));
    CHECK(eq.value(v) == doctest::Approx(eq.value(-v)).epsilon(1e-14));
  }
  // at v = 0 both branches coincide
  CHECK(eq.value(0.0) == doctest::Approx(m.value(0.7)).epsilon(1e-14));
}

TEST_CASE("normalization within 1e-10 for built-ins") {
  for (const auto& eq :
       {Equilibrium::maxwellian(0.05), Equilibrium::maxwellian(2.0),
        Equilibrium::two_stream(0.05, 0.5), Equilibrium::two_stream(1.0, 3.0)}) {
    CHECK(std::abs(eq.moment(0.0) - 1.0) <= 1e-10);
    CHECK(eq.value(eq.v_max()) <= 2e-16);
    CHECK(eq.value(0.9 * eq.v_max()) > 1e-16);
  }
}

TEST_CASE("moments: maxwellian and two-stream") {
  const auto m = Equilibrium::maxwellian(1.0);
  CHECK(m.moment(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.moment(2.0) == doctest::Approx(1.0).epsilon(1e-12));

  const auto ts = Equilibrium::two_stream(0.3, 0.8);
  // quadrature oracle for the second moment
  const double want = oracle::integrate(
      [&](double v) { return v * v * ts.value(v); }, -ts.v_max(), ts.v_max());
  CHECK(ts.moment(2.0) == doctest::Approx(0.3 + 0.64).epsilon(1e-10));
  CHECK(ts.moment(2.0) == doctest::Approx(want).epsilon(1e-10));
  // non-integer order goes through the graded panels
  const double q15 = oracle::integrate(
      [&](double v) { return std::pow(std::abs(v), 1.5) * ts.value(v); },
      -ts.v_max(), ts.v_max());
  CHECK(ts.moment(1.5) == doctest::Approx(q15).epsilon(1e-9));
}

TEST_CASE("penrose integral equals -1/theta for maxwellians") {
  for (const double theta : {0.01, 0.1, 1.0, 10.0}) {
    const auto eq = Equilibrium::maxwellian(theta);
    const double p = eq.penrose_integral();
    CHECK(std::abs(p - (-1.0 / theta)) <= 1e-8 * std::max(1.0, 1.0 / theta));
    CHECK(p < 0.0);
    // dual-quadrature agreement
    CHECK(std::abs(p - penrose_oracle(eq)) <= 1e-8 * std::max(1.0, -p));
  }
}

TEST_CASE("penrose integral: separated two-stream is positive") {
  const auto eq = Equilibrium::two_stream(0.05, 0.5);
  const double p = eq.penrose_integral();
  CHECK(p > 0.0);
  CHECK(p > 2.0);  // strong enough for the cosine mode
  // frozen against an independent PV quadrature and the Dawson closed form
  CHECK(p == doctest::Approx(5.6292140443524685).epsilon(2e-9));
  CHECK(std::abs(p - penrose_oracle(eq)) <= 1e-8 * p);
}

TEST_CASE("penrose integral is monotone in the stream separation") {
  // monotone up to the peak near v0 ~ 1.6 sqrt(theta); the sampled grid
  // stays below it
  double prev = -1e300;
  for (const double v0 : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    const double p = Equilibrium::two_stream(0.05, v0).penrose_integral();
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("even profiles: integral equals doubled half-line") {
  const auto eq = Equilibrium::two_stream(0.2, 0.6);
  auto f = [&](double v) { return eq.value(v); };
  const double full = oracle::integrate(f, -eq.v_max(), eq.v_max());
  const double half = oracle::integrate(f, 0.0, eq.v_max());
  CHECK(full == doctest::Approx(2.0 * half).epsilon(1e-12));
}

TEST_CASE("derivative matches central differences at order >= 1.9") {
  const auto eq = Equilibrium::two_stream(0.3, 0.9);
  const double v = 0.37;
  double err_coarse = 0.0, err_fine = 0.0;
  const double h0 = 1e-3;
  for (const auto& [h, err] :
       {std::pair<double, double*>{h0, &err_coarse}, {h0 / 2, &err_fine}}) {
    const double fd = (eq.value(v + h) - eq.value(v - h)) / (2.0 * h);
    *err = std::abs(fd - eq.derivative(v));
  }
  const double order = std::log2(err_coarse / err_fine);
  CHECK(order >= 1.9);
}

TEST_CASE("ratio bound is finite and positive") {
  for (const auto& eq :
       {Equilibrium::maxwellian(0.5), Equilibrium::two_stream(0.05, 0.5)}) {
    const double b = eq.ratio_bound();
    CHECK(b > 0.0);
    CHECK(std::isfinite(b));
  }
}

TEST_CASE("tabulated profile: stored nodes and refinement study") {
  const auto base = Equilibrium::maxwellian(0.8);
  auto build = [&](int n) {
    Eigen::ArrayXd v = Eigen::ArrayXd::LinSpaced(n, -base.v_max(), base.v_max());
    Eigen::ArrayXd f(n);
    for (int i = 0; i < n; ++i) f[i] = base.value(v[i]);
    return Equilibrium::tabulated(v, f);
  };
  const auto tab = build(201);

  // at a grid node the stored (renormalized) value is reproduced
  const double node = tab.value(0.0);
  CHECK(node == doctest::Approx(base.value(0.0)).epsilon(1e-6));

  // off-node: dense-grid refinement shrinks the interpolation error
  const double probe = 0.123456;
  const double err_coarse = std::abs(build(201).value(probe) - base.value(probe));
  const double err_fine = std::abs(build(401).value(probe) - base.value(probe));
  CHECK(err_fine < err_coarse);
  CHECK(err_fine < 1e-8);

  // finite-difference consistency of the spline derivative, order >= 1.9
  const double v = 0.313;
  const double h = 1e-3;
  const double fd1 = (tab.value(v + h) - tab.value(v - h)) / (2 * h);
  const double fd2 =
      (tab.value(v + h / 2) - tab.value(v - h / 2)) / h;
  const double e1 = std::abs(fd1 - tab.derivative(v));
  const double e2 = std::abs(fd2 - tab.derivative(v));
  CHECK(std::log2(e1 / e2) >= 1.9);

  CHECK(std::abs(tab.moment(0.0) - 1.0) <= 1e-10);
}

TEST_CASE("tabulated input validation") {
  Eigen::ArrayXd v(3), f(3);
  v << 0, 1, 2;
  f << 1, 1, 1;
  CHECK_THROWS(Equilibrium::tabulated(v, f));  // too few nodes
  Eigen::ArrayXd v4(4), f4(4);
  v4 << 0, 1, 1, 2;  // not strictly increasing
  f4 << 1, 1, 1, 1;
  CHECK_THROWS(Equilibrium::tabulated(v4, f4));
  v4 << 0, 1, 2, 3;
  f4 << 1, -1, 1, 1;  // negative value
  CHECK_THROWS(Equilibrium::tabulated(v4, f4));
}
