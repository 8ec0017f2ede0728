#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "mfl/potential.hpp"
#include "mfl/rng.hpp"
#include "mfl/torus.hpp"
#include "oracles.hpp"

using mfl::Potential;
using Complex = std::complex<double>;

namespace {

// quadrature oracle for phi_hat(k) = int phi(x) exp(-2 pi i k x) dx
double coefficient_oracle(const Potential& pot, int k) {
  return oracle::integrate(
      [&](double x) { return pot.value(x) * std::cos(2.0 * M_PI * k * x); },
      -0.5, 0.5, 1e-13);
}

}  // namespace

TEST_CASE("cosine coefficients") {
  const auto pot = Potential::cosine(1.0);
  CHECK(pot.fourier_coefficient(1) == 0.5);
  CHECK(pot.fourier_coefficient(-1) == 0.5);
  CHECK(pot.fourier_coefficient(0) == 0.0);
  CHECK(pot.fourier_coefficient(2) == 0.0);
  CHECK(std::abs(pot.fourier_coefficient(1) - coefficient_oracle(pot, 1)) <=
        1e-12);
}

TEST_CASE("coulomb coefficients from direct integration") {
  const auto pot = Potential::coulomb1d();
  CHECK(pot.fourier_coefficient(1) ==
        doctest::Approx(1.0 / (4.0 * M_PI * M_PI)).epsilon(1e-14));
  CHECK(pot.fourier_coefficient(1) == doctest::Approx(0.02533).epsilon(1e-3));
  // the oracle integrates the implemented kernel (x^2 - |x|)/2 + 1/12
  for (const int k : {0, 1, 2, 5}) {
    CHECK(std::abs(pot.fourier_coefficient(k) - coefficient_oracle(pot, k)) <=
          1e-12);
  }
  // positivity, as the spectral analysis requires, and 1/k^2 decay
  for (int k = 1; k <= 32; ++k) {
    CHECK(pot.fourier_coefficient(k) > 0.0);
    CHECK(k * pot.fourier_coefficient(k) <=
          (1.0 + 1e-12) / (4.0 * M_PI * M_PI * k));
  }
}

TEST_CASE("fourier series reconstruction matches pointwise values") {
  const auto pot =
      Potential::fourier_series({{1, 0.3}, {2, -0.05}, {3, 0.01}});
  for (double x = -0.5; x < 0.5; x += 0.043) {
    double rec = pot.fourier_coefficient(0);
    for (int k = 1; k <= 3; ++k)
      rec += 2.0 * pot.fourier_coefficient(k) * std::cos(2.0 * M_PI * k * x);
    CHECK(std::abs(pot.value(x) - rec) <= 1e-10);
  }
}

TEST_CASE("forces") {
  const auto coul = Potential::coulomb1d();
  // repulsive kernel: the force at x = 0.25 pushes away from the origin
  CHECK(coul.force(0.25) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(coul.force(0.0) == 0.0);
  CHECK(std::abs(coul.force(0.5)) <= 1e-14);

  const auto cos1 = Potential::cosine(1.0);
  CHECK(cos1.force(0.125) ==
        doctest::Approx(2.0 * M_PI * std::sin(M_PI / 4.0)).epsilon(1e-14));

  // antisymmetry is exact (sign(0) = 0 tie rule)
  mfl::CounterRng rng(42);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-0.5, 0.5);
    for (const auto& pot : {coul, cos1}) {
      CHECK(pot.force(x) + pot.force(-x) == 0.0);
    }
  }
}

TEST_CASE("forces agree with finite differences of the potential") {
  const auto pots = {Potential::cosine(0.7),
                     Potential::fourier_series({{1, 0.2}, {4, 0.03}})};
  for (const auto& pot : pots) {
    for (double x = -0.45; x < 0.5; x += 0.07) {
      const double h = 1e-6;
      const double fd = -(pot.value(x + h) - pot.value(x - h)) / (2.0 * h);
      CHECK(std::abs(pot.force(x) - fd) <= 1e-7);
    }
  }
}

TEST_CASE("hessian sup") {
  CHECK(Potential::cosine(1.0).hessian_sup() ==
        doctest::Approx(4.0 * M_PI * M_PI).epsilon(1e-12));
  CHECK(Potential::cosine(0.5).hessian_sup() ==
        doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-12));
  CHECK_THROWS_AS(Potential::coulomb1d().hessian_sup(), mfl::UnsupportedKind);

  const auto fs = Potential::fourier_series({{1, 0.2}, {3, -0.04}});
  double bound = 0.0;
  for (const int k : {1, 3})
    bound += std::pow(2.0 * M_PI * k, 2) * std::abs(fs.fourier_coefficient(k));
  bound *= 2.0;  // both signs of k
  const double sup = fs.hessian_sup();
  CHECK(sup <= bound * (1.0 + 1e-12));
  CHECK(sup > 0.25 * bound);
}

TEST_CASE("field from density") {
  const auto cos1 = Potential::cosine(1.0);
  // rho_hat(1) = 1 gives E_hat(1) = -pi i
  const Complex e1 = cos1.field_mode(1, {1.0, 0.0});
  CHECK(std::abs(e1.real()) <= 1e-15);
  CHECK(e1.imag() == doctest::Approx(-M_PI).epsilon(1e-14));
  CHECK(cos1.field_mode(0, {3.0, 1.0}) == Complex(0.0, 0.0));

  const auto coul = Potential::coulomb1d();
  for (const int k : {1, 2, 7}) {
    const Complex ek = coul.field_mode(k, {1.0, 0.0});
    CHECK(ek.imag() == doctest::Approx(-1.0 / (2.0 * M_PI * k)).epsilon(1e-13));
    CHECK(std::abs(ek.real()) <= 1e-15);
  }
}

TEST_CASE("field matches real-space convolution of the force") {
  // E(x) = (force * rho)(x) for a band-limited density, evaluated by
  // adaptive quadrature with the integrand split at the kernel kink; the
  // spectral rule must reproduce it pointwise.
  auto rho = [](double y) {
    return 1.0 + 0.7 * std::cos(2.0 * M_PI * y + 0.3) +
           0.2 * std::cos(4.0 * M_PI * y - 1.1);
  };
  // rho_hat(k) for k = 1, 2 under the exp(-2 pi i k x) convention
  const Complex rho1 = 0.5 * 0.7 * std::polar(1.0, 0.3);
  const Complex rho2 = 0.5 * 0.2 * std::polar(1.0, -1.1);

  for (const auto& pot : {Potential::cosine(0.8), Potential::coulomb1d()}) {
    const Complex e1 = pot.field_mode(1, rho1);
    const Complex e2 = pot.field_mode(2, rho2);
    for (const double x : {-0.41, -0.13, 0.0, 0.27, 0.49}) {
      auto integrand = [&](double y) { return pot.force(x - y) * rho(y); };
      const double direct =
          oracle::integrate(integrand, x - 0.5, x, 1e-12) +
          oracle::integrate(integrand, x, x + 0.5, 1e-12);
      const double spectral =
          2.0 * (e1 * std::polar(1.0, 2.0 * M_PI * x)).real() +
          2.0 * (e2 * std::polar(1.0, 4.0 * M_PI * x)).real();
      CHECK(std::abs(direct - spectral) <= 1e-8);
    }
  }
}

TEST_CASE("wrap reduces to [-1/2, 1/2)") {
  CHECK(mfl::wrap(0.5) == -0.5);
  CHECK(mfl::wrap(-0.5) == -0.5);
  CHECK(mfl::wrap(1.25) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(mfl::torus_distance(-0.49, 0.49) == doctest::Approx(0.02).epsilon(1e-12));
}
