#include "mfl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfl/quadrature.hpp"

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

PenroseResult penrose_check(const Equilibrium& eq, const Potential& pot) {
  PenroseResult res;
  res.penrose_integral = eq.penrose_integral();
  res.margin = -std::numeric_limits<double>::infinity();
  const int k_lim = pot.max_mode();
  bool any_positive = false;
  for (int k = 1; k <= k_lim; ++k) {
    const double phik = pot.fourier_coefficient(k);
    if (phik <= 0.0) continue;
    any_positive = true;
    const double m = phik * res.penrose_integral - 1.0;
    if (m > res.margin) {  // strict: smallest k wins ties
      res.margin = m;
      res.k0 = k;
    }
  }
  if (!any_positive) {
    res.diagnostic = "no mode with phi_hat(k) > 0; Penrose mechanism requires "
                     "a repulsive component";
    return res;
  }
  res.unstable = res.margin > 0.0;
  return res;
}

Complex dispersion(const Equilibrium& eq, const Potential& pot, Complex lambda,
                   int k, double abs_tol, double re_floor) {
  if (k == 0) throw std::invalid_argument("dispersion: k must be nonzero");
  if (lambda.real() < re_floor)
    throw QuadratureError("dispersion: Re lambda below the resolvable floor");
  const double xi = kTwoPi * k;
  const double vmax = eq.v_max();
  auto integrand = [&](double v) -> Complex {
    return Complex(0.0, xi) * eq.derivative(v) /
           (lambda + Complex(0.0, xi * v));
  };
  // The integrand peaks near v = -Im(lambda)/xi with width Re(lambda)/|xi|;
  // splitting there keeps the adaptive refinement local.
  const double vpeak = -lambda.imag() / xi;
  Complex total;
  if (vpeak > -vmax && vpeak < vmax) {
    total = integrate_adaptive(integrand, -vmax, vpeak, 0.5 * abs_tol, 48) +
            integrate_adaptive(integrand, vpeak, vmax, 0.5 * abs_tol, 48);
  } else {
    total = integrate_adaptive(integrand, -vmax, vmax, abs_tol, 48);
  }
  return 1.0 - pot.fourier_coefficient(k) * total;
}

Complex dispersion_derivative(const Equilibrium& eq, const Potential& pot,
                              Complex lambda, int k, double abs_tol) {
  const double xi = kTwoPi * k;
  const double vmax = eq.v_max();
  auto integrand = [&](double v) -> Complex {
    const Complex den = lambda + Complex(0.0, xi * v);
    return Complex(0.0, xi) * eq.derivative(v) / (den * den);
  };
  const double vpeak = -lambda.imag() / xi;
  Complex total;
  if (vpeak > -vmax && vpeak < vmax) {
    total = integrate_adaptive(integrand, -vmax, vpeak, 0.5 * abs_tol, 48) +
            integrate_adaptive(integrand, vpeak, vmax, 0.5 * abs_tol, 48);
  } else {
    total = integrate_adaptive(integrand, -vmax, vmax, abs_tol, 48);
  }
  return pot.fourier_coefficient(k) * total;
}

namespace {

// Real-axis dispersion 1 - xi^2 phi_hat int v f' / (lambda^2 + xi^2 v^2) dv.
// Equals dispersion() for real lambda and even profiles, but stays finite
// down to lambda = 0 (the integrand is regular there).
double dispersion_real(const Equilibrium& eq, const Potential& pot,
                       double lambda, int k) {
  const double xi = kTwoPi * k;
  auto integrand = [&](double v) {
    return v * eq.derivative(v) / (lambda * lambda + xi * xi * v * v);
  };
  const double total =
      integrate_adaptive(integrand, -eq.v_max(), eq.v_max(), 1e-14, 48);
  return 1.0 - xi * xi * pot.fourier_coefficient(k) * total;
}

}  // namespace

double find_real_growth_rate(const Equilibrium& eq, const Potential& pot,
                             int k0) {
  const double phik = pot.fourier_coefficient(k0);
  const double margin = phik * eq.penrose_integral() - 1.0;
  if (phik <= 0.0 || margin <= 0.0)
    throw std::runtime_error(
        "find_real_growth_rate: bracket failure, Penrose margin <= 0 at k0");

  double lo = 0.0;  // D(0+) = -margin < 0
  double hi = 1.0;
  int guard = 0;
  while (dispersion_real(eq, pot, hi, k0) <= 0.0) {
    hi *= 2.0;
    if (++guard > 60)
      throw std::runtime_error("find_real_growth_rate: no upper bracket");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dispersion_real(eq, pot, mid, k0) <= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigenmode::Eigenmode(const Equilibrium& eq, const Potential& pot,
                     double lambda0, int k0, int n_v)
    : eq_(eq), lambda_(lambda0, 0.0), k0_(k0), xi_(kTwoPi * k0) {
  (void)pot;
  if (lambda0 <= 0.0)
    throw std::invalid_argument("Eigenmode: growth rate must be positive");

  // Normalize so sup |g| / f_inf = 1. The x-envelope of g at fixed v is
  // sqrt(c^2 + s^2) = |f'| / sqrt(lambda^2 + xi^2 v^2).
  const double vmax = eq_.v_max();
  const int n_dense = 65537;
  double sup = 0.0;
  for (int i = 0; i < n_dense; ++i) {
    const double v = -vmax + 2.0 * vmax * i / (n_dense - 1);
    const double q = lambda0 * lambda0 + xi_ * xi_ * v * v;
    const double env = std::abs(eq_.derivative(v)) / std::sqrt(q);
    sup = std::max(sup, env / eq_.value(v));
  }
  envelope_ = 1.0;
  scale_ = 1.0 / sup;

  v_nodes_.resize(n_v);
  cos_samples_.resize(n_v);
  sin_samples_.resize(n_v);
  for (int i = 0; i < n_v; ++i) {
    const double v = -vmax + 2.0 * vmax * i / (n_v - 1);
    v_nodes_[i] = v;
    cos_samples_[i] = cos_profile(v);
    sin_samples_[i] = sin_profile(v);
  }

  // |rho_hat(k0)| = |int (c - i s)/2 dv|; the s part vanishes by oddness.
  auto cprof = [&](double v) { return cos_profile(v); };
  auto sprof = [&](double v) { return sin_profile(v); };
  const double ic = integrate_adaptive(cprof, -vmax, vmax, 1e-13);
  const double is = integrate_adaptive(sprof, -vmax, vmax, 1e-13);
  rho_amp_ = 0.5 * std::hypot(ic, is);
}

double Eigenmode::raw_cos(double v) const {
  const double q = std::norm(lambda_) + xi_ * xi_ * v * v;
  return xi_ * v * eq_.derivative(v) / q;
}

double Eigenmode::raw_sin(double v) const {
  const double q = std::norm(lambda_) + xi_ * xi_ * v * v;
  return -lambda_.real() * eq_.derivative(v) / q;
}

double Eigenmode::value(double x, double v) const {
  return cos_profile(v) * std::cos(xi_ * x) + sin_profile(v) * std::sin(xi_ * x);
}

Complex Eigenmode::mode_profile(double v) const {
  return 0.5 * Complex(cos_profile(v), -sin_profile(v));
}

double Eigenmode::mass() const {
  // Both cos(xi x) and sin(xi x) average to zero over the torus.
  return 0.0;
}

Eigenmode build_eigenfunction(const Equilibrium& eq, const Potential& pot,
                              double lambda0, int k0, int n_v) {
  return Eigenmode(eq, pot, lambda0, k0, n_v);
}

namespace {

struct BoundaryWalk {
  const Equilibrium& eq;
  const Potential& pot;
  int k;
  double quad_tol;
  double total_arg = 0.0;

  Complex eval(Complex z) const {
    Complex d = dispersion(eq, pot, z, k, quad_tol);
    if (std::abs(d) < 1e-12)
      throw ContourThroughRoot("scan: contour passes through a root");
    return d;
  }

  // Accumulate the argument change of D along the segment [z0, z1],
  // bisecting until each step turns by less than ~0.8 rad.
  void march(Complex z0, Complex d0, Complex z1, Complex d1, int depth) {
    const double dphi = std::arg(d1 / d0);
    if (std::abs(dphi) < 0.8 || depth <= 0) {
      total_arg += dphi;
      return;
    }
    const Complex zm = 0.5 * (z0 + z1);
    const Complex dm = eval(zm);
    march(z0, d0, zm, dm, depth - 1);
    march(zm, dm, z1, d1, depth - 1);
  }
};

int winding_number(const Equilibrium& eq, const Potential& pot, int k,
                   const SpectrumRegion& r, double quad_tol) {
  BoundaryWalk walk{eq, pot, k, quad_tol};
  const Complex corners[5] = {{r.re_min, r.im_min},
                              {r.re_max, r.im_min},
                              {r.re_max, r.im_max},
                              {r.re_min, r.im_max},
                              {r.re_min, r.im_min}};
  const int coarse = 8;
  Complex zprev = corners[0];
  Complex dprev = walk.eval(zprev);
  for (int e = 0; e < 4; ++e) {
    for (int s = 1; s <= coarse; ++s) {
      const Complex z =
          corners[e] + (corners[e + 1] - corners[e]) * (double(s) / coarse);
      const Complex d = walk.eval(z);
      walk.march(zprev, dprev, z, d, 40);
      zprev = z;
      dprev = d;
    }
  }
  const double w = walk.total_arg / kTwoPi;
  const int n = static_cast<int>(std::lround(w));
  if (std::abs(w - n) > 0.2)
    throw std::runtime_error("scan: winding number did not converge");
  return n;
}

void find_roots_in(const Equilibrium& eq, const Potential& pot, int k,
                   const SpectrumRegion& r, double re_floor,
                   std::vector<SpectrumRoot>& out, int depth) {
  const int count = winding_number(eq, pot, k, r, 1e-11);
  if (count == 0) return;
  const double dre = r.re_max - r.re_min;
  const double dim = r.im_max - r.im_min;
  if ((count == 1 && dre < 0.05 && dim < 0.05) || depth <= 0) {
    // Newton polish from the cell center.
    Complex z(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max));
    for (int it = 0; it < 80; ++it) {
      const Complex d = dispersion(eq, pot, z, k, 1e-13);
      if (std::abs(d) <= 1e-11) break;
      const Complex dp = dispersion_derivative(eq, pot, z, k, 1e-13);
      Complex step = d / dp;
      // keep the iterate inside the resolvable half-plane
      while ((z - step).real() < re_floor) step *= 0.5;
      z -= step;
    }
    if (std::abs(dispersion(eq, pot, z, k, 1e-13)) <= 1e-10)
      out.push_back({z, k});
    return;
  }
  // asymmetric split fractions dodge roots sitting on symmetry lines (a
  // symmetric region would otherwise split straight through a real root);
  // on a contour hit, retry with a different fraction
  const double fractions[3] = {0.5371, 0.4628, 0.6113};
  for (int attempt = 0; attempt < 3; ++attempt) {
    const double fr = fractions[attempt];
    const double rm = r.re_min + fr * (r.re_max - r.re_min);
    const double im = r.im_min + fr * (r.im_max - r.im_min);
    std::vector<SpectrumRoot> sub_roots;
    try {
      find_roots_in(eq, pot, k, {r.re_min, rm, r.im_min, im}, re_floor,
                    sub_roots, depth - 1);
      find_roots_in(eq, pot, k, {rm, r.re_max, r.im_min, im}, re_floor,
                    sub_roots, depth - 1);
      find_roots_in(eq, pot, k, {r.re_min, rm, im, r.im_max}, re_floor,
                    sub_roots, depth - 1);
      find_roots_in(eq, pot, k, {rm, r.re_max, im, r.im_max}, re_floor,
                    sub_roots, depth - 1);
    } catch (const ContourThroughRoot&) {
      if (attempt == 2) throw;
      continue;
    }
    out.insert(out.end(), sub_roots.begin(), sub_roots.end());
    return;
  }
}

}  // namespace

std::vector<SpectrumRoot> scan_unstable_spectrum(const Equilibrium& eq,
                                                 const Potential& pot,
                                                 const SpectrumRegion& region,
                                                 double re_floor) {
  if (region.re_min < re_floor)
    throw std::invalid_argument("scan: region must satisfy Re >= floor");
  if (region.re_min >= region.re_max || region.im_min >= region.im_max)
    throw std::invalid_argument("scan: empty region");

  std::vector<SpectrumRoot> roots;
  for (int k = 1; k <= pot.max_mode(); ++k) {
    if (pot.fourier_coefficient(k) == 0.0) continue;
    find_roots_in(eq, pot, k, region, re_floor, roots, 24);
  }
  // dedupe (subdivision can revisit a root near a cell edge)
  std::vector<SpectrumRoot> unique;
  for (const auto& r : roots) {
    bool dup = false;
    for (const auto& u : unique)
      if (u.k == r.k && std::abs(u.lambda - r.lambda) < 1e-7) dup = true;
    if (!dup) unique.push_back(r);
  }
  std::sort(unique.begin(), unique.end(), [](const auto& a, const auto& b) {
    if (a.lambda.real() != b.lambda.real())
      return a.lambda.real() > b.lambda.real();
    if (a.lambda.imag() != b.lambda.imag())
      return a.lambda.imag() < b.lambda.imag();
    return a.k < b.k;
  });
  return unique;
}

}  // namespace mfl
