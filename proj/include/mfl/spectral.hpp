#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "mfl/equilibrium.hpp"
#include "mfl/potential.hpp"

namespace mfl {

using Complex = std::complex<double>;

struct PenroseResult {
  bool unstable = false;
  double margin = 0.0;  // max_k (phi_hat(k) * penrose_integral - 1)
  int k0 = 0;           // arg max; smallest k on ties, positive k reported
  double penrose_integral = 0.0;
  std::string diagnostic;  // set when no mode with phi_hat(k) > 0 exists
};

/// Penrose classification: unstable iff some k with phi_hat(k) > 0 satisfies
/// phi_hat(k) * penrose_integral > 1.
PenroseResult penrose_check(const Equilibrium& eq, const Potential& pot);

/// Dispersion function D(lambda, k) = 1 - phi_hat(k) *
/// int 2 pi i k f'(v) / (lambda + 2 pi i k v) dv, analytic on Re lambda > 0.
/// Unstable eigenvalues are its zeros. Throws QuadratureError when Re lambda
/// sits below `re_floor` where the integrand is too sharp to resolve.
Complex dispersion(const Equilibrium& eq, const Potential& pot, Complex lambda,
                   int k, double abs_tol = 1e-13, double re_floor = 1e-6);

/// d D / d lambda by quadrature (used by the Newton polish in the scan).
Complex dispersion_derivative(const Equilibrium& eq, const Potential& pot,
                              Complex lambda, int k, double abs_tol = 1e-13);

/// Maximal real growth rate at mode k0: the root of
/// xi^2 phi_hat(k0) int v f'(v) / (lambda^2 + xi^2 v^2) dv = 1, xi = 2 pi k0,
/// located by doubling bracket + bisection. Requires an unstable margin.
double find_real_growth_rate(const Equilibrium& eq, const Potential& pot,
                             int k0);

/// Growing mode g(x, v) = c(v) cos(2 pi k0 x) + s(v) sin(2 pi k0 x) with
///   c(v) = xi v f'(v) / (lambda^2 + xi^2 v^2),
///   s(v) = -lambda f'(v) / (lambda^2 + xi^2 v^2),
/// scaled so that sup |g| / f_inf = 1 (which makes the rejection-sampling
/// envelope of f_inf + eps*g exactly 1 + eps).
class Eigenmode {
 public:
  Eigenmode(const Equilibrium& eq, const Potential& pot, double lambda0,
            int k0, int n_v = 1025);

  int k0() const { return k0_; }
  Complex lambda() const { return lambda_; }
  double growth_rate() const { return lambda_.real(); }

  double cos_profile(double v) const { return scale_ * raw_cos(v); }
  double sin_profile(double v) const { return scale_ * raw_sin(v); }
  double value(double x, double v) const;

  /// Fourier profile at mode +k0: (c(v) - i s(v)) / 2.
  Complex mode_profile(double v) const;

  /// sup over (x, v) of |g| / f_inf; equals 1 after normalization.
  double envelope_ratio() const { return envelope_; }

  /// |integral of exp(-2 pi i k0 x) g dx dv| = |rho_hat(k0)| of the mode.
  double rho_amplitude() const { return rho_amp_; }

  /// Total mass (should vanish: both x factors average to zero).
  double mass() const;

  const Equilibrium& equilibrium() const { return eq_; }
  const Eigen::ArrayXd& v_nodes() const { return v_nodes_; }
  const Eigen::ArrayXd& cos_samples() const { return cos_samples_; }
  const Eigen::ArrayXd& sin_samples() const { return sin_samples_; }

 private:
  double raw_cos(double v) const;
  double raw_sin(double v) const;

  Equilibrium eq_;
  Complex lambda_;
  int k0_;
  double xi_;
  double scale_ = 1.0;
  double envelope_ = 1.0;
  double rho_amp_ = 0.0;
  Eigen::ArrayXd v_nodes_, cos_samples_, sin_samples_;
};

Eigenmode build_eigenfunction(const Equilibrium& eq, const Potential& pot,
                              double lambda0, int k0, int n_v = 1025);

struct SpectrumRegion {
  double re_min, re_max, im_min, im_max;
};

struct SpectrumRoot {
  Complex lambda;
  int k;
};

struct ContourThroughRoot : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All zeros of D(., k) inside the region, per candidate mode k >= 1 with a
/// nonzero coefficient: winding-number counting on the boundary, rectangle
/// subdivision, then Newton polish. Roots are returned sorted by descending
/// real part. Throws ContourThroughRoot when |D| < 1e-12 on a boundary (the
/// caller should shift the region).
std::vector<SpectrumRoot> scan_unstable_spectrum(const Equilibrium& eq,
                                                 const Potential& pot,
                                                 const SpectrumRegion& region,
                                                 double re_floor = 1e-6);

}  // namespace mfl
