#pragma once

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mfl {

enum class PotentialKind { cosine, coulomb1d, fourier_series };

struct UnsupportedKind : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Even interaction potential on the unit torus [-1/2, 1/2).
///
/// Fourier convention: phi_hat(k) = int phi(x) exp(-2 pi i k x) dx, so
/// phi(x) = sum_k phi_hat(k) exp(2 pi i k x) with real, symmetric
/// coefficients. The repulsive 1-D Coulomb kernel is
///   phi(x) = (x^2 - |x|)/2 + 1/12,
/// the zero-mean solution of phi'' = 1 - delta, whose coefficients
/// phi_hat(k) = 1/(4 pi^2 k^2) are positive as the spectral analysis
/// requires.
class Potential {
 public:
  static Potential cosine(double amplitude);
  static Potential coulomb1d();
  /// Coefficient table {(k, phi_hat(k))}, k > 0; the k < 0 side is implied
  /// by symmetry and a k = 0 entry is accepted but physically inert.
  static Potential fourier_series(std::vector<std::pair<int, double>> coeffs);

  PotentialKind kind() const { return kind_; }
  double amplitude() const { return amplitude_; }

  /// phi_hat(k); zero beyond the coefficient table for fourier_series.
  double fourier_coefficient(int k) const;

  /// phi(x) with x reduced to the torus.
  double value(double x) const;

  /// Force -phi'(x) on the wrapped displacement; the Coulomb kernel uses
  /// sign(0) = 0 so coincident particles exert nothing on each other.
  double force(double x) const;

  /// sup |phi''|; throws UnsupportedKind for coulomb1d (phi'' is a measure).
  double hessian_sup() const;

  /// Field mode E_hat(k) = -2 pi i k phi_hat(k) rho_hat(k); zero at k = 0.
  std::complex<double> field_mode(int k, std::complex<double> rho_hat) const;

  /// Largest |k| with a nonzero coefficient (a practical cutoff for
  /// coulomb1d, whose tail decays like 1/k^2).
  int max_mode(int coulomb_cutoff = 64) const;

 private:
  Potential() = default;

  PotentialKind kind_ = PotentialKind::cosine;
  double amplitude_ = 1.0;
  std::vector<std::pair<int, double>> coeffs_;  // k > 0 entries
  double coeff0_ = 0.0;
};

}  // namespace mfl
