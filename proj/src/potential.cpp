#include "mfl/potential.hpp"

#include <algorithm>
#include <cmath>

#include "mfl/torus.hpp"

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

double sign0(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }
}  // namespace

Potential Potential::cosine(double amplitude) {
  Potential p;
  p.kind_ = PotentialKind::cosine;
  p.amplitude_ = amplitude;
  return p;
}

Potential Potential::coulomb1d() {
  Potential p;
  p.kind_ = PotentialKind::coulomb1d;
  return p;
}

Potential Potential::fourier_series(std::vector<std::pair<int, double>> coeffs) {
  Potential p;
  p.kind_ = PotentialKind::fourier_series;
  for (auto& [k, c] : coeffs) {
    if (k == 0) {
      p.coeff0_ = c;
      continue;
    }
    p.coeffs_.emplace_back(std::abs(k), c);
  }
  std::sort(p.coeffs_.begin(), p.coeffs_.end());
  for (size_t i = 1; i < p.coeffs_.size(); ++i)
    if (p.coeffs_[i].first == p.coeffs_[i - 1].first)
      throw std::invalid_argument("fourier_series: duplicate mode");
  return p;
}

double Potential::fourier_coefficient(int k) const {
  const int ak = std::abs(k);
  switch (kind_) {
    case PotentialKind::cosine:
      return ak == 1 ? 0.5 * amplitude_ : 0.0;
    case PotentialKind::coulomb1d:
      return ak == 0 ? 0.0 : 1.0 / (4.0 * M_PI * M_PI * ak * ak);
    default: {
      if (ak == 0) return coeff0_;
      for (const auto& [m, c] : coeffs_)
        if (m == ak) return c;
      return 0.0;
    }
  }
}

double Potential::value(double x) const {
  const double w = wrap(x);
  switch (kind_) {
    case PotentialKind::cosine:
      return amplitude_ * std::cos(kTwoPi * w);
    case PotentialKind::coulomb1d:
      return 0.5 * (w * w - std::abs(w)) + 1.0 / 12.0;
    default: {
      double s = coeff0_;
      for (const auto& [m, c] : coeffs_) s += 2.0 * c * std::cos(kTwoPi * m * w);
      return s;
    }
  }
}

double Potential::force(double x) const {
  const double w = wrap(x);
  switch (kind_) {
    case PotentialKind::cosine:
      return kTwoPi * amplitude_ * std::sin(kTwoPi * w);
    case PotentialKind::coulomb1d:
      return 0.5 * sign0(w) - w;
    default: {
      double s = 0.0;
      for (const auto& [m, c] : coeffs_)
        s += 2.0 * kTwoPi * m * c * std::sin(kTwoPi * m * w);
      return s;
    }
  }
}

double Potential::hessian_sup() const {
  switch (kind_) {
    case PotentialKind::cosine:
      return 4.0 * M_PI * M_PI * std::abs(amplitude_);
    case PotentialKind::coulomb1d:
      throw UnsupportedKind("hessian_sup: coulomb1d has a distributional phi''");
    default: {
      // dense-grid sup; bounded above by sum (2 pi k)^2 |phi_hat(k)|
      double sup = 0.0;
      const int n = 65536;
      for (int i = 0; i < n; ++i) {
        const double x = -0.5 + static_cast<double>(i) / n;
        double h = 0.0;
        for (const auto& [m, c] : coeffs_)
          h += -2.0 * kTwoPi * kTwoPi * m * m * c * std::cos(kTwoPi * m * x);
        sup = std::max(sup, std::abs(h));
      }
      return sup;
    }
  }
}

std::complex<double> Potential::field_mode(int k,
                                           std::complex<double> rho_hat) const {
  if (k == 0) return {0.0, 0.0};
  return std::complex<double>(0.0, -kTwoPi * k) * fourier_coefficient(k) *
         rho_hat;
}

int Potential::max_mode(int coulomb_cutoff) const {
  switch (kind_) {
    case PotentialKind::cosine:
      return 1;
    case PotentialKind::coulomb1d:
      return coulomb_cutoff;
    default:
      return coeffs_.empty() ? 0 : coeffs_.back().first;
  }
}

}  // namespace mfl
