#include "mfl/equilibrium.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mfl/quadrature.hpp"

namespace mfl {

namespace {

double gauss(double v, double theta) {
  return std::exp(-0.5 * v * v / theta) / std::sqrt(2.0 * M_PI * theta);
}

}  // namespace

Equilibrium Equilibrium::maxwellian(double theta) {
  if (theta <= 0) throw std::invalid_argument("maxwellian: theta must be > 0");
  Equilibrium eq;
  eq.kind_ = EquilibriumKind::maxwellian;
  eq.theta_ = theta;
  eq.compute_cutoff();
  return eq;
}

Equilibrium Equilibrium::two_stream(double theta, double v0) {
  if (theta <= 0) throw std::invalid_argument("two_stream: theta must be > 0");
  if (v0 < 0) throw std::invalid_argument("two_stream: v0 must be >= 0");
  Equilibrium eq;
  eq.kind_ = EquilibriumKind::two_stream;
  eq.theta_ = theta;
  eq.v0_ = v0;
  eq.compute_cutoff();
  return eq;
}

Equilibrium Equilibrium::tabulated(const Eigen::ArrayXd& v,
                                   const Eigen::ArrayXd& f) {
  const auto n = v.size();
  if (n < 4 || f.size() != n)
    throw std::invalid_argument("tabulated: need >= 4 matching (v, f) pairs");
  for (Eigen::Index i = 1; i < n; ++i)
    if (v[i] <= v[i - 1])
      throw std::invalid_argument("tabulated: v must be strictly increasing");
  if ((f <= 0.0).any())
    throw std::invalid_argument("tabulated: f must be positive");

  Equilibrium eq;
  eq.kind_ = EquilibriumKind::tabulated;
  eq.tab_v_ = v;
  eq.tab_f_ = f;

  // Clamped cubic spline: endpoint slopes from one-sided differences.
  // Solve the tridiagonal system for the second derivatives m_i.
  Eigen::ArrayXd a(n), b(n), c(n), d(n);
  const double s0 = (f[1] - f[0]) / (v[1] - v[0]);
  const double sn = (f[n - 1] - f[n - 2]) / (v[n - 1] - v[n - 2]);
  b[0] = 2.0 * (v[1] - v[0]);
  c[0] = v[1] - v[0];
  d[0] = 6.0 * ((f[1] - f[0]) / (v[1] - v[0]) - s0);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double h0 = v[i] - v[i - 1];
    const double h1 = v[i + 1] - v[i];
    a[i] = h0;
    b[i] = 2.0 * (h0 + h1);
    c[i] = h1;
    d[i] = 6.0 * ((f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0);
  }
  const double hn = v[n - 1] - v[n - 2];
  a[n - 1] = hn;
  b[n - 1] = 2.0 * hn;
  d[n - 1] = 6.0 * (sn - (f[n - 1] - f[n - 2]) / hn);

  // Thomas algorithm
  Eigen::ArrayXd m(n);
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  m[n - 1] = d[n - 1] / b[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i)
    m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
  eq.tab_m_ = m;

  eq.v_max_ = std::max(std::abs(v[0]), std::abs(v[n - 1]));
  const double mass = eq.moment(0.0);
  if (mass <= 0) throw std::invalid_argument("tabulated: non-positive mass");
  eq.tab_f_ /= mass;
  return eq;
}

Equilibrium Equilibrium::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open equilibrium file: " + path);
  std::vector<double> vs, fs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double v, f;
    if (ss >> v >> f) {
      vs.push_back(v);
      fs.push_back(f);
    }
  }
  return tabulated(Eigen::Map<Eigen::ArrayXd>(vs.data(), vs.size()),
                   Eigen::Map<Eigen::ArrayXd>(fs.data(), fs.size()));
}

void Equilibrium::compute_cutoff() {
  // Smallest v with f(v) < 1e-16; the tails beyond carry no double-precision
  // mass. Doubling search on the decaying flank, then bisection.
  double lo = v0_ + std::sqrt(theta_);
  double hi = lo;
  while (value(hi) >= 1e-16) hi *= 2.0;
  while (value(lo) < 1e-16) lo *= 0.5;
  for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (value(mid) >= 1e-16 ? lo : hi) = mid;
  }
  v_max_ = hi;
}

double Equilibrium::spline_eval(double v, int deriv) const {
  const auto n = tab_v_.size();
  double vc = std::min(std::max(v, tab_v_[0]), tab_v_[n - 1]);
  // binary search for the interval
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (tab_v_[mid] <= vc ? lo : hi) = mid;
  }
  const double h = tab_v_[hi] - tab_v_[lo];
  const double A = (tab_v_[hi] - vc) / h;
  const double B = 1.0 - A;
  switch (deriv) {
    case 0:
      return A * tab_f_[lo] + B * tab_f_[hi] +
             ((A * A * A - A) * tab_m_[lo] + (B * B * B - B) * tab_m_[hi]) *
                 h * h / 6.0;
    case 1:
      return (tab_f_[hi] - tab_f_[lo]) / h -
             (3.0 * A * A - 1.0) / 6.0 * h * tab_m_[lo] +
             (3.0 * B * B - 1.0) / 6.0 * h * tab_m_[hi];
    default:
      return A * tab_m_[lo] + B * tab_m_[hi];
  }
}

double Equilibrium::value(double v) const {
  switch (kind_) {
    case EquilibriumKind::maxwellian:
      return gauss(v, theta_);
    case EquilibriumKind::two_stream:
      return 0.5 * (gauss(v - v0_, theta_) + gauss(v + v0_, theta_));
    default:
      return spline_eval(v, 0);
  }
}

double Equilibrium::derivative(double v) const {
  switch (kind_) {
    case EquilibriumKind::maxwellian:
      return -v / theta_ * gauss(v, theta_);
    case EquilibriumKind::two_stream:
      return 0.5 * (-(v - v0_) / theta_ * gauss(v - v0_, theta_) -
                    (v + v0_) / theta_ * gauss(v + v0_, theta_));
    default:
      return spline_eval(v, 1);
  }
}

double Equilibrium::second_derivative(double v) const {
  switch (kind_) {
    case EquilibriumKind::maxwellian: {
      const double t = theta_;
      return (v * v / (t * t) - 1.0 / t) * gauss(v, t);
    }
    case EquilibriumKind::two_stream: {
      const double t = theta_;
      const double a = v - v0_, b = v + v0_;
      return 0.5 * ((a * a / (t * t) - 1.0 / t) * gauss(a, t) +
                    (b * b / (t * t) - 1.0 / t) * gauss(b, t));
    }
    default:
      return spline_eval(v, 2);
  }
}

double Equilibrium::penrose_integral() const {
  // Taylor subtraction around the removable v = 0 singularity:
  //   int (f - f0)/v^2 = int_{|v|<h} (f - f0 - f''(0) v^2/2)/v^2
  //                      + f''(0) h + int_{|v|>h} (f - f0)/v^2,
  // plus the analytic tail -2 f0 / v_max for the constant part beyond the
  // cutoff (f itself is below 1e-16 there).
  const double f0 = value(0.0);
  const double f2 = second_derivative(0.0);
  const double h = std::min(0.25 * std::sqrt(theta_), 0.25 * v_max_);
  auto inner = [&](double v) {
    return (value(v) - f0 - 0.5 * f2 * v * v) / (v * v);
  };
  auto outer = [&](double v) { return (value(v) - f0) / (v * v); };
  double total = integrate_panels(inner, -h, h, 8) + f2 * h;
  total += integrate_adaptive(outer, h, v_max_, 1e-13);
  total += integrate_adaptive(outer, -v_max_, -h, 1e-13);
  total -= 2.0 * f0 / v_max_;
  return total;
}

double Equilibrium::moment(double q) const {
  if (q < 0) throw std::invalid_argument("moment: q must be >= 0");
  auto integrand = [&](double v) { return std::pow(std::abs(v), q) * value(v); };
  // Graded panels toward 0 resolve the |v|^q kink for non-integer q.
  auto half_line = [&](double sign) {
    double total = 0.0;
    double hi = v_max_;
    for (int j = 0; j < 48 && hi > 1e-14 * v_max_; ++j) {
      const double lo = hi * 0.5;
      total += integrate_panels(integrand, sign * lo, sign * hi, 2);
      hi = lo;
    }
    total += integrate_panels(integrand, 0.0, sign * hi, 1);
    return sign * total;
  };
  return half_line(1.0) + half_line(-1.0);
}

double Equilibrium::ratio_bound() const {
  double sup = 0.0;
  const int n = 40001;
  for (int i = 0; i < n; ++i) {
    const double v = -v_max_ + 2.0 * v_max_ * i / (n - 1);
    const double f = value(v);
    if (f <= 0.0) continue;
    sup = std::max(sup, std::abs(derivative(v)) / ((1.0 + std::abs(v)) * f));
  }
  return sup;
}

}  // namespace mfl
