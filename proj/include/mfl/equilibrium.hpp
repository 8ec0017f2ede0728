#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace mfl {

enum class EquilibriumKind { maxwellian, two_stream, tabulated };

/// Smooth radial velocity profile f(v) on the line, normalized to unit mass.
///
/// Built-in kinds are a centered Maxwellian with temperature theta and the
/// symmetric two-stream superposition 0.5*(M(v-v0) + M(v+v0)). Tabulated
/// profiles are loaded from (v, f) pairs and evaluated with a clamped cubic
/// spline; they are renormalized to unit mass at construction.
class Equilibrium {
 public:
  static Equilibrium maxwellian(double theta);
  static Equilibrium two_stream(double theta, double v0);
  static Equilibrium tabulated(const Eigen::ArrayXd& v, const Eigen::ArrayXd& f);
  /// Two-column text file (v, f) with strictly increasing v.
  static Equilibrium from_file(const std::string& path);

  EquilibriumKind kind() const { return kind_; }
  double theta() const { return theta_; }
  double stream_offset() const { return v0_; }

  /// f(v); positive everywhere inside [-v_max, v_max].
  double value(double v) const;
  /// df/dv.
  double derivative(double v) const;
  /// d2f/dv2 (used by the principal-value subtraction).
  double second_derivative(double v) const;

  /// Velocity cutoff: |v| beyond which f drops under 1e-16 (table end for
  /// tabulated profiles).
  double v_max() const { return v_max_; }

  /// PV integral of f'(v)/v, equivalently of (f(v) - f(0))/v^2. Negative for
  /// a single Maxwellian (-1/theta), positive for well separated streams.
  double penrose_integral() const;

  /// Absolute velocity moment: integral of |v|^q f(v) dv, q >= 0.
  double moment(double q) const;

  /// sup_v |f'(v)| / ((1 + |v|) f(v)); finite for all supported kinds.
  double ratio_bound() const;

 private:
  Equilibrium() = default;
  void compute_cutoff();
  double spline_eval(double v, int deriv) const;

  EquilibriumKind kind_ = EquilibriumKind::maxwellian;
  double theta_ = 1.0;
  double v0_ = 0.0;
  double v_max_ = 0.0;

  // tabulated data: nodes, values, and spline second-derivative coefficients
  Eigen::ArrayXd tab_v_, tab_f_, tab_m_;
};

}  // namespace mfl
