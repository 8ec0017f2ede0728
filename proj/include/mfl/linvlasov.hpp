#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "mfl/equilibrium.hpp"
#include "mfl/potential.hpp"
#include "mfl/spectral.hpp"

namespace mfl {

struct StepRejection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform velocity grid on [-v_max, v_max] with n nodes.
struct VelocityGrid {
  double v_max = 1.0;
  int n = 1024;

  double dv() const { return 2.0 * v_max / (n - 1); }
  double node(int j) const { return -v_max + j * dv(); }
  Eigen::ArrayXd nodes() const;

  /// Trapezoidal integral of a sampled profile.
  std::complex<double> integrate(const Eigen::Ref<const Eigen::ArrayXcd>& f) const;
};

/// Real phase-space perturbation in Fourier-in-x representation: one complex
/// velocity profile per mode k in [-k_max, k_max], with the reality
/// constraint profile(-k) = conj(profile(k)).
class SpectralState {
 public:
  SpectralState() = default;
  SpectralState(VelocityGrid grid, int k_max);

  const VelocityGrid& grid() const { return grid_; }
  int k_max() const { return k_max_; }
  double t = 0.0;

  Eigen::ArrayXcd& mode(int k) { return modes_[k + k_max_]; }
  const Eigen::ArrayXcd& mode(int k) const { return modes_[k + k_max_]; }

  std::complex<double> rho_hat(int k) const { return grid_.integrate(mode(k)); }
  /// Mass carried by the homogeneous mode.
  std::complex<double> mass0() const { return rho_hat(0); }
  /// max_k max_v |profile(-k) - conj(profile(k))|.
  double reality_defect() const;

  void set_zero();
  /// this += a * other (mode-wise; other may have a smaller mode set).
  void add_scaled(const SpectralState& other, std::complex<double> a);

  /// Same payload embedded in a wider mode budget.
  SpectralState embedded(int new_k_max) const;

 private:
  VelocityGrid grid_;
  int k_max_ = 0;
  std::vector<Eigen::ArrayXcd> modes_;
};

/// Weighted Sobolev-type discrete norm:
/// ( sum_k (1 + (2 pi k)^2)^x_order  int <v>^(2 weight_m)
///      (|g_k|^2 + [v_order] |d_v g_k|^2) dv )^(1/2).
struct NormSpec {
  int x_order = 0;
  int v_order = 0;  // 0 or 1
  double weight_m = 1.0;
};

double weighted_norm(const SpectralState& state, const NormSpec& spec = {});

/// Fourth-order finite difference in v (one-sided at the grid edges).
Eigen::ArrayXcd v_derivative(const Eigen::Ref<const Eigen::ArrayXcd>& f,
                             double dv);

/// Linearized Vlasov operator: per mode k,
/// (L g)_k = -2 pi i k v g_k - E_hat(k) f'(v),
/// with E_hat(k) = -2 pi i k phi_hat(k) rho_hat(k).
SpectralState apply_L(const SpectralState& state, const Equilibrium& eq,
                      const Potential& pot);

using ForcingFn = std::function<void(double t, SpectralState& out)>;

struct PropagateOptions {
  double t_end = 1.0;
  double dt = 1e-3;
  double output_dt = 0.0;        // 0: record only the final state
  bool field_enabled = true;     // false: pure free streaming
  double mass_drift_tol = 1e-8;  // per unit time, homogeneous mode
};

struct LinearTrajectory {
  std::vector<double> times;
  std::vector<SpectralState> states;
  std::vector<Eigen::ArrayXd> rho_abs;  // per output time, |rho_hat(k)|, k = 0..k_max
  std::vector<double> norms;            // weighted_norm with the default spec
};

/// Second-order-in-time solution of (d_t - L) g = forcing. Free streaming is
/// applied exactly through the integrating factor exp(-2 pi i k v dt); the
/// field and forcing terms use the midpoint rule.
LinearTrajectory propagate(const SpectralState& initial, const Equilibrium& eq,
                           const Potential& pot, const ForcingFn& forcing,
                           const PropagateOptions& opts);

/// Profiles g_1..g_K of the iterative construction: g_1 is the growing mode,
/// and each g_k for k >= 2 solves (d_t - L) g_k = - sum_j E[g_(k-j)] . d_v g_j
/// with zero initial data.
struct GrenierHierarchy {
  int K = 1;
  double epsilon = 0.0;
  Complex lambda0;
  int k0 = 1;
  VelocityGrid grid;

  std::vector<double> snapshot_times;
  // levels[k-1][i] = g_(k) at snapshot_times[i]; every level carries the full
  // K*k0 mode budget so the support-closure property is directly observable.
  std::vector<std::vector<SpectralState>> levels;

  std::vector<double> diag_times;
  Eigen::MatrixXd level_norms;  // (#diag_times) x K
  Eigen::ArrayXd rapp_norms;    // (#diag_times)

  int snapshot_index(double t) const;
};

struct HierarchyOptions {
  int n_v = 1024;
  double dt = 1e-3;
  double snapshot_dt = 0.1;
  double diag_dt = 0.01;
  int mode_budget = 64;  // config guard: K*k0 must stay within this
  double mass_drift_tol = 1e-8;
  double seed_scale = 1.0;  // multiplies the g_1 seed (sign tests)
};

GrenierHierarchy build_hierarchy(const Eigenmode& mode, const Equilibrium& eq,
                                 const Potential& pot, int K, double epsilon,
                                 double t_end,
                                 const HierarchyOptions& opts = {});

struct FappResult {
  SpectralState state;     // includes f_inf in mode 0
  double min_grid_value;   // min over the (x, v) evaluation grid
  bool negative = false;   // epsilon too large for a nonnegative density
  double mass = 0.0;
};

/// f_app(t) = f_inf + sum_k eps^k g_k(t), evaluated at the stored snapshot
/// closest to t.
FappResult assemble_fapp(const GrenierHierarchy& h, const Equilibrium& eq,
                         double t, int n_x_grid = 128);

/// Residual of the approximate solution:
/// R_app = - sum_(j + l >= K+1; j, l <= K) eps^(j+l) E[g_j] . d_v g_l.
std::pair<SpectralState, double> residual_Rapp(const GrenierHierarchy& h,
                                               const Equilibrium& eq,
                                               const Potential& pot, double t,
                                               const NormSpec& spec = {});

/// Real-space evaluation of a spectral state on an (x, v) grid.
struct PhaseSpaceDensity {
  Eigen::ArrayXd x_nodes;
  Eigen::ArrayXd v_nodes;
  Eigen::ArrayXXd values;  // n_x rows, n_v cols
};

PhaseSpaceDensity eval_on_grid(const SpectralState& state, int n_x);

}  // namespace mfl
