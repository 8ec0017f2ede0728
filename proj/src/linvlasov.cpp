#include "mfl/linvlasov.hpp"

#include <cmath>

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
using Eigen::ArrayXcd;
using Eigen::ArrayXd;
}  // namespace

ArrayXd VelocityGrid::nodes() const {
  return ArrayXd::LinSpaced(n, -v_max, v_max);
}

Complex VelocityGrid::integrate(const Eigen::Ref<const ArrayXcd>& f) const {
  Complex s = f.sum() - 0.5 * (f[0] + f[n - 1]);
  return s * dv();
}

SpectralState::SpectralState(VelocityGrid grid, int k_max)
    : grid_(grid), k_max_(k_max) {
  modes_.resize(2 * k_max + 1);
  for (auto& m : modes_) m = ArrayXcd::Zero(grid_.n);
}

double SpectralState::reality_defect() const {
  double worst = 0.0;
  for (int k = 0; k <= k_max_; ++k)
    worst = std::max(worst,
                     (mode(-k) - mode(k).conjugate()).abs().maxCoeff());
  return worst;
}

void SpectralState::set_zero() {
  for (auto& m : modes_) m.setZero();
}

void SpectralState::add_scaled(const SpectralState& other, Complex a) {
  const int kk = std::min(k_max_, other.k_max());
  for (int k = -kk; k <= kk; ++k) mode(k) += a * other.mode(k);
}

SpectralState SpectralState::embedded(int new_k_max) const {
  SpectralState out(grid_, new_k_max);
  out.t = t;
  const int kk = std::min(k_max_, new_k_max);
  for (int k = -kk; k <= kk; ++k) out.mode(k) = mode(k);
  return out;
}

ArrayXcd v_derivative(const Eigen::Ref<const ArrayXcd>& f, double dv) {
  const auto n = f.size();
  ArrayXcd d(n);
  const double c = 1.0 / (12.0 * dv);
  for (Eigen::Index i = 2; i + 2 < n; ++i)
    d[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
  // one-sided fourth-order stencils at the edges
  d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] -
              3.0 * f[4]);
  d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
  d[n - 1] = -c * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] +
                   16.0 * f[n - 4] - 3.0 * f[n - 5]);
  d[n - 2] = -c * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] -
                   6.0 * f[n - 4] + f[n - 5]);
  return d;
}

double weighted_norm(const SpectralState& state, const NormSpec& spec) {
  const auto& g = state.grid();
  const ArrayXd v = g.nodes();
  const ArrayXd w = (1.0 + v * v).pow(spec.weight_m);
  double total = 0.0;
  for (int k = -state.k_max(); k <= state.k_max(); ++k) {
    const double xfac = std::pow(1.0 + kTwoPi * k * kTwoPi * k,
                                 static_cast<double>(spec.x_order));
    ArrayXd dens = state.mode(k).abs2();
    if (spec.v_order >= 1)
      dens += v_derivative(state.mode(k), g.dv()).abs2();
    ArrayXd integrand = w * dens;
    double s = integrand.sum() - 0.5 * (integrand[0] + integrand[g.n - 1]);
    total += xfac * s * g.dv();
  }
  return std::sqrt(total);
}

namespace {

// Non-transport part of the dynamics: out_k = -E_hat(k) f'(v) [+ forcing].
// E_hat(k) = -2 pi i k phi_hat(k) rho_hat(k); both transport and field vanish
// on the homogeneous mode.
void field_term(const SpectralState& state, const Equilibrium& eq,
                const Potential& pot, const ArrayXd& fprime,
                SpectralState& out) {
  out.set_zero();
  for (int k = -state.k_max(); k <= state.k_max(); ++k) {
    if (k == 0 || pot.fourier_coefficient(k) == 0.0) continue;
    const Complex E = pot.field_mode(k, state.rho_hat(k));
    out.mode(k) = -E * fprime.cast<Complex>();
  }
  (void)eq;
}

}  // namespace

SpectralState apply_L(const SpectralState& state, const Equilibrium& eq,
                      const Potential& pot) {
  const auto& g = state.grid();
  const ArrayXd v = g.nodes();
  ArrayXd fprime(g.n);
  for (int j = 0; j < g.n; ++j) fprime[j] = eq.derivative(v[j]);

  SpectralState out(g, state.k_max());
  out.t = state.t;
  field_term(state, eq, pot, fprime, out);
  for (int k = -state.k_max(); k <= state.k_max(); ++k) {
    if (k == 0) continue;  // homogeneous functions are in the kernel
    out.mode(k) -= Complex(0.0, kTwoPi * k) * (v.cast<Complex>() * state.mode(k));
  }
  return out;
}

namespace {

// One exponential-midpoint step: exact integrating factor for streaming,
// midpoint rule for field and forcing. F_t / F_mid may be null.
struct Stepper {
  const Equilibrium& eq;
  const Potential& pot;
  VelocityGrid grid;
  int k_max;
  double dt;
  bool field_enabled;
  ArrayXd fprime;
  std::vector<ArrayXcd> phase_full, phase_half;  // exp(-i xi_k v dt), dt/2
  SpectralState a0, am, gmid;

  Stepper(const Equilibrium& eq_, const Potential& pot_, VelocityGrid g,
          int km, double dt_, bool field_on)
      : eq(eq_), pot(pot_), grid(g), k_max(km), dt(dt_),
        field_enabled(field_on), a0(g, km), am(g, km), gmid(g, km) {
    const ArrayXd v = grid.nodes();
    fprime.resize(grid.n);
    for (int j = 0; j < grid.n; ++j) fprime[j] = eq.derivative(v[j]);
    phase_full.resize(2 * km + 1);
    phase_half.resize(2 * km + 1);
    for (int k = -km; k <= km; ++k) {
      ArrayXd arg = -kTwoPi * k * v;
      phase_full[k + km] =
          (arg * dt).unaryExpr([](double a) { return Complex(std::cos(a), std::sin(a)); });
      phase_half[k + km] =
          (arg * 0.5 * dt).unaryExpr([](double a) { return Complex(std::cos(a), std::sin(a)); });
    }
  }

  void rhs(const SpectralState& s, const SpectralState* forcing,
           SpectralState& out) {
    if (field_enabled)
      field_term(s, eq, pot, fprime, out);
    else
      out.set_zero();
    if (forcing) out.add_scaled(*forcing, 1.0);
  }

  void stream(SpectralState& s, const std::vector<ArrayXcd>& phase) {
    for (int k = -k_max; k <= k_max; ++k)
      s.mode(k) *= phase[k + k_max];
  }

  void advance(SpectralState& g, const SpectralState* F_t,
               const SpectralState* F_mid) {
    rhs(g, F_t, a0);
    gmid = g;
    gmid.add_scaled(a0, 0.5 * dt);
    stream(gmid, phase_half);
    rhs(gmid, F_mid, am);
    stream(g, phase_full);
    stream(am, phase_half);
    g.add_scaled(am, dt);
    g.t += dt;
  }
};

}  // namespace

LinearTrajectory propagate(const SpectralState& initial, const Equilibrium& eq,
                           const Potential& pot, const ForcingFn& forcing,
                           const PropagateOptions& opts) {
  SpectralState g = initial;
  Stepper st(eq, pot, g.grid(), g.k_max(), opts.dt, opts.field_enabled);
  const int n_steps = static_cast<int>(std::round(opts.t_end / opts.dt));
  const int rec_every =
      opts.output_dt > 0
          ? std::max(1, static_cast<int>(std::round(opts.output_dt / opts.dt)))
          : n_steps;

  LinearTrajectory traj;
  auto record = [&](const SpectralState& s) {
    traj.times.push_back(s.t);
    traj.states.push_back(s);
    ArrayXd rho(s.k_max() + 1);
    for (int k = 0; k <= s.k_max(); ++k) rho[k] = std::abs(s.rho_hat(k));
    traj.rho_abs.push_back(rho);
    traj.norms.push_back(weighted_norm(s));
  };
  record(g);

  SpectralState F_t(g.grid(), g.k_max()), F_mid(g.grid(), g.k_max());
  const double mass0 = std::abs(g.mass0());
  for (int n = 0; n < n_steps; ++n) {
    const SpectralState* ft = nullptr;
    const SpectralState* fm = nullptr;
    if (forcing) {
      forcing(g.t, F_t);
      forcing(g.t + 0.5 * opts.dt, F_mid);
      ft = &F_t;
      fm = &F_mid;
      // external forcing may legitimately feed the homogeneous mode
    }
    st.advance(g, ft, fm);
    if (!forcing) {
      const double drift = std::abs(std::abs(g.mass0()) - mass0);
      if (drift > opts.mass_drift_tol * std::max(g.t - initial.t, opts.dt))
        throw StepRejection("propagate: homogeneous-mode mass drift exceeds "
                            "tolerance; reduce dt");
    }
    if ((n + 1) % rec_every == 0 || n + 1 == n_steps) {
      if (traj.times.empty() || traj.times.back() != g.t) record(g);
    }
  }
  return traj;
}

namespace {

// Mode convolution of the field of `src` against d_v of `dst`:
// out_m -= sum_(m1 + m2 = m) E_hat(m1)[src] (d_v dst)_(m2).
void accumulate_forcing(const SpectralState& src, const SpectralState& dst,
                        const Potential& pot,
                        const std::vector<ArrayXcd>& dst_dv,
                        SpectralState& out) {
  const int km_src = src.k_max();
  const int km_dst = dst.k_max();
  for (int m1 = -km_src; m1 <= km_src; ++m1) {
    if (m1 == 0 || pot.fourier_coefficient(m1) == 0.0) continue;
    const Complex E = pot.field_mode(m1, src.rho_hat(m1));
    if (E == Complex(0.0, 0.0)) continue;
    for (int m2 = -km_dst; m2 <= km_dst; ++m2) {
      const int m = m1 + m2;
      if (std::abs(m) > out.k_max()) continue;
      out.mode(m) -= E * dst_dv[m2 + km_dst];
    }
  }
}

std::vector<ArrayXcd> all_mode_derivatives(const SpectralState& s) {
  std::vector<ArrayXcd> d(2 * s.k_max() + 1);
  for (int k = -s.k_max(); k <= s.k_max(); ++k)
    d[k + s.k_max()] = v_derivative(s.mode(k), s.grid().dv());
  return d;
}

}  // namespace

int GrenierHierarchy::snapshot_index(double t) const {
  int best = 0;
  double bd = std::abs(snapshot_times[0] - t);
  for (size_t i = 1; i < snapshot_times.size(); ++i) {
    const double d = std::abs(snapshot_times[i] - t);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

GrenierHierarchy build_hierarchy(const Eigenmode& mode, const Equilibrium& eq,
                                 const Potential& pot, int K, double epsilon,
                                 double t_end, const HierarchyOptions& opts) {
  if (K < 1) throw std::invalid_argument("build_hierarchy: K must be >= 1");
  const int k0 = mode.k0();
  if (K * k0 > opts.mode_budget)
    throw std::invalid_argument("build_hierarchy: K*k0 exceeds the mode budget");

  VelocityGrid grid{eq.v_max(), opts.n_v};
  const int km = K * k0;

  GrenierHierarchy h;
  h.K = K;
  h.epsilon = epsilon;
  h.lambda0 = mode.lambda();
  h.k0 = k0;
  h.grid = grid;

  // level states carry the full budget; seed g_1 on modes +-k0
  std::vector<SpectralState> cur(K, SpectralState(grid, km));
  const ArrayXd v = grid.nodes();
  {
    ArrayXcd prof(grid.n);
    for (int j = 0; j < grid.n; ++j)
      prof[j] = opts.seed_scale * mode.mode_profile(v[j]);
    cur[0].mode(k0) = prof;
    cur[0].mode(-k0) = prof.conjugate();
  }

  Stepper st(eq, pot, grid, km, opts.dt, true);
  const int n_steps = static_cast<int>(std::round(t_end / opts.dt));
  const int snap_every =
      std::max(1, static_cast<int>(std::round(opts.snapshot_dt / opts.dt)));
  const int diag_every =
      std::max(1, static_cast<int>(std::round(opts.diag_dt / opts.dt)));

  h.levels.resize(K);
  std::vector<double> diag_t;
  std::vector<Eigen::ArrayXd> diag_norms;
  std::vector<double> diag_rapp;

  auto record_diag = [&](const std::vector<SpectralState>& s) {
    Eigen::ArrayXd norms(K);
    for (int k = 0; k < K; ++k) norms[k] = weighted_norm(s[k]);
    diag_t.push_back(s[0].t);
    diag_norms.push_back(norms);
    // residual norm from the live states
    SpectralState r(grid, 2 * km);
    std::vector<std::vector<ArrayXcd>> dv(K);
    for (int k = 0; k < K; ++k) dv[k] = all_mode_derivatives(s[k]);
    for (int j = 1; j <= K; ++j)
      for (int l = 1; l <= K; ++l) {
        if (j + l < K + 1) continue;
        SpectralState term(grid, 2 * km);
        accumulate_forcing(s[j - 1], s[l - 1], pot, dv[l - 1], term);
        r.add_scaled(term, std::pow(epsilon, j + l));
      }
    diag_rapp.push_back(weighted_norm(r));
  };

  auto record_snapshot = [&](const std::vector<SpectralState>& s) {
    h.snapshot_times.push_back(s[0].t);
    for (int k = 0; k < K; ++k) h.levels[k].push_back(s[k]);
  };

  record_diag(cur);
  record_snapshot(cur);

  std::vector<SpectralState> prev = cur;
  SpectralState F_prev(grid, km), F_new(grid, km), F_mid(grid, km);
  const double mass_ref = 0.0;
  for (int n = 0; n < n_steps; ++n) {
    prev = cur;
    for (int level = 1; level <= K; ++level) {
      SpectralState& g = cur[level - 1];
      if (level == 1) {
        st.advance(g, nullptr, nullptr);
        continue;
      }
      // forcing at t from the pre-step states, at t+dt from the already
      // advanced lower levels; midpoint = average
      F_prev.set_zero();
      F_new.set_zero();
      for (int j = 1; j <= level - 1; ++j) {
        const auto dv_prev = all_mode_derivatives(prev[j - 1]);
        const auto dv_new = all_mode_derivatives(cur[j - 1]);
        accumulate_forcing(prev[level - j - 1], prev[j - 1], pot, dv_prev,
                           F_prev);
        accumulate_forcing(cur[level - j - 1], cur[j - 1], pot, dv_new, F_new);
      }
      F_mid = F_prev;
      F_mid.add_scaled(F_new, 1.0);
      for (int k = -km; k <= km; ++k) F_mid.mode(k) *= 0.5;
      st.advance(g, &F_prev, &F_mid);
      const double drift = std::abs(std::abs(g.mass0()) - mass_ref);
      if (drift > opts.mass_drift_tol * std::max(g.t, opts.dt))
        throw StepRejection("build_hierarchy: homogeneous-mode mass drift; "
                            "reduce dt");
    }
    if ((n + 1) % diag_every == 0 || n + 1 == n_steps) record_diag(cur);
    if ((n + 1) % snap_every == 0 || n + 1 == n_steps) record_snapshot(cur);
  }

  h.diag_times = diag_t;
  h.level_norms.resize(diag_t.size(), K);
  h.rapp_norms.resize(diag_t.size());
  for (size_t i = 0; i < diag_t.size(); ++i) {
    h.level_norms.row(i) = diag_norms[i].transpose();
    h.rapp_norms[i] = diag_rapp[i];
  }
  return h;
}

FappResult assemble_fapp(const GrenierHierarchy& h, const Equilibrium& eq,
                         double t, int n_x_grid) {
  const int idx = h.snapshot_index(t);
  FappResult res{SpectralState(h.grid, h.K * h.k0), 0.0, false, 0.0};
  res.state.t = h.snapshot_times[idx];
  for (int k = 1; k <= h.K; ++k)
    res.state.add_scaled(h.levels[k - 1][idx], std::pow(h.epsilon, k));
  const Eigen::ArrayXd v = h.grid.nodes();
  for (int j = 0; j < h.grid.n; ++j)
    res.state.mode(0)[j] += eq.value(v[j]);

  const PhaseSpaceDensity dens = eval_on_grid(res.state, n_x_grid);
  res.min_grid_value = dens.values.minCoeff();
  res.negative = res.min_grid_value < 0.0;
  res.mass = res.state.mass0().real();
  return res;
}

std::pair<SpectralState, double> residual_Rapp(const GrenierHierarchy& h,
                                               const Equilibrium& eq,
                                               const Potential& pot, double t,
                                               const NormSpec& spec) {
  (void)eq;
  const int idx = h.snapshot_index(t);
  const int km = h.K * h.k0;
  SpectralState r(h.grid, 2 * km);
  r.t = h.snapshot_times[idx];
  for (int j = 1; j <= h.K; ++j)
    for (int l = 1; l <= h.K; ++l) {
      if (j + l < h.K + 1) continue;
      const SpectralState& gj = h.levels[j - 1][idx];
      const SpectralState& gl = h.levels[l - 1][idx];
      const auto dv = all_mode_derivatives(gl);
      SpectralState term(h.grid, 2 * km);
      accumulate_forcing(gj, gl, pot, dv, term);
      r.add_scaled(term, std::pow(h.epsilon, j + l));
    }
  const double nrm = weighted_norm(r, spec);
  return {std::move(r), nrm};
}

PhaseSpaceDensity eval_on_grid(const SpectralState& state, int n_x) {
  PhaseSpaceDensity out;
  out.x_nodes = ArrayXd::LinSpaced(n_x, -0.5, 0.5 - 1.0 / n_x);
  out.v_nodes = state.grid().nodes();
  out.values.resize(n_x, state.grid().n);
  for (int i = 0; i < n_x; ++i) {
    ArrayXcd acc = state.mode(0);
    for (int k = 1; k <= state.k_max(); ++k) {
      const Complex ph(std::cos(kTwoPi * k * out.x_nodes[i]),
                       std::sin(kTwoPi * k * out.x_nodes[i]));
      acc += state.mode(k) * ph + state.mode(-k) * std::conj(ph);
    }
    out.values.row(i) = acc.real().transpose();
  }
  return out;
}

}  // namespace mfl
