#include "mfl/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mfl/netsimplex.hpp"
#include "mfl/nbody.hpp"
#include "mfl/torus.hpp"

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

double ground_distance(double x1, double v1, double x2, double v2) {
  const double dx = torus_distance(x1, x2);
  const double dv = v1 - v2;
  return std::sqrt(dx * dx + dv * dv);
}

EmpiricalMeasure EmpiricalMeasure::from_points(const Eigen::ArrayXd& x,
                                               const Eigen::ArrayXd& v) {
  EmpiricalMeasure m;
  m.x = x.unaryExpr([](double a) { return wrap(a); });
  m.v = v;
  m.w = Eigen::ArrayXd::Constant(x.size(), 1.0 / static_cast<double>(x.size()));
  return m;
}

void EmpiricalMeasure::validate() const {
  if (x.size() != v.size() || x.size() != w.size() || x.size() == 0)
    throw std::invalid_argument("measure: inconsistent or empty arrays");
  if ((w < 0).any()) throw std::invalid_argument("measure: negative weight");
  if (std::abs(w.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("measure: weights must sum to 1");
  if ((x < -0.5).any() || (x >= 0.5).any())
    throw std::invalid_argument("measure: x must lie in [-1/2, 1/2)");
}

namespace {

Eigen::MatrixXd cost_matrix(const EmpiricalMeasure& mu,
                            const EmpiricalMeasure& nu) {
  const auto n = mu.size(), m = nu.size();
  Eigen::MatrixXd c(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      c(i, j) = ground_distance(mu.x[i], mu.v[i], nu.x[j], nu.v[j]);
  return c;
}

}  // namespace

ExactResult w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  mu.validate();
  nu.validate();
  if (mu.size() + nu.size() > 5000)
    throw std::invalid_argument(
        "w1_exact: combined support exceeds the 5000-point guard");
  const Eigen::MatrixXd c = cost_matrix(mu, nu);
  const NetSimplexResult ns =
      transport_network_simplex(mu.w.matrix(), nu.w.matrix(), c);

  ExactResult res;
  res.plan.entries = ns.plan;
  // recompute the cost independently of the solver's bookkeeping
  double cost = 0.0;
  for (const auto& [i, j, mass] : ns.plan)
    cost += mass * ground_distance(mu.x[i], mu.v[i], nu.x[j], nu.v[j]);
  res.plan.cost = cost;
  res.cost = cost;
  res.potential_mu = ns.u;
  res.potential_nu = ns.v;
  res.dual_gap = cost - (mu.w.matrix().dot(ns.u) + nu.w.matrix().dot(ns.v));
  if (std::abs(res.dual_gap) > 1e-9)
    throw NetSimplexError("w1_exact: duality gap above certification bound");
  return res;
}

namespace {

}  // namespace

EntropicResult w1_entropic(const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& nu, double reg,
                           const EntropicOptions& opts) {
  mu.validate();
  nu.validate();
  const Eigen::MatrixXd C = cost_matrix(mu, nu);
  return w1_entropic_with_cost(mu.w, nu.w, C, reg, opts, nullptr, nullptr);
}

EntropicResult w1_entropic_with_cost(const Eigen::ArrayXd& a,
                                     const Eigen::ArrayXd& b,
                                     const Eigen::MatrixXd& C, double reg,
                                     const EntropicOptions& opts,
                                     Eigen::ArrayXd* warm_f,
                                     Eigen::ArrayXd* warm_g) {
  const auto n = a.size(), m = b.size();
  const Eigen::ArrayXd log_a = a.max(1e-300).log();
  const Eigen::ArrayXd log_b = b.max(1e-300).log();
  Eigen::ArrayXd f = (warm_f && warm_f->size() == n)
                         ? *warm_f
                         : Eigen::ArrayXd::Zero(n);
  Eigen::ArrayXd g = (warm_g && warm_g->size() == m)
                         ? *warm_g
                         : Eigen::ArrayXd::Zero(m);

  EntropicResult res;
  res.reg = reg;

  // Stabilized scaling: iterate u, v against the kernel
  // Ktilde = exp((f + g - C)/reg) (kept in single precision; matrix-vector
  // products dominate the cost), folding log u, log v back into f, g
  // whenever the exponents drift. Certified bounds are recomputed in double
  // precision at the end, so the float kernel only affects iteration speed.
  Eigen::MatrixXf K(n, m);
  // exponent cap: warm starts from a larger reg can leave (f + g - C)
  // slightly positive, which must not overflow the float kernel; the u/v
  // folding pulls the exponents back down as the iteration proceeds
  auto refresh = [&]() {
    for (Eigen::Index j = 0; j < m; ++j)
      K.col(j) = ((f + g[j] - C.col(j).array()) / reg)
                     .min(30.0)
                     .exp()
                     .cast<float>()
                     .matrix();
  };
  refresh();
  Eigen::VectorXf u = Eigen::VectorXf::Ones(n), v = Eigen::VectorXf::Ones(m);
  const Eigen::VectorXf af = a.cast<float>().matrix();
  const Eigen::VectorXf bf = b.cast<float>().matrix();
  auto fold = [&]() {
    f += reg * u.array().cast<double>().max(1e-30f).log();
    g += reg * v.array().cast<double>().max(1e-30f).log();
    u.setOnes();
    v.setOnes();
    refresh();
  };

  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations && !converged; ++it) {
    const Eigen::VectorXf r = K * v.cwiseProduct(bf);
    u = r.cwiseMax(1e-30f).cwiseInverse();
    const Eigen::VectorXf c = K.transpose() * u.cwiseProduct(af);
    v = c.cwiseMax(1e-30f).cwiseInverse();
    const float umax = u.cwiseAbs().maxCoeff();
    const float vmax = v.cwiseAbs().maxCoeff();
    if (umax > 1e10f || vmax > 1e10f || (it + 1) % 50 == 0) fold();
    if ((it + 1) % 10 == 0) {
      // row violation with the current v (columns are exact after v-update)
      const Eigen::VectorXf rr = K * v.cwiseProduct(bf);
      const Eigen::ArrayXd rows =
          (u.array() * rr.array()).cast<double>() * a;
      if ((rows - a).abs().sum() < opts.marginal_tol) converged = true;
    }
  }
  fold();  // park everything in f, g for the bound computations
  res.converged = converged;
  res.iterations = it;
  if (warm_f) *warm_f = f;
  if (warm_g) *warm_g = g;

  // Certified dual lower bound: c-transform the Sinkhorn potentials into a
  // feasible pair (phi, psi) with phi_i + psi_j <= C_ij.
  Eigen::ArrayXd psi(m), phi(n);
  for (Eigen::Index j = 0; j < m; ++j)
    psi[j] = (C.col(j).array() - f).minCoeff();
  phi = f;
  double lower = (a * phi).sum() + (b * psi).sum();
  {
    // the symmetric transform sometimes does better; keep the max
    Eigen::ArrayXd phi2 = Eigen::ArrayXd::Constant(
        n, std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < m; ++j)
      phi2 = phi2.min(C.col(j).array() - g[j]);
    const double lower2 = (a * phi2).sum() + (b * g).sum();
    lower = std::max(lower, lower2);
  }
  res.lower = lower;

  // Certified primal upper bound: round the entropic plan onto the coupling
  // polytope (row/column capping plus a rank-one correction).
  Eigen::ArrayXd row_sum = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index j = 0; j < m; ++j)
    row_sum += ((f + g[j] - C.col(j).array()) / reg + log_a + log_b[j]).min(300.0).exp();
  const Eigen::ArrayXd rscale =
      (a / row_sum.max(1e-300)).min(1.0);
  Eigen::ArrayXd col_sum = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd cost_rows = Eigen::ArrayXd::Zero(n);
  double cost_capped = 0.0;
  Eigen::ArrayXd capped_row_sum = Eigen::ArrayXd::Zero(n);
  std::vector<double> cscale(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::ArrayXd pj =
        ((f + g[j] - C.col(j).array()) / reg + log_a + log_b[j]).min(300.0).exp() *
        rscale;
    const double s = pj.sum();
    const double sc = s > b[j] ? b[j] / s : 1.0;
    cscale[j] = sc;
    col_sum[j] = s * sc;
    capped_row_sum += pj * sc;
    cost_capped += (pj * sc * C.col(j).array()).sum();
  }
  const Eigen::ArrayXd err_r = (a - capped_row_sum).max(0.0);
  const Eigen::ArrayXd err_c = (b - col_sum).max(0.0);
  const double dr = err_r.sum();
  double upper = cost_capped;
  if (dr > 1e-300) {
    // rank-one completion err_r err_c^T / dr
    Eigen::ArrayXd Cerr = Eigen::ArrayXd::Zero(m);
    for (Eigen::Index j = 0; j < m; ++j)
      Cerr[j] = (err_r * C.col(j).array()).sum();
    upper += (Cerr * err_c).sum() / dr;
  }
  res.upper = upper;
  return res;
}

EntropicResult w1_entropic_auto(const EmpiricalMeasure& mu,
                                const EmpiricalMeasure& nu,
                                double rel_gap_target,
                                const EntropicOptions& opts) {
  mu.validate();
  nu.validate();
  const Eigen::MatrixXd C = cost_matrix(mu, nu);
  double reg = C.maxCoeff() / 8.0;
  Eigen::ArrayXd f, g;
  EntropicResult best;
  bool have = false;
  // warm-started annealing in short chunks: certify the gap after each
  // chunk and stop as soon as the target is met
  EntropicOptions chunk = opts;
  chunk.max_iterations = std::min(opts.max_iterations, 60);
  long budget = 6000;
  while (budget > 0) {
    bool level_done = false;
    for (int rounds = 0; rounds < 6 && budget > 0; ++rounds) {
      EntropicResult r =
          w1_entropic_with_cost(mu.w, nu.w, C, reg, chunk, &f, &g);
      budget -= r.iterations;
      if (!have || r.gap() < best.gap()) {
        best = r;
        have = true;
      }
      if (best.gap() <= rel_gap_target * std::max(best.upper, 1e-300))
        return best;
      if (r.converged) {
        level_done = true;
        break;
      }
    }
    (void)level_done;
    if (reg <= 1e-4) break;
    reg = std::max(reg / 2.0, 1e-4);
  }
  return best;
}

double w1_dual_lower_bound(const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& nu, int k) {
  if (k == 0) throw std::invalid_argument("dual bound: k must be nonzero");
  auto mode = [&](const EmpiricalMeasure& m) {
    std::complex<double> acc(0.0, 0.0);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      acc += m.w[i] * std::complex<double>(std::cos(kTwoPi * k * m.x[i]),
                                           -std::sin(kTwoPi * k * m.x[i]));
    return acc;
  };
  return std::abs(mode(mu) - mode(nu)) / (kTwoPi * std::abs(k));
}

double w1_dual_lower_bound_vs_uniform(const EmpiricalMeasure& mu, int k) {
  if (k == 0) throw std::invalid_argument("dual bound: k must be nonzero");
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    acc += mu.w[i] * std::complex<double>(std::cos(kTwoPi * k * mu.x[i]),
                                          -std::sin(kTwoPi * k * mu.x[i]));
  return std::abs(acc) / (kTwoPi * std::abs(k));
}

QuantizeResult quantize(const GridDensity& density, int target_size) {
  const int nx = density.nx(), nv = density.nv();
  if (target_size < 1 || target_size > nx * nv)
    throw std::invalid_argument("quantize: target size exceeds grid size");
  if ((density.values < 0).any())
    throw std::invalid_argument("quantize: density must be nonnegative");

  const double dx = 1.0 / nx;
  const double dv = 2.0 * density.v_max / nv;
  std::vector<int> idx(static_cast<size_t>(nx) * nv);
  std::iota(idx.begin(), idx.end(), 0);
  const auto mass_of = [&](int id) {
    return density.values(id % nx, id / nx);
  };
  std::nth_element(idx.begin(), idx.begin() + target_size - 1, idx.end(),
                   [&](int p, int q) { return mass_of(p) > mass_of(q); });
  idx.resize(target_size);
  std::sort(idx.begin(), idx.end());  // deterministic output order

  QuantizeResult out;
  out.measure.x.resize(target_size);
  out.measure.v.resize(target_size);
  out.measure.w.resize(target_size);
  double kept = 0.0;
  for (int s = 0; s < target_size; ++s) {
    const int ix = idx[s] % nx;
    const int iv = idx[s] / nx;
    out.measure.x[s] = -0.5 + (ix + 0.5) * dx;
    out.measure.v[s] = -density.v_max + (iv + 0.5) * dv;
    out.measure.w[s] = mass_of(idx[s]);
    kept += out.measure.w[s];
  }
  const double total = density.values.sum();
  out.dropped_mass = total > 0 ? (total - kept) / total : 0.0;
  out.measure.w /= kept;
  out.cell_diameter = std::sqrt(dx * dx + dv * dv);
  return out;
}

GridDensity fapp0_density(const Equilibrium& eq, const Eigenmode& mode,
                          double epsilon, int n_x, int n_v) {
  GridDensity d;
  d.v_max = eq.v_max();
  d.values.resize(n_x, n_v);
  const double dx = 1.0 / n_x;
  const double dv = 2.0 * d.v_max / n_v;
  for (int iv = 0; iv < n_v; ++iv) {
    const double v = -d.v_max + (iv + 0.5) * dv;
    const double fv = eq.value(v);
    for (int ix = 0; ix < n_x; ++ix) {
      const double x = -0.5 + (ix + 0.5) * dx;
      d.values(ix, iv) = std::max(0.0, fv + epsilon * mode.value(x, v));
    }
  }
  return d;
}

SamplingRateResult sampling_rate_experiment(const Equilibrium& eq,
                                            const Eigenmode& mode,
                                            double epsilon,
                                            const std::vector<int>& m_list,
                                            int trials, uint64_t seed,
                                            const SamplingRateOptions& opts) {
  for (size_t i = 1; i < m_list.size(); ++i)
    if (m_list[i] <= m_list[i - 1])
      throw std::invalid_argument("sampling rate: m_list must be ascending");

  const GridDensity dens =
      fapp0_density(eq, mode, epsilon, opts.ref_nx, opts.ref_nv);
  const QuantizeResult ref = quantize(dens, opts.ref_size);

  SamplingRateResult out;
  for (size_t mi = 0; mi < m_list.size(); ++mi) {
    const int m = m_list[mi];
    std::vector<double> vals(trials), gaps(trials);
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= trials) return;
        const uint64_t s = seed + 1000003ULL * (mi + 1) + t;
        ParticleState ps =
            epsilon > 0 ? sample_initial(eq, mode, epsilon, m, s)
                        : sample_equilibrium(eq, m, s);
        const EmpiricalMeasure sample =
            EmpiricalMeasure::from_points(ps.x, ps.v);
        const EntropicResult r =
            w1_entropic_auto(sample, ref.measure, opts.rel_gap_target);
        vals[t] = 0.5 * (r.upper + r.lower);
        gaps[t] = r.gap();
      }
    };
    std::vector<std::thread> pool;
    const int nw = std::max(1, opts.workers);
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    SamplingRateRow row;
    row.m = m;
    const double mean =
        std::accumulate(vals.begin(), vals.end(), 0.0) / trials;
    double var = 0.0;
    for (const double v : vals) var += (v - mean) * (v - mean);
    var /= std::max(1, trials - 1);
    row.mean_w1 = mean;
    row.stderr_w1 = std::sqrt(var / trials);
    row.mean_gap = std::accumulate(gaps.begin(), gaps.end(), 0.0) / trials;
    out.rows.push_back(row);
  }

  // log-log least squares
  const auto n = out.rows.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : out.rows) {
    const double lx = std::log(r.m), ly = std::log(r.mean_w1);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  return out;
}

EmpiricalMeasure load_measure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file: " + path);
  std::vector<double> xs, vs, ws;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    xs.push_back(j.at("x").get<double>());
    vs.push_back(j.at("v").get<double>());
    ws.push_back(j.at("w").get<double>());
  }
  EmpiricalMeasure m;
  m.x = Eigen::Map<Eigen::ArrayXd>(xs.data(), xs.size());
  m.v = Eigen::Map<Eigen::ArrayXd>(vs.data(), vs.size());
  m.w = Eigen::Map<Eigen::ArrayXd>(ws.data(), ws.size());
  return m;
}

void save_measure(const std::string& path, const EmpiricalMeasure& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write measure file: " + path);
  char buf[128];
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "{\"x\":%.17g,\"v\":%.17g,\"w\":%.17g}\n",
                  m.x[i], m.v[i], m.w[i]);
    out << buf;
  }
}

}  // namespace mfl
