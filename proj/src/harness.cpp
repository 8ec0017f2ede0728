#include "mfl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <memory>
#include <numeric>
#include <thread>

#include "mfl/io.hpp"
#include "mfl/rng.hpp"
#include "mfl/svgplot.hpp"
#include "mfl/torus.hpp"

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// First crossing of the series above `threshold`, log-linear interpolated.
double first_crossing(const std::vector<double>& t,
                      const std::vector<double>& y, double threshold) {
  for (size_t i = 1; i < t.size(); ++i) {
    if (y[i] >= threshold && y[i - 1] < threshold) {
      if (y[i - 1] <= 0.0) return t[i];
      const double f = (std::log(threshold) - std::log(y[i - 1])) /
                       (std::log(y[i]) - std::log(y[i - 1]));
      return t[i - 1] + f * (t[i] - t[i - 1]);
    }
  }
  return -1.0;
}

// Uniform subsample without replacement (partial Fisher-Yates), seeded.
EmpiricalMeasure subsample_measure(const ParticleState& s, int target,
                                   uint64_t seed) {
  const Eigen::Index n = s.size();
  if (n <= target) return EmpiricalMeasure::from_points(s.x, s.v);
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  CounterRng rng(seed, 0x5ab5a317ULL);
  for (int i = 0; i < target; ++i) {
    const auto j =
        i + static_cast<Eigen::Index>(rng.uniform() * double(n - i));
    std::swap(idx[i], idx[std::min<Eigen::Index>(j, n - 1)]);
  }
  Eigen::ArrayXd x(target), v(target);
  for (int i = 0; i < target; ++i) {
    x[i] = s.x[idx[i]];
    v[i] = s.v[idx[i]];
  }
  return EmpiricalMeasure::from_points(x, v);
}

}  // namespace

std::vector<std::string> validate_parameters(const ExperimentConfig& cfg,
                                             double lambda0,
                                             const Potential& pot) {
  std::vector<std::string> warnings;
  double c2 = cfg.stability_rate_c2;
  if (c2 <= 0.0) {
    try {
      c2 = 2.0 * pot.hessian_sup();
    } catch (const UnsupportedKind&) {
      c2 = 0.0;  // Coulomb: the stability rate is measured, not assumed
    }
  }
  if (c2 > 0.0 && cfg.K * lambda0 < c2) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "binding constraint K*lambda0 >= C2 violated: %d * %.4g = "
                  "%.4g < %.4g",
                  cfg.K, lambda0, cfg.K * lambda0, c2);
    warnings.push_back(buf);
  }
  if (cfg.alpha * cfg.K > cfg.rate_s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "binding constraint alpha*K <= s violated: %.4g * %d = %.4g "
                  "> %.4g",
                  cfg.alpha, cfg.K, cfg.alpha * cfg.K, cfg.rate_s);
    warnings.push_back(buf);
  }
  return warnings;
}

namespace {

struct RunTask {
  long N;
  uint64_t seed;
  bool control;
};

RunSeries execute_run(const RunTask& task, const ExperimentConfig& cfg,
                      const Equilibrium& eq, const Equilibrium& control_eq,
                      const Potential& pot, const Eigenmode& mode,
                      double delta, double t_max,
                      const EmpiricalMeasure* f_inf_ref) {
  RunSeries rs;
  rs.N = task.N;
  rs.seed = task.seed;
  rs.control = task.control;
  const double eps =
      task.control ? 0.0 : std::pow(double(task.N), -cfg.alpha);

  ParticleState state =
      task.control ? sample_equilibrium(control_eq, task.N, task.seed)
                   : sample_initial(eq, mode, eps, task.N, task.seed);

  const int k0 = mode.k0();
  RunOptions opts;
  opts.t_end = t_max;
  opts.dt = cfg.dt;
  opts.output_dt = cfg.output_dt;
  opts.mode_k = k0;
  if (!task.control && f_inf_ref && !cfg.checkpoint_times.empty()) {
    // entropic W1 against the quantized background at sparse checkpoints
    auto remaining =
        std::make_shared<std::vector<double>>(cfg.checkpoint_times);
    std::sort(remaining->begin(), remaining->end());
    opts.observer = [&, remaining](const ParticleState& ps) {
      if (remaining->empty() || ps.t + 1e-9 < remaining->front()) return;
      while (!remaining->empty() && remaining->front() <= ps.t + 1e-9)
        remaining->erase(remaining->begin());
      const EmpiricalMeasure sub =
          subsample_measure(ps, cfg.subsample, rs.seed);
      const EntropicResult er = w1_entropic_auto(sub, *f_inf_ref, 0.05);
      RunSeries::Checkpoint cp;
      cp.t = ps.t;
      cp.upper = er.upper;
      cp.lower = er.lower;
      cp.gap = er.gap();
      cp.subsample_err =
          1.0 / std::sqrt(double(std::min<Eigen::Index>(ps.size(),
                                                        cfg.subsample)));
      rs.checkpoints.push_back(cp);
    };
  }
  auto records = run(state, pot, opts);
  for (const auto& r : records) {
    rs.t.push_back(r.t);
    const double amp = std::abs(r.mode);
    rs.mode_abs.push_back(amp);
    rs.w1_lower.push_back(amp / (kTwoPi * k0));
    rs.energy.push_back(r.energy);
    rs.momentum.push_back(r.momentum);
  }
  rs.t_star = first_crossing(rs.t, rs.w1_lower, delta);
  (void)eq;

  // Growth rate over the window above both the coherent seed and the
  // sampling-noise floor and below 80% of the detection threshold. When the
  // window spans less than a factor 2.2 in amplitude the linear regime is
  // not observable at this N and the rate is reported as unmeasured.
  const double lam0 = mode.growth_rate();
  const double a_lo = std::max(2.0 * eps * mode.rho_amplitude(),
                               2.5 / std::sqrt(double(task.N)));
  const double a_hi = 0.8 * kTwoPi * k0 * delta;
  const double t_min = 0.3 / lam0;
  rs.growth_window_lo = a_lo;
  rs.growth_window_hi = a_hi;
  rs.growth_rate = std::numeric_limits<double>::quiet_NaN();
  if (!task.control && a_hi > 2.2 * a_lo) {
    std::vector<double> ft, fy;
    for (size_t i = 0; i < rs.t.size(); ++i) {
      if (rs.t[i] < t_min || rs.mode_abs[i] < a_lo) continue;
      if (rs.mode_abs[i] >= a_hi) break;
      ft.push_back(rs.t[i]);
      fy.push_back(rs.mode_abs[i]);
    }
    if (ft.size() >= 4) {
      try {
        rs.growth_rate = fit_exponential(ft, fy, ft.front(), ft.back()).rate;
      } catch (const std::exception&) {
      }
    }
  }

  return rs;
}

}  // namespace

InstabilityReport instability_experiment(const ExperimentConfig& cfg) {
  InstabilityReport rep;
  const Equilibrium eq = equilibrium_from_json(cfg.equilibrium);
  const Potential pot = potential_from_json(cfg.potential);

  rep.penrose = penrose_check(eq, pot);
  if (!rep.penrose.unstable)
    throw std::runtime_error(
        "instability_experiment: configured equilibrium is Penrose stable");
  rep.lambda0 = find_real_growth_rate(eq, pot, rep.penrose.k0);
  const Eigenmode mode(eq, pot, rep.lambda0, rep.penrose.k0);
  rep.rho0 = mode.rho_amplitude();
  rep.delta = cfg.delta > 0.0 ? cfg.delta
                              : cfg.epsilon0 / (2.0 * kTwoPi * rep.penrose.k0);
  rep.predicted_slope = cfg.alpha / rep.lambda0;
  rep.warnings = validate_parameters(cfg, rep.lambda0, pot);

  // control: same-temperature Maxwellian (Penrose stable for cosine/Coulomb)
  const Equilibrium control_eq = Equilibrium::maxwellian(eq.theta());

  double t_max = cfg.t_max;
  if (t_max <= 0.0) {
    const double margin =
        cfg.t_margin > 0.0 ? cfg.t_margin : 2.5 / rep.lambda0;
    const double n_max = double(cfg.N_list.back());
    const double onset = std::max(
        0.0, std::log(kTwoPi * rep.penrose.k0 * rep.delta / rep.rho0));
    t_max = (onset + cfg.alpha * std::log(n_max)) / rep.lambda0 + margin;
  }
  rep.t_max = t_max;

  // quantized background for the entropic checkpoints (x-uniform)
  EmpiricalMeasure f_inf_ref;
  if (!cfg.checkpoint_times.empty()) {
    GridDensity bg;
    bg.v_max = eq.v_max();
    const int nx = 64, nv = 256;
    bg.values.resize(nx, nv);
    for (int iv = 0; iv < nv; ++iv) {
      const double v = -bg.v_max + (iv + 0.5) * (2.0 * bg.v_max / nv);
      bg.values.col(iv).setConstant(eq.value(v));
    }
    f_inf_ref = quantize(bg, 2048).measure;
  }

  std::vector<RunTask> tasks;
  for (const long N : cfg.N_list)
    for (const uint64_t seed : cfg.seeds) tasks.push_back({N, seed, false});
  for (const long N : cfg.N_list)
    for (int c = 0; c < cfg.control_seeds; ++c)
      tasks.push_back({N, cfg.seeds[c % cfg.seeds.size()] + 1000, true});

  std::vector<RunSeries> results(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = execute_run(
          tasks[i], cfg, eq, control_eq, pot, mode, rep.delta, t_max,
          cfg.checkpoint_times.empty() ? nullptr : &f_inf_ref);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::max(1, cfg.workers); ++w)
    pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  rep.runs = std::move(results);

  // aggregate per N
  rep.N_values.assign(cfg.N_list.begin(), cfg.N_list.end());
  std::vector<double> log_n, med_t;
  for (const long N : cfg.N_list) {
    std::vector<double> ts, rates;
    for (const auto& r : rep.runs) {
      if (r.control || r.N != N) continue;
      if (r.t_star >= 0.0) ts.push_back(r.t_star);
      if (std::isfinite(r.growth_rate)) rates.push_back(r.growth_rate);
    }
    rep.median_t_star.push_back(median(ts));
    rep.median_growth_rate.push_back(median(rates));
    if (!ts.empty()) {
      log_n.push_back(std::log(double(N)));
      med_t.push_back(median(ts));
    }
  }
  if (log_n.size() >= 3) {
    rep.t_star_fit = fit_linear(log_n, med_t);
  } else {
    rep.ok = false;
    rep.failure = "fewer than 3 N values produced a threshold crossing";
  }

  for (const auto& r : rep.runs) {
    if (!r.control) continue;
    const double mx =
        *std::max_element(r.w1_lower.begin(), r.w1_lower.end());
    rep.control_max_w1 = std::max(rep.control_max_w1, mx);
    if (r.t_star >= 0.0) rep.control_crossed = true;
  }
  if (rep.control_crossed) {
    rep.ok = false;
    rep.failure = "stable control crossed the instability threshold";
  }
  return rep;
}

int write_instability_outputs(const ExperimentConfig& cfg,
                              const InstabilityReport& rep) {
  ensure_directory(cfg.outdir);
  const auto cfg_json = cfg.to_json();
  {
    std::ofstream out(cfg.outdir + "/config.json");
    out << cfg_json.dump(2) << "\n";
  }
  const std::string hash = config_hash(cfg_json);

  for (const auto& r : rep.runs) {
    char name[128];
    std::snprintf(name, sizeof(name), "%s/run_%s_N%ld_s%llu.jsonl",
                  cfg.outdir.c_str(), r.control ? "control" : "unstable",
                  r.N, static_cast<unsigned long long>(r.seed));
    JsonlWriter w(name);
    w.write({{"meta",
              {{"N", r.N},
               {"seed", r.seed},
               {"control", r.control},
               {"config_hash", hash},
               {"t_star", r.t_star},
               {"growth_rate", std::isfinite(r.growth_rate)
                                   ? nlohmann::json(r.growth_rate)
                                   : nlohmann::json()}}}});
    for (size_t i = 0; i < r.t.size(); ++i)
      w.write({{"t", r.t[i]},
               {"mode_abs", r.mode_abs[i]},
               {"w1_lower", r.w1_lower[i]},
               {"energy", r.energy[i]},
               {"momentum", r.momentum[i]}});
  }

  {
    CsvWriter csv(cfg.outdir + "/summary.csv",
                  {"N", "seed", "control", "t_star", "growth_rate",
                   "max_w1_lower"});
    for (const auto& r : rep.runs) {
      const double mx =
          *std::max_element(r.w1_lower.begin(), r.w1_lower.end());
      csv.row({double(r.N), double(r.seed), r.control ? 1.0 : 0.0, r.t_star,
               r.growth_rate, mx});
    }
  }
  {
    CsvWriter csv(cfg.outdir + "/tstar_fit.csv",
                  {"N", "log_N", "median_t_star", "median_growth_rate"});
    for (size_t i = 0; i < rep.N_values.size(); ++i)
      csv.row({double(rep.N_values[i]), std::log(double(rep.N_values[i])),
               rep.median_t_star[i], rep.median_growth_rate[i]});
  }
  {
    nlohmann::json j{
        {"k0", rep.penrose.k0},
        {"lambda0", rep.lambda0},
        {"margin", rep.penrose.margin},
        {"rho0", rep.rho0},
        {"delta", rep.delta},
        {"t_max", rep.t_max},
        {"fit_a", rep.t_star_fit.slope},
        {"fit_b", rep.t_star_fit.intercept},
        {"fit_r2", rep.t_star_fit.r2},
        {"predicted_slope", rep.predicted_slope},
        {"slope_ratio", rep.t_star_fit.slope / rep.predicted_slope},
        {"control_max_w1", rep.control_max_w1},
        {"control_crossed", rep.control_crossed},
        {"warnings", rep.warnings},
        {"ok", rep.ok},
        {"failure", rep.failure},
        {"config_hash", hash}};
    std::ofstream out(cfg.outdir + "/report.json");
    out << j.dump(2) << "\n";
  }

  // plots with CSV twins
  {
    SvgPlot plot("mode growth", "t", "|rho_k0|");
    CsvWriter csv(cfg.outdir + "/growth_curves.csv",
                  {"t", "amp", "N", "seed"});
    for (const auto& r : rep.runs) {
      if (r.control || r.seed != cfg.seeds.front()) continue;
      plot.add_series("N=" + std::to_string(r.N), r.t, r.mode_abs);
      for (size_t i = 0; i < r.t.size(); ++i)
        csv.row({r.t[i], r.mode_abs[i], double(r.N), double(r.seed)});
    }
    // reference slope
    if (!rep.runs.empty()) {
      const auto& r0 = rep.runs.front();
      std::vector<double> ref_t = r0.t, ref_y(r0.t.size());
      for (size_t i = 0; i < ref_t.size(); ++i)
        ref_y[i] = 0.5 * rep.delta * kTwoPi *
                   std::exp(rep.lambda0 * (ref_t[i] - ref_t.back() * 0.5));
      plot.add_series("slope lambda0", ref_t, ref_y);
    }
    plot.set_log_y(true);
    plot.write(cfg.outdir + "/growth_curves.svg");
  }
  {
    SvgPlot plot("threshold crossing times", "log N", "T*");
    CsvWriter csv(cfg.outdir + "/tstar_plot.csv", {"log_N", "t_star_median"});
    std::vector<double> xs, ys;
    for (size_t i = 0; i < rep.N_values.size(); ++i) {
      xs.push_back(std::log(double(rep.N_values[i])));
      ys.push_back(rep.median_t_star[i]);
      csv.row({xs.back(), ys.back()});
    }
    plot.add_series("median T*", xs, ys);
    std::vector<double> fy;
    for (const double x : xs)
      fy.push_back(rep.t_star_fit.slope * x + rep.t_star_fit.intercept);
    plot.add_series("fit", xs, fy);
    plot.write(cfg.outdir + "/tstar.svg");
  }

  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return rep.ok ? 0 : 1;
}

DobrushinReport dobrushin_check(const DobrushinConfig& cfg) {
  const Equilibrium eq = equilibrium_from_json(cfg.equilibrium);
  const Potential pot = potential_from_json(cfg.potential);
  DobrushinReport rep;
  rep.c0 = 2.0 * pot.hessian_sup();  // throws for coulomb1d, as it should

  for (int p = 0; p < cfg.pairs; ++p) {
    DobrushinPair pair;
    pair.seed = cfg.seed + p;
    ParticleState s1 = sample_equilibrium(eq, cfg.N, pair.seed);
    ParticleState s2 = s1;
    for (Eigen::Index i = 0; i < s2.size(); ++i) {
      CounterRng rng(pair.seed ^ 0x9e3779b9ULL, static_cast<uint64_t>(i));
      s2.v[i] += rng.uniform(-cfg.eta, cfg.eta);
    }
    const EmpiricalMeasure m1 = EmpiricalMeasure::from_points(s1.x, s1.v);
    const EmpiricalMeasure m2 = EmpiricalMeasure::from_points(s2.x, s2.v);
    pair.w1_initial = w1_exact(m1, m2).cost;

    double t = 0.0;
    std::vector<double> logw_t, logw_v;
    for (const double tc : cfg.checkpoint_times) {
      const int steps = static_cast<int>(std::round((tc - t) / cfg.dt));
      for (int s = 0; s < steps; ++s) {
        step(s1, pot, cfg.dt);
        step(s2, pot, cfg.dt);
      }
      t = tc;
      const double w = w1_exact(EmpiricalMeasure::from_points(s1.x, s1.v),
                                EmpiricalMeasure::from_points(s2.x, s2.v))
                           .cost;
      const double bound =
          std::exp(rep.c0 * t) * pair.w1_initial * (1.0 + cfg.tolerance);
      pair.t.push_back(t);
      pair.w1.push_back(w);
      pair.bound.push_back(bound);
      if (w > bound && !pair.violated) {
        pair.violated = true;
        pair.first_violation_t = t;
      }
      if (w > 0) {
        logw_t.push_back(t);
        logw_v.push_back(w);
      }
    }
    if (logw_t.size() >= 2 && pair.w1_initial > 0.0) {
      logw_t.insert(logw_t.begin(), 0.0);
      logw_v.insert(logw_v.begin(), pair.w1_initial);
      pair.measured_rate =
          fit_exponential(logw_t, logw_v, 0.0, cfg.t_end).rate;
      rep.max_rate_ratio =
          std::max(rep.max_rate_ratio, pair.measured_rate / rep.c0);
    }
    if (pair.violated) rep.ok = false;
    rep.pairs.push_back(std::move(pair));
  }
  return rep;
}

int write_dobrushin_outputs(const DobrushinConfig& cfg,
                            const DobrushinReport& rep) {
  ensure_directory(cfg.outdir);
  {
    std::ofstream out(cfg.outdir + "/config.json");
    out << cfg.to_json().dump(2) << "\n";
  }
  CsvWriter csv(cfg.outdir + "/dobrushin.csv",
                {"pair", "t", "w1", "bound"});
  SvgPlot plot("stability envelope", "t", "W1");
  for (size_t p = 0; p < rep.pairs.size(); ++p) {
    const auto& pair = rep.pairs[p];
    for (size_t i = 0; i < pair.t.size(); ++i)
      csv.row({double(p), pair.t[i], pair.w1[i], pair.bound[i]});
    if (p == 0) {
      plot.add_series("W1 pair 0", pair.t, pair.w1);
      plot.add_series("bound", pair.t, pair.bound);
    }
  }
  plot.set_log_y(true);
  plot.write(cfg.outdir + "/dobrushin.svg");
  nlohmann::json j{{"c0", rep.c0},
                   {"ok", rep.ok},
                   {"max_rate_ratio", rep.max_rate_ratio}};
  std::ofstream out(cfg.outdir + "/report.json");
  out << j.dump(2) << "\n";
  return rep.ok ? 0 : 1;
}

int run_sampling_rate(const SamplingRateConfig& cfg) {
  const Equilibrium eq = equilibrium_from_json(cfg.equilibrium);
  const Potential pot = potential_from_json(cfg.potential);
  const PenroseResult pen = penrose_check(eq, pot);
  if (!pen.unstable)
    throw std::runtime_error("sampling rate: need an unstable pair for g1");
  const double lam0 = find_real_growth_rate(eq, pot, pen.k0);
  const Eigenmode mode(eq, pot, lam0, pen.k0);

  SamplingRateOptions opts;
  opts.ref_nx = cfg.ref_nx;
  opts.ref_nv = cfg.ref_nv;
  opts.ref_size = cfg.ref_size;
  opts.rel_gap_target = cfg.rel_gap_target;
  opts.workers = cfg.workers;
  const SamplingRateResult res = sampling_rate_experiment(
      eq, mode, cfg.epsilon, cfg.m_list, cfg.trials, cfg.seed, opts);

  ensure_directory(cfg.outdir);
  {
    std::ofstream out(cfg.outdir + "/config.json");
    out << cfg.to_json().dump(2) << "\n";
  }
  CsvWriter csv(cfg.outdir + "/sampling_rate.csv",
                {"m", "mean_w1", "stderr_w1", "mean_gap", "slope"});
  std::vector<double> xs, ys;
  for (const auto& r : res.rows) {
    csv.row({r.m, r.mean_w1, r.stderr_w1, r.mean_gap, res.slope});
    xs.push_back(r.m);
    ys.push_back(r.mean_w1);
  }
  SvgPlot plot("sampling rate", "m", "E[W1]");
  plot.add_series("mean W1", xs, ys);
  plot.set_log_y(true);
  plot.write(cfg.outdir + "/sampling_rate.svg");
  nlohmann::json j{{"slope", res.slope}, {"intercept", res.intercept}};
  std::ofstream out(cfg.outdir + "/report.json");
  out << j.dump(2) << "\n";
  const bool ok = res.slope > -0.6 && res.slope < -0.4;
  return ok ? 0 : 1;
}

}  // namespace mfl
