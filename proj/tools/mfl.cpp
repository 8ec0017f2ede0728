#include <complex>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfl/config.hpp"
#include "mfl/harness.hpp"
#include "mfl/io.hpp"
#include "mfl/linvlasov.hpp"
#include "mfl/nbody.hpp"
#include "mfl/spectral.hpp"
#include "mfl/transport.hpp"

namespace {

using nlohmann::json;

json spectral_record(int k0, std::complex<double> lambda, double margin,
                     double residual) {
  return {{"k0", k0},
          {"lambda_re", lambda.real()},
          {"lambda_im", lambda.imag()},
          {"margin", margin},
          {"residual", residual}};
}

double eigen_residual(const mfl::Eigenmode& mode, const mfl::Equilibrium& eq,
                      const mfl::Potential& pot, int n_v = 1024) {
  mfl::VelocityGrid grid{eq.v_max(), n_v};
  mfl::SpectralState g(grid, mode.k0());
  const Eigen::ArrayXd v = grid.nodes();
  for (int j = 0; j < grid.n; ++j) {
    g.mode(mode.k0())[j] = mode.mode_profile(v[j]);
    g.mode(-mode.k0())[j] = std::conj(mode.mode_profile(v[j]));
  }
  mfl::SpectralState lg = mfl::apply_L(g, eq, pot);
  lg.add_scaled(g, -mode.lambda());
  return mfl::weighted_norm(lg) / mfl::weighted_norm(g);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field instability laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_path, a_path, b_path;

  // ---- spectral ----
  auto* spectral = app.add_subcommand("spectral", "dispersion analysis");
  spectral->require_subcommand(1);
  auto* penrose = spectral->add_subcommand("penrose", "stability check");
  penrose->add_option("--config", config_path)->required();
  auto* growth = spectral->add_subcommand("growth-rate", "maximal real rate");
  growth->add_option("--config", config_path)->required();
  auto* scan = spectral->add_subcommand("scan", "unstable spectrum in a box");
  double re_min = 1e-3, re_max = 3.0, im_min = -3.0, im_max = 3.0;
  scan->add_option("--config", config_path)->required();
  scan->add_option("--re-min", re_min);
  scan->add_option("--re-max", re_max);
  scan->add_option("--im-min", im_min);
  scan->add_option("--im-max", im_max);

  // ---- linear / grenier ----
  auto* linear = app.add_subcommand("linear", "linearized evolution");
  auto* evolve = linear->add_subcommand("evolve", "propagate the growing mode");
  double ev_tend = 2.0, ev_dt = 1e-3;
  int ev_nv = 1024;
  bool ev_nofield = false;
  std::string ev_dump;
  evolve->add_option("--config", config_path)->required();
  evolve->add_option("--t-end", ev_tend);
  evolve->add_option("--dt", ev_dt);
  evolve->add_option("--nv", ev_nv);
  evolve->add_flag("--no-field", ev_nofield);
  evolve->add_option("--out", out_path);
  evolve->add_option("--dump-state", ev_dump);

  auto* grenier = app.add_subcommand("grenier", "high-order approximation");
  auto* gbuild = grenier->add_subcommand("build", "construct g_1..g_K");
  int g_K = 3;
  double g_eps = 1e-3, g_tend = 0.0, g_dt = 1e-3;
  gbuild->add_option("--config", config_path)->required();
  gbuild->add_option("--K", g_K);
  gbuild->add_option("--epsilon", g_eps);
  gbuild->add_option("--t-end", g_tend);
  gbuild->add_option("--dt", g_dt);
  gbuild->add_option("--out", out_path);

  // ---- nbody ----
  auto* nbody = app.add_subcommand("nbody", "particle dynamics");
  auto* nrun = nbody->add_subcommand("run", "sample and evolve");
  nrun->add_option("--config", config_path)->required();

  // ---- w1 ----
  auto* w1 = app.add_subcommand("w1", "Wasserstein-1 distances");
  auto* wexact = w1->add_subcommand("exact", "network-simplex solution");
  wexact->add_option("--a", a_path)->required();
  wexact->add_option("--b", b_path)->required();
  auto* went = w1->add_subcommand("entropic", "certified Sinkhorn bounds");
  double w_reg = 0.0;
  went->add_option("--a", a_path)->required();
  went->add_option("--b", b_path)->required();
  went->add_option("--reg", w_reg, "fixed regularization (0: annealed)");
  auto* wlower = w1->add_subcommand("lower-bound", "Fourier dual witness");
  int w_k = 1;
  wlower->add_option("--a", a_path)->required();
  wlower->add_option("--b", b_path)->required();
  wlower->add_option("--mode-k", w_k);

  // ---- experiment ----
  auto* exp = app.add_subcommand("experiment", "paper-scale experiments");
  auto* einst = exp->add_subcommand("instability", "T_N = O(log N) study");
  einst->add_option("--config", config_path)->required();
  auto* edob = exp->add_subcommand("dobrushin", "stability envelope check");
  edob->add_option("--config", config_path)->required();
  auto* esamp = exp->add_subcommand("sampling-rate", "empirical W1 rate");
  esamp->add_option("--config", config_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (penrose->parsed() || growth->parsed() || scan->parsed()) {
      const json cfg = mfl::load_json(config_path);
      const auto eq = mfl::equilibrium_from_json(cfg.at("equilibrium"));
      const auto pot = mfl::potential_from_json(cfg.at("potential"));
      const auto pen = mfl::penrose_check(eq, pot);
      if (penrose->parsed()) {
        json j = spectral_record(pen.k0, {0.0, 0.0}, pen.margin, 0.0);
        j["unstable"] = pen.unstable;
        j["penrose_integral"] = pen.penrose_integral;
        if (!pen.diagnostic.empty()) j["diagnostic"] = pen.diagnostic;
        std::cout << j.dump(2) << "\n";
      } else if (growth->parsed()) {
        const double lam = mfl::find_real_growth_rate(eq, pot, pen.k0);
        const mfl::Eigenmode mode(eq, pot, lam, pen.k0);
        const double res = eigen_residual(mode, eq, pot);
        json j = spectral_record(pen.k0, mode.lambda(), pen.margin, res);
        j["rho_amplitude"] = mode.rho_amplitude();
        std::cout << j.dump(2) << "\n";
      } else {
        const auto roots = mfl::scan_unstable_spectrum(
            eq, pot, {re_min, re_max, im_min, im_max});
        json arr = json::array();
        for (const auto& r : roots)
          arr.push_back({{"k", r.k},
                         {"lambda_re", r.lambda.real()},
                         {"lambda_im", r.lambda.imag()}});
        std::cout << arr.dump(2) << "\n";
      }
      return 0;
    }

    if (evolve->parsed()) {
      const json cfg = mfl::load_json(config_path);
      const auto eq = mfl::equilibrium_from_json(cfg.at("equilibrium"));
      const auto pot = mfl::potential_from_json(cfg.at("potential"));
      const auto pen = mfl::penrose_check(eq, pot);
      if (!pen.unstable) throw std::runtime_error("equilibrium is stable");
      const double lam = mfl::find_real_growth_rate(eq, pot, pen.k0);
      const mfl::Eigenmode mode(eq, pot, lam, pen.k0);
      mfl::VelocityGrid grid{eq.v_max(), ev_nv};
      mfl::SpectralState init(grid, pen.k0);
      const Eigen::ArrayXd v = grid.nodes();
      for (int j = 0; j < grid.n; ++j) {
        init.mode(pen.k0)[j] = mode.mode_profile(v[j]);
        init.mode(-pen.k0)[j] = std::conj(mode.mode_profile(v[j]));
      }
      mfl::PropagateOptions popts;
      popts.t_end = ev_tend;
      popts.dt = ev_dt;
      popts.output_dt = std::max(ev_dt, ev_tend / 200.0);
      popts.field_enabled = !ev_nofield;
      const auto traj = mfl::propagate(init, eq, pot, nullptr, popts);
      std::unique_ptr<mfl::JsonlWriter> w;
      if (!out_path.empty()) w = std::make_unique<mfl::JsonlWriter>(out_path);
      for (size_t i = 0; i < traj.times.size(); ++i) {
        json rec{{"t", traj.times[i]}, {"norm", traj.norms[i]}};
        json rho = json::array();
        for (int k = 0; k <= traj.states[i].k_max(); ++k)
          rho.push_back(traj.rho_abs[i][k]);
        rec["rho_abs"] = rho;
        if (w)
          w->write(rec);
        else
          std::cout << rec.dump() << "\n";
      }
      if (!ev_dump.empty()) {
        const auto& last = traj.states.back();
        const auto dens = mfl::eval_on_grid(last, 128);
        mfl::save_grid(ev_dump,
                       {{"t", last.t},
                        {"v_max", grid.v_max},
                        {"k_max", last.k_max()},
                        {"kind", "phase_space_density"}},
                       dens.values);
      }
      return 0;
    }

    if (gbuild->parsed()) {
      const json cfg = mfl::load_json(config_path);
      const auto eq = mfl::equilibrium_from_json(cfg.at("equilibrium"));
      const auto pot = mfl::potential_from_json(cfg.at("potential"));
      const auto pen = mfl::penrose_check(eq, pot);
      if (!pen.unstable) throw std::runtime_error("equilibrium is stable");
      const double lam = mfl::find_real_growth_rate(eq, pot, pen.k0);
      const mfl::Eigenmode mode(eq, pot, lam, pen.k0);
      if (g_tend <= 0.0) g_tend = 4.0 / lam;
      mfl::HierarchyOptions hopts;
      hopts.dt = g_dt;
      const auto h = mfl::build_hierarchy(mode, eq, pot, g_K, g_eps, g_tend,
                                          hopts);
      std::unique_ptr<mfl::JsonlWriter> w;
      if (!out_path.empty()) w = std::make_unique<mfl::JsonlWriter>(out_path);
      for (size_t i = 0; i < h.diag_times.size(); ++i) {
        json rec{{"t", h.diag_times[i]}, {"rapp_norm", h.rapp_norms[i]}};
        json norms = json::array();
        for (int k = 0; k < h.K; ++k) norms.push_back(h.level_norms(i, k));
        rec["level_norms"] = norms;
        if (w)
          w->write(rec);
        else
          std::cout << rec.dump() << "\n";
      }
      return 0;
    }

    if (nrun->parsed()) {
      const json cfg = mfl::load_json(config_path);
      const auto eq = mfl::equilibrium_from_json(cfg.at("equilibrium"));
      const auto pot = mfl::potential_from_json(cfg.at("potential"));
      const long N = cfg.at("N").get<long>();
      const double eps = cfg.value("epsilon", 0.0);
      const uint64_t seed = cfg.value("seed", 1);
      const double t_end = cfg.value("t_end", 1.0);
      const double dt = cfg.value("dt", 1e-3);
      const std::string outdir = cfg.value("outdir", "runs/nbody");
      mfl::ensure_directory(outdir);

      mfl::ParticleState st;
      int mode_k = 1;
      if (eps > 0.0) {
        const auto pen = mfl::penrose_check(eq, pot);
        if (!pen.unstable)
          throw std::runtime_error("epsilon > 0 requires an unstable pair");
        const double lam = mfl::find_real_growth_rate(eq, pot, pen.k0);
        const mfl::Eigenmode mode(eq, pot, lam, pen.k0);
        st = mfl::sample_initial(eq, mode, eps, N, seed);
        mode_k = pen.k0;
      } else {
        st = mfl::sample_equilibrium(eq, N, seed);
      }
      mfl::RunOptions opts;
      opts.t_end = t_end;
      opts.dt = dt;
      opts.output_dt = cfg.value("output_dt", 0.01);
      opts.mode_k = mode_k;
      mfl::JsonlWriter w(outdir + "/observables.jsonl");
      const auto recs = mfl::run(st, pot, opts);
      for (const auto& r : recs)
        w.write({{"t", r.t},
                 {"mode_re", r.mode.real()},
                 {"mode_im", r.mode.imag()},
                 {"energy", r.energy},
                 {"momentum", r.momentum}});
      mfl::save_snapshot(outdir + "/final.snap", st,
                         json{{"N", N},
                              {"t", st.t},
                              {"seed", seed},
                              {"potential", cfg.at("potential")},
                              {"equilibrium", cfg.at("equilibrium")}}
                             .dump());
      return 0;
    }

    if (wexact->parsed() || went->parsed() || wlower->parsed()) {
      const auto ma = mfl::load_measure(a_path);
      const auto mb = mfl::load_measure(b_path);
      if (wexact->parsed()) {
        const auto r = mfl::w1_exact(ma, mb);
        std::cout << json{{"cost", r.cost},
                          {"dual_gap", r.dual_gap},
                          {"support", r.plan.entries.size()}}
                         .dump(2)
                  << "\n";
      } else if (went->parsed()) {
        const auto r = w_reg > 0.0 ? mfl::w1_entropic(ma, mb, w_reg)
                                   : mfl::w1_entropic_auto(ma, mb);
        std::cout << json{{"upper", r.upper},
                          {"lower", r.lower},
                          {"gap", r.gap()},
                          {"reg", r.reg},
                          {"iterations", r.iterations}}
                         .dump(2)
                  << "\n";
      } else {
        std::cout << json{{"lower_bound",
                           mfl::w1_dual_lower_bound(ma, mb, w_k)},
                          {"k", w_k}}
                         .dump(2)
                  << "\n";
      }
      return 0;
    }

    if (einst->parsed()) {
      const auto cfg =
          mfl::ExperimentConfig::from_json(mfl::load_json(config_path));
      const auto rep = mfl::instability_experiment(cfg);
      return mfl::write_instability_outputs(cfg, rep);
    }
    if (edob->parsed()) {
      const auto cfg =
          mfl::DobrushinConfig::from_json(mfl::load_json(config_path));
      const auto rep = mfl::dobrushin_check(cfg);
      return mfl::write_dobrushin_outputs(cfg, rep);
    }
    if (esamp->parsed()) {
      const auto cfg =
          mfl::SamplingRateConfig::from_json(mfl::load_json(config_path));
      return mfl::run_sampling_rate(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
