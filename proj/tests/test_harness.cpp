#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mfl/fitting.hpp"
#include "mfl/harness.hpp"
#include "mfl/io.hpp"
#include "mfl/rng.hpp"

using namespace mfl;

TEST_CASE("fit_exponential: exact, noisy, constant, errors") {
  std::vector<double> t, y;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(0.05 * i);
    y.push_back(2.5 * std::exp(0.8 * 0.05 * i));
  }
  const auto exact = fit_exponential(t, y, 0.0, 5.0);
  CHECK(std::abs(exact.rate - 0.8) <= 1e-12);
  CHECK(std::abs(exact.intercept - std::log(2.5)) <= 1e-12);
  CHECK(exact.r2 == doctest::Approx(1.0).epsilon(1e-12));

  // 1% relative noise: rate within 2%
  CounterRng rng(9);
  std::vector<double> yn;
  for (size_t i = 0; i < y.size(); ++i)
    yn.push_back(y[i] * (1.0 + 0.01 * rng.normal()));
  CHECK(std::abs(fit_exponential(t, yn, 0.0, 5.0).rate - 0.8) <= 0.02 * 0.8);

  // constant input: rate 0
  std::vector<double> c(t.size(), 3.0);
  CHECK(std::abs(fit_exponential(t, c, 0.0, 5.0).rate) <= 1e-14);

  // non-positive values inside the window
  std::vector<double> bad = c;
  bad[50] = 0.0;
  CHECK_THROWS(fit_exponential(t, bad, 0.0, 5.0));
  // window with < 2 samples
  CHECK_THROWS(fit_exponential(t, y, 10.0, 11.0));
}

TEST_CASE("parameter validation names the binding constraint") {
  ExperimentConfig cfg;
  cfg.equilibrium = {{"kind", "two_stream"}, {"theta", 0.05}, {"v0", 0.5}};
  cfg.potential = {{"kind", "cosine"}, {"amplitude", 1.0}};
  cfg.K = 3;
  cfg.alpha = 0.1;
  cfg.rate_s = 0.45;
  const auto pot = potential_from_json(cfg.potential);
  const auto warnings = validate_parameters(cfg, 0.867, pot);
  // K lambda0 = 2.6 < C2 = 8 pi^2: warned
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("K*lambda0") != std::string::npos);

  // alpha K > s is also warned
  ExperimentConfig c2 = cfg;
  c2.alpha = 0.2;
  const auto w2 = validate_parameters(c2, 0.867, pot);
  REQUIRE(w2.size() == 2);
  CHECK(w2[1].find("alpha*K") != std::string::npos);

  // both satisfied: no warnings (large K, small alpha, huge lambda)
  ExperimentConfig c3 = cfg;
  c3.K = 2;
  c3.alpha = 0.01;
  CHECK(validate_parameters(c3, 50.0, pot).empty());
}

TEST_CASE("config round trip preserves the hash") {
  ExperimentConfig cfg;
  cfg.equilibrium = {{"kind", "two_stream"}, {"theta", 0.05}, {"v0", 0.5}};
  cfg.potential = {{"kind", "cosine"}, {"amplitude", 1.0}};
  cfg.N_list = {500, 1000};
  const auto j = cfg.to_json();
  const auto back = ExperimentConfig::from_json(j);
  CHECK(config_hash(j) == config_hash(back.to_json()));
}

TEST_CASE("dobrushin: zero jitter means zero distance, bound holds") {
  DobrushinConfig cfg;
  cfg.equilibrium = {{"kind", "maxwellian"}, {"theta", 0.05}};
  cfg.potential = {{"kind", "cosine"}, {"amplitude", 1.0}};
  cfg.N = 200;
  cfg.pairs = 2;
  cfg.eta = 0.0;
  cfg.dt = 2e-3;
  cfg.t_end = 0.3;
  cfg.checkpoint_times = {0.15, 0.3};
  const auto rep = dobrushin_check(cfg);
  CHECK(rep.ok);
  for (const auto& p : rep.pairs) {
    CHECK(p.w1_initial <= 1e-12);
    for (const double w : p.w1) CHECK(w <= 1e-12);
  }

  DobrushinConfig cfg2 = cfg;
  cfg2.eta = 1e-3;
  cfg2.pairs = 2;
  const auto rep2 = dobrushin_check(cfg2);
  CHECK(rep2.ok);
  CHECK(rep2.c0 == doctest::Approx(8.0 * M_PI * M_PI).epsilon(1e-12));
  for (const auto& p : rep2.pairs) {
    CHECK(p.w1_initial > 1e-5);
    CHECK(p.measured_rate <= rep2.c0);
  }
}

TEST_CASE("instability experiment: miniature end-to-end determinism") {
  ExperimentConfig cfg;
  cfg.equilibrium = {{"kind", "two_stream"}, {"theta", 0.05}, {"v0", 0.5}};
  cfg.potential = {{"kind", "cosine"}, {"amplitude", 1.0}};
  cfg.N_list = {300, 600, 1200};
  cfg.seeds = {1, 2};
  cfg.control_seeds = 1;
  cfg.alpha = 0.1;
  cfg.dt = 2e-3;
  cfg.output_dt = 0.05;
  cfg.t_max = 4.0;
  cfg.epsilon0 = 0.12;
  cfg.workers = 2;

  const auto rep1 = instability_experiment(cfg);
  const auto rep2 = instability_experiment(cfg);
  REQUIRE(rep1.runs.size() == rep2.runs.size());
  for (size_t i = 0; i < rep1.runs.size(); ++i) {
    REQUIRE(rep1.runs[i].mode_abs.size() == rep2.runs[i].mode_abs.size());
    for (size_t k = 0; k < rep1.runs[i].mode_abs.size(); ++k)
      CHECK(rep1.runs[i].mode_abs[k] == rep2.runs[i].mode_abs[k]);
    CHECK(rep1.runs[i].t_star == rep2.runs[i].t_star);
  }
  CHECK(rep1.lambda0 == rep2.lambda0);

  // outputs regenerate bitwise
  ExperimentConfig out1 = cfg, out2 = cfg;
  out1.outdir = "/tmp/mfl_exp1";
  out2.outdir = "/tmp/mfl_exp2";
  write_instability_outputs(out1, rep1);
  write_instability_outputs(out2, rep2);
  for (const char* name : {"/summary.csv", "/tstar_fit.csv", "/tstar.svg"}) {
    std::ifstream f1(out1.outdir + name), f2(out2.outdir + name);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(!s1.str().empty());
  }
}
