#pragma once

#include <string>
#include <vector>

#include "mfl/config.hpp"
#include "mfl/fitting.hpp"
#include "mfl/nbody.hpp"
#include "mfl/transport.hpp"

namespace mfl {

/// Constraint check on the experiment parameters: K * lambda0 >= C2 and
/// alpha * K <= s. Violations are warnings (desk-scale runs cannot satisfy
/// the asymptotic constants), each naming the binding constraint.
std::vector<std::string> validate_parameters(const ExperimentConfig& cfg,
                                             double lambda0,
                                             const Potential& pot);

struct RunSeries {
  long N = 0;
  uint64_t seed = 0;
  bool control = false;
  std::vector<double> t;
  std::vector<double> mode_abs;   // |rho_hat(k0)|
  std::vector<double> w1_lower;   // dual lower bound against f_inf
  std::vector<double> energy;
  std::vector<double> momentum;
  double t_star = -1.0;           // first threshold crossing; <0: none
  double growth_rate = 0.0;       // NaN when the clean window is too narrow
  double growth_window_lo = 0.0, growth_window_hi = 0.0;
  struct Checkpoint {
    double t = 0.0;
    double upper = 0.0, lower = 0.0, gap = 0.0;
    double subsample_err = 0.0;
  };
  std::vector<Checkpoint> checkpoints;
};

struct InstabilityReport {
  PenroseResult penrose;
  double lambda0 = 0.0;
  double rho0 = 0.0;      // |rho_hat(k0)| carried by the unit-envelope mode
  double delta = 0.0;     // W1 threshold
  double t_max = 0.0;
  std::vector<std::string> warnings;
  std::vector<RunSeries> runs;         // unstable runs, then controls
  std::vector<double> median_t_star;   // per N
  std::vector<long> N_values;
  LinearFit t_star_fit;                // T* = a log N + b
  double predicted_slope = 0.0;        // alpha / lambda0
  std::vector<double> median_growth_rate;  // per N (NaN when unmeasurable)
  double control_max_w1 = 0.0;
  bool control_crossed = false;
  bool ok = true;
  std::string failure;
};

/// The main experiment: for each N and seed, sample f_inf + eps g1 with
/// eps = N^-alpha, evolve the N-body flow, detect the first time the
/// certified W1 lower bound reaches delta, and fit T*(N) = a log N + b
/// against the prediction a = alpha / lambda0. Control runs use the
/// same-temperature Maxwellian (Penrose stable) and must never cross.
InstabilityReport instability_experiment(const ExperimentConfig& cfg);

/// Serialize the report, per-run JSONL, CSV summaries and SVG plots into
/// cfg.outdir. Returns the process exit code (0 = all invariants hold).
int write_instability_outputs(const ExperimentConfig& cfg,
                              const InstabilityReport& report);

struct DobrushinPair {
  uint64_t seed = 0;
  double w1_initial = 0.0;
  std::vector<double> t;
  std::vector<double> w1;
  std::vector<double> bound;  // exp(C0 t) W1(0) (1 + tol)
  bool violated = false;
  double first_violation_t = -1.0;
  double measured_rate = 0.0;  // slope of log W1
};

struct DobrushinReport {
  double c0 = 0.0;  // 2 ||phi''||_inf
  std::vector<DobrushinPair> pairs;
  double max_rate_ratio = 0.0;  // measured rate / C0, reported
  bool ok = true;
};

/// Stability-estimate check: paired runs from initial conditions at W1
/// distance ~eta (velocity jitter), exact W1 at the checkpoints, asserted
/// against exp(C0 t) growth. A violation indicates an integrator or OT bug.
DobrushinReport dobrushin_check(const DobrushinConfig& cfg);

int write_dobrushin_outputs(const DobrushinConfig& cfg,
                            const DobrushinReport& report);

/// Runs the transport sampling-rate experiment and writes table + plot.
int run_sampling_rate(const SamplingRateConfig& cfg);

}  // namespace mfl
