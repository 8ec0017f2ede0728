#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mfl/equilibrium.hpp"
#include "mfl/potential.hpp"

namespace mfl {

/// {"kind": "maxwellian"|"two_stream"|"tabulated", "theta":.., "v0":..,
///  "file": "path"}
Equilibrium equilibrium_from_json(const nlohmann::json& j);

/// {"kind": "cosine"|"coulomb1d"|"fourier_series", "amplitude":..,
///  "coefficients": [[k, value], ...]}
Potential potential_from_json(const nlohmann::json& j);

nlohmann::json load_json(const std::string& path);

/// Parameters of the main experiment; see configs/ for examples.
struct ExperimentConfig {
  nlohmann::json equilibrium;
  nlohmann::json potential;
  double alpha = 0.1;           // eps = N^-alpha
  int K = 1;                    // hierarchy order used for the PDE reference
  std::vector<long> N_list{1000, 10000, 100000};
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  double epsilon0 = 0.1;        // validity scale; also sets the default delta
  double delta = 0.0;           // 0: use epsilon0 / (4 pi k0)
  double dt = 1e-3;
  double t_max = 0.0;           // 0: (1/lambda0) max(0, log(eps0 N^alpha)) + margin
  double t_margin = 0.0;        // 0: (1/lambda0) (log(1/eps0) + 4)
  double output_dt = 0.02;
  std::vector<double> checkpoint_times;  // entropic W1 checkpoints
  int subsample = 10000;        // measure-size cap for entropic checkpoints
  int workers = 2;
  int control_seeds = 2;
  double stability_rate_c2 = 0.0;  // 0: 2*hessian_sup when available
  double rate_s = 0.45;            // sampling-rate exponent bound (d = 1)
  std::string outdir = "runs/instability";

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct DobrushinConfig {
  nlohmann::json equilibrium;
  nlohmann::json potential;
  long N = 1000;
  int pairs = 10;
  double eta = 1e-3;
  double dt = 1e-3;
  double t_end = 2.0;
  std::vector<double> checkpoint_times{0.5, 1.0, 1.5, 2.0};
  double tolerance = 1e-6;  // covers OT rounding at the checkpoints
  uint64_t seed = 1;
  std::string outdir = "runs/dobrushin";

  static DobrushinConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SamplingRateConfig {
  nlohmann::json equilibrium;
  nlohmann::json potential;
  double epsilon = 0.1;
  std::vector<int> m_list{100, 1000, 10000};
  int trials = 20;
  uint64_t seed = 1;
  int ref_nx = 192;
  int ref_nv = 256;
  int ref_size = 4096;
  double rel_gap_target = 0.05;
  int workers = 2;
  std::string outdir = "runs/sampling_rate";

  static SamplingRateConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

}  // namespace mfl
