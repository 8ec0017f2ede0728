#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "mfl/equilibrium.hpp"
#include "mfl/spectral.hpp"

namespace mfl {

/// Ground metric on the phase-space cylinder:
/// sqrt(d_torus(x1, x2)^2 + (v1 - v2)^2).
double ground_distance(double x1, double v1, double x2, double v2);

/// Weighted point cloud on the cylinder; weights sum to 1.
struct EmpiricalMeasure {
  Eigen::ArrayXd x, v, w;

  Eigen::Index size() const { return x.size(); }
  /// Uniform weights over particle coordinates.
  static EmpiricalMeasure from_points(const Eigen::ArrayXd& x,
                                      const Eigen::ArrayXd& v);
  /// Throws unless weights are nonnegative, normalized to 1e-12, and x wrapped.
  void validate() const;
};

struct TransportPlan {
  std::vector<std::tuple<int, int, double>> entries;  // (i, j, mass)
  double cost = 0.0;
};

struct ExactResult {
  double cost = 0.0;
  TransportPlan plan;
  Eigen::VectorXd potential_mu, potential_nu;
  double dual_gap = 0.0;
};

/// Exact W1 by network simplex. Guarded to a combined support of 5000
/// points; optimality is certified by the recovered dual potentials
/// (duality gap <= 1e-9).
ExactResult w1_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct EntropicOptions {
  int max_iterations = 400;
  double marginal_tol = 1e-8;  // L1 violation of the unmatched marginal
};

struct EntropicResult {
  double upper = 0.0;  // cost of the rounded feasible plan
  double lower = 0.0;  // value of the c-transformed feasible dual pair
  double reg = 0.0;
  int iterations = 0;
  bool converged = false;
  double gap() const { return upper - lower; }
};

/// Log-domain Sinkhorn at fixed regularization; both bounds are certified
/// (feasible primal plan / feasible dual pair).
EntropicResult w1_entropic(const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& nu, double reg,
                           const EntropicOptions& opts = {});

/// Core Sinkhorn on an explicit cost matrix; warm_f/warm_g, when given,
/// seed the potentials and receive the converged ones back.
EntropicResult w1_entropic_with_cost(const Eigen::ArrayXd& a,
                                     const Eigen::ArrayXd& b,
                                     const Eigen::MatrixXd& cost, double reg,
                                     const EntropicOptions& opts = {},
                                     Eigen::ArrayXd* warm_f = nullptr,
                                     Eigen::ArrayXd* warm_g = nullptr);

/// Annealed version: reg halves from max(cost)/8 until the certified gap is
/// below rel_gap_target * upper or reg reaches the 1e-4 floor.
EntropicResult w1_entropic_auto(const EmpiricalMeasure& mu,
                                const EmpiricalMeasure& nu,
                                double rel_gap_target = 0.05,
                                const EntropicOptions& opts = {});

/// Kantorovich lower bound from the 1-Lipschitz witness family
/// cos(2 pi k x + phase)/(2 pi k): equals
/// |rho_hat_k(mu) - rho_hat_k(nu)| / (2 pi k) at the optimal phase.
double w1_dual_lower_bound(const EmpiricalMeasure& mu,
                           const EmpiricalMeasure& nu, int k);

/// Same bound against the homogeneous background f_inf x Uniform (whose mode
/// vanishes): |rho_hat_k(mu)| / (2 pi k).
double w1_dual_lower_bound_vs_uniform(const EmpiricalMeasure& mu, int k);

/// Phase-space density sampled on a regular grid, for quantization.
struct GridDensity {
  Eigen::ArrayXXd values;  // n_x rows, n_v cols, nonnegative
  double v_max = 1.0;      // v range [-v_max, v_max]; x range [-1/2, 1/2)

  int nx() const { return static_cast<int>(values.rows()); }
  int nv() const { return static_cast<int>(values.cols()); }
};

struct QuantizeResult {
  EmpiricalMeasure measure;
  double cell_diameter = 0.0;  // quantization error bound
  double dropped_mass = 0.0;   // mass outside the kept cells (renormalized)
};

/// M weighted points at the centers of the M most massive cells.
QuantizeResult quantize(const GridDensity& density, int target_size);

/// f_app(0) = f_inf + eps * g1 on a grid (the order-1 initial density).
GridDensity fapp0_density(const Equilibrium& eq, const Eigenmode& mode,
                          double epsilon, int n_x, int n_v);

struct SamplingRateRow {
  double m = 0;
  double mean_w1 = 0.0;
  double stderr_w1 = 0.0;
  double mean_gap = 0.0;
};

struct SamplingRateResult {
  std::vector<SamplingRateRow> rows;
  double slope = 0.0;  // log-log fit of mean W1 against m
  double intercept = 0.0;
};

struct SamplingRateOptions {
  int ref_nx = 192;
  int ref_nv = 256;
  int ref_size = 4096;
  double rel_gap_target = 0.05;
  int workers = 2;
};

/// Mean W1 between m-point samples of f_app(0) and a fixed fine quantization
/// of it, over `trials` draws per m; reports the fitted log-log slope.
SamplingRateResult sampling_rate_experiment(const Equilibrium& eq,
                                            const Eigenmode& mode,
                                            double epsilon,
                                            const std::vector<int>& m_list,
                                            int trials, uint64_t seed,
                                            const SamplingRateOptions& opts = {});

/// JSONL measure files: one {"x":..,"v":..,"w":..} object per line.
EmpiricalMeasure load_measure(const std::string& path);
void save_measure(const std::string& path, const EmpiricalMeasure& m);

}  // namespace mfl
