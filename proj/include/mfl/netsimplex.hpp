#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace mfl {

struct NetSimplexError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetSimplexResult {
  double cost = 0.0;
  /// Basic cells with positive mass: (source, sink, mass).
  std::vector<std::tuple<int, int, double>> plan;
  /// Dual potentials with u_i + v_j <= c_ij everywhere (= on the support).
  Eigen::VectorXd u, v;
  /// cost - (a.u + b.v); certifies optimality when ~0.
  double dual_gap = 0.0;
  int pivots = 0;
};

/// Dense transportation problem min sum x_ij c_ij over couplings of
/// (supply, demand), solved by the bipartite network simplex with block
/// pricing. Degeneracy is broken by a deterministic random perturbation of
/// the supplies; the returned flows are re-solved on the optimal tree with
/// the exact marginals, and the duals certify optimality through `dual_gap`.
NetSimplexResult transport_network_simplex(const Eigen::VectorXd& supply,
                                           const Eigen::VectorXd& demand,
                                           const Eigen::MatrixXd& cost);

}  // namespace mfl
