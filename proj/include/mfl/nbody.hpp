#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfl/equilibrium.hpp"
#include "mfl/potential.hpp"
#include "mfl/spectral.hpp"

namespace mfl {

/// N particles on the torus-cylinder: positions wrapped to [-1/2, 1/2).
struct ParticleState {
  Eigen::ArrayXd x;
  Eigen::ArrayXd v;
  double t = 0.0;
  uint64_t seed = 0;

  Eigen::Index size() const { return x.size(); }
  double mean_velocity() const { return v.mean(); }
};

struct SampleStats {
  double envelope = 0.0;         // B = sup |g1| / f_inf
  double acceptance_rate = 0.0;  // measured; expectation is 1/(1 + eps B)
  uint64_t proposals = 0;
};

/// N i.i.d. draws from f_inf(v) + eps * g1(x, v) by rejection against the
/// proposal f_inf(v) x Uniform(torus). Deterministic given the seed, with an
/// independent counter-based stream per particle. Throws when eps * B >= 1
/// (the target may be negative and the rejection envelope breaks).
ParticleState sample_initial(const Equilibrium& eq, const Eigenmode& mode,
                             double epsilon, Eigen::Index n, uint64_t seed,
                             SampleStats* stats = nullptr);

/// Draws from f_inf x Uniform (the epsilon = 0 limit of sample_initial).
ParticleState sample_equilibrium(const Equilibrium& eq, Eigen::Index n,
                                 uint64_t seed);

/// Exact O(N^2) pairwise forces, self-interaction excluded:
/// F_i = (1/N) sum_{j != i} force(wrap(x_i - x_j)).
Eigen::ArrayXd forces_direct(const ParticleState& s, const Potential& pot);

/// O(N log N) Coulomb forces by rank counting: on the unit torus the sign
/// part of the kernel reduces to (#below - #above)/(2N) after sorting, and
/// the linear part to mean(x) - x_i. Coincident particles share rank
/// symmetrically (sign(0) = 0). Matches forces_direct to ~1e-15.
Eigen::ArrayXd forces_coulomb_fast(const ParticleState& s);

/// O(N * modes) mean-field forces for band-limited potentials (cosine or
/// fourier_series) through the empirical modes.
Eigen::ArrayXd forces_mode_sum(const ParticleState& s, const Potential& pot);

enum class ForceModel { direct, coulomb_fast, mode_sum, automatic };

Eigen::ArrayXd forces(const ParticleState& s, const Potential& pot,
                      ForceModel model = ForceModel::automatic);

/// Velocity-Verlet step (kick-drift-kick) with torus wrap-around.
void step(ParticleState& s, const Potential& pot, double dt,
          ForceModel model = ForceModel::automatic);

/// Empirical Fourier mode (1/N) sum_j exp(-2 pi i k x_j).
std::complex<double> empirical_mode(const ParticleState& s, int k);

/// Total energy (1/2N) sum v^2 + (1/2N^2) sum_ij phi(x_i - x_j), including
/// the constant i = j diagonal. O(N log N) for Coulomb, O(N * modes) for
/// band-limited kinds.
double energy(const ParticleState& s, const Potential& pot);

struct ObserverRecord {
  double t = 0.0;
  std::complex<double> mode;  // empirical mode at the observed wavenumber
  double energy = 0.0;
  double momentum = 0.0;
};

struct RunOptions {
  double t_end = 1.0;
  double dt = 1e-3;
  double output_dt = 0.01;
  int mode_k = 1;  // wavenumber recorded by the default observer
  ForceModel force = ForceModel::automatic;
  bool record_energy = true;
  /// Extra observer invoked at every output time (may be empty).
  std::function<void(const ParticleState&)> observer;
};

std::vector<ObserverRecord> run(ParticleState& s, const Potential& pot,
                                const RunOptions& opts);

/// Snapshot container: JSON header + raw little-endian arrays.
void save_snapshot(const std::string& path, const ParticleState& s,
                   const std::string& metadata_json = "{}");
ParticleState load_snapshot(const std::string& path,
                            std::string* metadata_json = nullptr);

}  // namespace mfl
