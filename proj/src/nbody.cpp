#include "mfl/nbody.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mfl/rng.hpp"
#include "mfl/torus.hpp"

namespace mfl {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

ParticleState sample_equilibrium(const Equilibrium& eq, Eigen::Index n,
                                 uint64_t seed) {
  ParticleState s;
  s.x.resize(n);
  s.v.resize(n);
  s.seed = seed;
  const double sigma = std::sqrt(eq.theta());
  const double v0 = eq.stream_offset();
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<uint64_t>(i));
    s.x[i] = rng.uniform(-0.5, 0.5);
    switch (eq.kind()) {
      case EquilibriumKind::maxwellian:
        s.v[i] = sigma * rng.normal();
        break;
      case EquilibriumKind::two_stream:
        s.v[i] = sigma * rng.normal() + (rng.uniform() < 0.5 ? v0 : -v0);
        break;
      default: {
        // inverse-CDF on a dense grid for tabulated profiles
        throw std::runtime_error(
            "sample_equilibrium: tabulated sampling not supported");
      }
    }
  }
  return s;
}

ParticleState sample_initial(const Equilibrium& eq, const Eigenmode& mode,
                             double epsilon, Eigen::Index n, uint64_t seed,
                             SampleStats* stats) {
  const double B = mode.envelope_ratio();
  if (epsilon * B >= 1.0)
    throw std::runtime_error(
        "sample_initial: eps * sup|g1|/f_inf >= 1, rejection envelope fails");
  if (epsilon == 0.0) {
    if (stats) *stats = {B, 1.0, static_cast<uint64_t>(n)};
    return sample_equilibrium(eq, n, seed);
  }

  ParticleState s;
  s.x.resize(n);
  s.v.resize(n);
  s.seed = seed;
  const double sigma = std::sqrt(eq.theta());
  const double v0 = eq.stream_offset();
  const double norm = 1.0 / (1.0 + epsilon * B);
  uint64_t proposals = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<uint64_t>(i));
    for (;;) {
      ++proposals;
      double v;
      switch (eq.kind()) {
        case EquilibriumKind::maxwellian:
          v = sigma * rng.normal();
          break;
        case EquilibriumKind::two_stream:
          v = sigma * rng.normal() + (rng.uniform() < 0.5 ? v0 : -v0);
          break;
        default:
          throw std::runtime_error(
              "sample_initial: tabulated sampling not supported");
      }
      const double x = rng.uniform(-0.5, 0.5);
      const double ratio =
          (1.0 + epsilon * mode.value(x, v) / eq.value(v)) * norm;
      if (rng.uniform() < ratio) {
        s.x[i] = x;
        s.v[i] = v;
        break;
      }
    }
  }
  if (stats)
    *stats = {B, static_cast<double>(n) / static_cast<double>(proposals),
              proposals};
  return s;
}

Eigen::ArrayXd forces_direct(const ParticleState& s, const Potential& pot) {
  const auto n = s.size();
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      acc += pot.force(s.x[i] - s.x[j]);
    }
    f[i] = acc / static_cast<double>(n);
  }
  return f;
}

Eigen::ArrayXd forces_coulomb_fast(const ParticleState& s) {
  const auto n = s.size();
  const double dn = static_cast<double>(n);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return s.x[a] < s.x[b]; });

  Eigen::ArrayXd f(n);
  const double mean = s.x.mean();
  // walk sorted positions; ties share the same below/above counts
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && s.x[order[j + 1]] == s.x[order[i]]) ++j;
    const double below = static_cast<double>(i);
    const double above = static_cast<double>(n - 1 - j);
    const double sign_part = (below - above) / (2.0 * dn);
    for (Eigen::Index r = i; r <= j; ++r) {
      const Eigen::Index p = order[r];
      f[p] = sign_part - (s.x[p] - mean);
    }
    i = j + 1;
  }
  return f;
}

Eigen::ArrayXd forces_mode_sum(const ParticleState& s, const Potential& pot) {
  if (pot.kind() == PotentialKind::coulomb1d)
    throw std::invalid_argument("forces_mode_sum: use forces_coulomb_fast");
  const auto n = s.size();
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(n);
  for (int k = 1; k <= pot.max_mode(); ++k) {
    const double ck = pot.fourier_coefficient(k);
    if (ck == 0.0) continue;
    const Eigen::ArrayXd sk = (kTwoPi * k * s.x).sin();
    const Eigen::ArrayXd csk = (kTwoPi * k * s.x).cos();
    const double C = csk.mean();
    const double S = sk.mean();
    // (1/N) sum_j sin(xi (x_i - x_j)) = sin(xi x_i) C - cos(xi x_i) S;
    // the j = i term vanishes on its own, so no self-force correction.
    f += 2.0 * kTwoPi * k * ck * (sk * C - csk * S);
  }
  return f;
}

Eigen::ArrayXd forces(const ParticleState& s, const Potential& pot,
                      ForceModel model) {
  if (model == ForceModel::automatic)
    model = pot.kind() == PotentialKind::coulomb1d ? ForceModel::coulomb_fast
                                                   : ForceModel::mode_sum;
  switch (model) {
    case ForceModel::direct:
      return forces_direct(s, pot);
    case ForceModel::coulomb_fast:
      return forces_coulomb_fast(s);
    default:
      return forces_mode_sum(s, pot);
  }
}

void step(ParticleState& s, const Potential& pot, double dt, ForceModel model) {
  const Eigen::ArrayXd f0 = forces(s, pot, model);
  s.v += 0.5 * dt * f0;
  s.x += dt * s.v;
  s.x = s.x.unaryExpr([](double x) { return wrap(x); });
  const Eigen::ArrayXd f1 = forces(s, pot, model);
  s.v += 0.5 * dt * f1;
  s.t += dt;
}

std::complex<double> empirical_mode(const ParticleState& s, int k) {
  if (k == 0) return {1.0, 0.0};
  const Eigen::ArrayXd arg = -kTwoPi * k * s.x;
  return {arg.cos().mean(), arg.sin().mean()};
}

double energy(const ParticleState& s, const Potential& pot) {
  const auto n = s.size();
  const double dn = static_cast<double>(n);
  const double kinetic = 0.5 * s.v.square().sum() / dn;

  double potential = 0.0;
  switch (pot.kind()) {
    case PotentialKind::coulomb1d: {
      // sum_ij phi(x_i - x_j) with phi = (w^2 - |w|)/2 + 1/12 reduces to
      //   N^2/12 + sum_{i<j} (|w_ij|^2 - |w_ij|),
      // and on sorted positions |w_ij| = min(d, 1 - d) for the gap d, so both
      // pair sums follow from prefix sums with a two-pointer split at d = 1/2.
      Eigen::ArrayXd xs = s.x;
      std::sort(xs.data(), xs.data() + n);
      Eigen::ArrayXd pref(n + 1), prefsq(n + 1);
      pref[0] = prefsq[0] = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        pref[i + 1] = pref[i] + xs[i];
        prefsq[i + 1] = prefsq[i] + xs[i] * xs[i];
      }
      double s1 = 0.0, s2 = 0.0;  // sums of |w| and |w|^2 over pairs i < j
      Eigen::Index lo = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        while (xs[j] - xs[lo] > 0.5) ++lo;
        const double cn = static_cast<double>(j - lo);  // near: d <= 1/2
        s1 += cn * xs[j] - (pref[j] - pref[lo]);
        s2 += cn * xs[j] * xs[j] - 2.0 * xs[j] * (pref[j] - pref[lo]) +
              (prefsq[j] - prefsq[lo]);
        const double cf = static_cast<double>(lo);      // far: |w| = 1 - d
        const double c = 1.0 - xs[j];
        s1 += cf * c + pref[lo];
        s2 += cf * c * c + 2.0 * c * pref[lo] + prefsq[lo];
      }
      potential = (dn * dn / 12.0 + s2 - s1) / (2.0 * dn * dn);
      break;
    }
    default: {
      // band-limited: sum_ij phi = sum_k phi_hat(k) |N m_k|^2 over modes
      double acc = pot.fourier_coefficient(0) * dn * dn;
      for (int k = 1; k <= pot.max_mode(); ++k) {
        const double ck = pot.fourier_coefficient(k);
        if (ck == 0.0) continue;
        const std::complex<double> m = empirical_mode(s, k);
        acc += 2.0 * ck * std::norm(m) * dn * dn;
      }
      potential = acc / (2.0 * dn * dn);
      break;
    }
  }
  return kinetic + potential;
}

std::vector<ObserverRecord> run(ParticleState& s, const Potential& pot,
                                const RunOptions& opts) {
  const int n_steps = static_cast<int>(std::round(opts.t_end / opts.dt));
  const int rec_every =
      std::max(1, static_cast<int>(std::round(opts.output_dt / opts.dt)));
  std::vector<ObserverRecord> records;
  auto record = [&]() {
    ObserverRecord r;
    r.t = s.t;
    r.mode = empirical_mode(s, opts.mode_k);
    r.energy = opts.record_energy ? energy(s, pot) : 0.0;
    r.momentum = s.mean_velocity();
    records.push_back(r);
    if (opts.observer) opts.observer(s);
  };
  record();
  for (int n = 0; n < n_steps; ++n) {
    step(s, pot, opts.dt, opts.force);
    if ((n + 1) % rec_every == 0 || n + 1 == n_steps) record();
  }
  return records;
}

namespace {
constexpr char kSnapshotMagic[9] = "MFLSNAP1";
}

void save_snapshot(const std::string& path, const ParticleState& s,
                   const std::string& metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write snapshot: " + path);
  out.write(kSnapshotMagic, 8);
  const uint64_t n = static_cast<uint64_t>(s.size());
  const uint64_t meta_len = metadata_json.size();
  const uint64_t seed = s.seed;
  const double t = s.t;
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&t), 8);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  out.write(reinterpret_cast<const char*>(&meta_len), 8);
  out.write(metadata_json.data(), static_cast<std::streamsize>(meta_len));
  out.write(reinterpret_cast<const char*>(s.x.data()),
            static_cast<std::streamsize>(8 * n));
  out.write(reinterpret_cast<const char*>(s.v.data()),
            static_cast<std::streamsize>(8 * n));
}

ParticleState load_snapshot(const std::string& path,
                            std::string* metadata_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read snapshot: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != std::string(kSnapshotMagic, 8))
    throw std::runtime_error("not a snapshot file: " + path);
  uint64_t n, seed, meta_len;
  double t;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&t), 8);
  in.read(reinterpret_cast<char*>(&seed), 8);
  in.read(reinterpret_cast<char*>(&meta_len), 8);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  ParticleState s;
  s.t = t;
  s.seed = seed;
  s.x.resize(static_cast<Eigen::Index>(n));
  s.v.resize(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(s.x.data()),
          static_cast<std::streamsize>(8 * n));
  in.read(reinterpret_cast<char*>(s.v.data()),
          static_cast<std::streamsize>(8 * n));
  if (!in) throw std::runtime_error("truncated snapshot: " + path);
  if (metadata_json) *metadata_json = meta;
  return s;
}

}  // namespace mfl
