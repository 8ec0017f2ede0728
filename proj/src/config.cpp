#include "mfl/config.hpp"

#include <fstream>

namespace mfl {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  return nlohmann::json::parse(in);
}

Equilibrium equilibrium_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "maxwellian")
    return Equilibrium::maxwellian(j.at("theta").get<double>());
  if (kind == "two_stream")
    return Equilibrium::two_stream(j.at("theta").get<double>(),
                                   j.at("v0").get<double>());
  if (kind == "tabulated")
    return Equilibrium::from_file(j.at("file").get<std::string>());
  throw std::invalid_argument("unknown equilibrium kind: " + kind);
}

Potential potential_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cosine")
    return Potential::cosine(j.at("amplitude").get<double>());
  if (kind == "coulomb1d") return Potential::coulomb1d();
  if (kind == "fourier_series") {
    std::vector<std::pair<int, double>> coeffs;
    for (const auto& kv : j.at("coefficients"))
      coeffs.emplace_back(kv.at(0).get<int>(), kv.at(1).get<double>());
    return Potential::fourier_series(std::move(coeffs));
  }
  throw std::invalid_argument("unknown potential kind: " + kind);
}

namespace {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.equilibrium = j.at("equilibrium");
  c.potential = j.at("potential");
  maybe(j, "alpha", c.alpha);
  maybe(j, "K", c.K);
  maybe(j, "N_list", c.N_list);
  maybe(j, "seeds", c.seeds);
  maybe(j, "epsilon0", c.epsilon0);
  maybe(j, "delta", c.delta);
  maybe(j, "dt", c.dt);
  maybe(j, "t_max", c.t_max);
  maybe(j, "t_margin", c.t_margin);
  maybe(j, "output_dt", c.output_dt);
  maybe(j, "checkpoint_times", c.checkpoint_times);
  maybe(j, "subsample", c.subsample);
  maybe(j, "workers", c.workers);
  maybe(j, "control_seeds", c.control_seeds);
  maybe(j, "stability_rate_c2", c.stability_rate_c2);
  maybe(j, "rate_s", c.rate_s);
  maybe(j, "outdir", c.outdir);
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"equilibrium", equilibrium},
          {"potential", potential},
          {"alpha", alpha},
          {"K", K},
          {"N_list", N_list},
          {"seeds", seeds},
          {"epsilon0", epsilon0},
          {"delta", delta},
          {"dt", dt},
          {"t_max", t_max},
          {"t_margin", t_margin},
          {"output_dt", output_dt},
          {"checkpoint_times", checkpoint_times},
          {"subsample", subsample},
          {"workers", workers},
          {"control_seeds", control_seeds},
          {"stability_rate_c2", stability_rate_c2},
          {"rate_s", rate_s},
          {"outdir", outdir}};
}

DobrushinConfig DobrushinConfig::from_json(const nlohmann::json& j) {
  DobrushinConfig c;
  c.equilibrium = j.at("equilibrium");
  c.potential = j.at("potential");
  maybe(j, "N", c.N);
  maybe(j, "pairs", c.pairs);
  maybe(j, "eta", c.eta);
  maybe(j, "dt", c.dt);
  maybe(j, "t_end", c.t_end);
  maybe(j, "checkpoint_times", c.checkpoint_times);
  maybe(j, "tolerance", c.tolerance);
  maybe(j, "seed", c.seed);
  maybe(j, "outdir", c.outdir);
  return c;
}

nlohmann::json DobrushinConfig::to_json() const {
  return {{"equilibrium", equilibrium}, {"potential", potential},
          {"N", N},                     {"pairs", pairs},
          {"eta", eta},                 {"dt", dt},
          {"t_end", t_end},             {"checkpoint_times", checkpoint_times},
          {"tolerance", tolerance},     {"seed", seed},
          {"outdir", outdir}};
}

SamplingRateConfig SamplingRateConfig::from_json(const nlohmann::json& j) {
  SamplingRateConfig c;
  c.equilibrium = j.at("equilibrium");
  c.potential = j.at("potential");
  maybe(j, "epsilon", c.epsilon);
  maybe(j, "m_list", c.m_list);
  maybe(j, "trials", c.trials);
  maybe(j, "seed", c.seed);
  maybe(j, "ref_nx", c.ref_nx);
  maybe(j, "ref_nv", c.ref_nv);
  maybe(j, "ref_size", c.ref_size);
  maybe(j, "rel_gap_target", c.rel_gap_target);
  maybe(j, "workers", c.workers);
  maybe(j, "outdir", c.outdir);
  return c;
}

nlohmann::json SamplingRateConfig::to_json() const {
  return {{"equilibrium", equilibrium},
          {"potential", potential},
          {"epsilon", epsilon},
          {"m_list", m_list},
          {"trials", trials},
          {"seed", seed},
          {"ref_nx", ref_nx},
          {"ref_nv", ref_nv},
          {"ref_size", ref_size},
          {"rel_gap_target", rel_gap_target},
          {"workers", workers},
          {"outdir", outdir}};
}

}  // namespace mfl
