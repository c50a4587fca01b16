#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ddztd/aimg.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/policies.hpp"
#include "ddztd/rng.hpp"

namespace ddztd {

// One sampled environment: a fully resolved game spec plus its weight under
// the empirical scenario distribution.
struct Scenario {
  std::string id;
  AimgSpec spec;
  double weight = 1.0;
};

// Meta threshold and the one-step adaptation gain.
struct MetaPolicy {
  double tau_meta = 0.5;
  double gamma = 0.1;

  void validate() const {
    if (tau_meta < 0.0 || tau_meta > 1.0)
      throw Error("meta threshold outside [0,1]");
    if (gamma < 0.0) throw Error("adaptation step must be nonnegative");
  }
};

// Exact V_D(tau) for a scenario under the uniform attacker model and the
// recursive Bayes engine.
inline Objective scenario_threshold_objective(const Scenario& scenario) {
  const Scenario* sc = &scenario;
  return [sc](const std::vector<double>& x) {
    AttackerPolicy att = uniform_attacker(sc->spec);
    TrustEngine engine = make_bte_engine(sc->spec, att.density);
    ThresholdPolicy p{{std::clamp(x.at(0), 0.0, 1.0)}};
    return exact_defender_value(sc->spec,
                                make_threshold_defender(sc->spec, p),
                                att.density, engine);
  };
}

// One projected gradient step on an arbitrary scalar objective:
// clamp(tau - gamma * g, 0, 1) with g estimated by averaged SPSA draws.
inline double adapt_with_objective(const MetaPolicy& meta, const Objective& f,
                                   std::size_t grad_draws, double c,
                                   Rng& rng) {
  meta.validate();
  if (grad_draws < 1) grad_draws = 1;
  double g = 0.0;
  for (std::size_t d = 0; d < grad_draws; ++d)
    g += spsa_gradient(f, {meta.tau_meta}, c, rng)[0] / double(grad_draws);
  return std::clamp(meta.tau_meta - meta.gamma * g, 0.0, 1.0);
}

struct AdaptConfig {
  std::size_t grad_draws = 2;
  double perturbation = 0.15;
};

inline ThresholdPolicy adapt(const MetaPolicy& meta, const Scenario& scenario,
                             const AdaptConfig& cfg, Rng& rng) {
  Objective f = scenario_threshold_objective(scenario);
  return ThresholdPolicy{
      {adapt_with_objective(meta, f, cfg.grad_draws, cfg.perturbation, rng)}};
}

// ----------------------------------------------------------------------
// Meta training: SPSA over (tau_meta, gamma) of the weighted post-adaptation
// value.  Adaptation noise is frozen per (seed, scenario) substream so the
// meta objective is deterministic and common random numbers carry across the
// two-sided meta perturbations.

struct MetaTrainConfig {
  std::size_t iterations = 40;
  double a = 0.4;
  double big_a = 5.0;
  double c = 0.1;
  double gamma_max = 1.0;
  AdaptConfig adapt;
  std::uint64_t seed = 0;
};

struct MetaTrainResult {
  MetaPolicy policy;
  std::vector<double> curve;  // meta objective after each iteration
};

// Stable scenario-id hash, so adaptation substreams follow the scenario
// identity rather than its position in the set.
inline std::uint64_t scenario_stream(const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline double meta_objective(const std::vector<Scenario>& scenarios,
                             double tau_meta, double gamma,
                             const AdaptConfig& acfg, std::uint64_t seed) {
  if (scenarios.empty()) throw EmptyScenarioSet("no scenarios");
  double total_w = 0.0;
  for (const Scenario& sc : scenarios) total_w += sc.weight;
  if (total_w <= 0.0) throw EmptyScenarioSet("scenario weights sum to zero");

  MetaPolicy meta{std::clamp(tau_meta, 0.0, 1.0), std::max(gamma, 0.0)};
  double j = 0.0;
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    Rng rng(seed, scenario_stream(scenarios[k].id));
    Objective f = scenario_threshold_objective(scenarios[k]);
    double tau =
        adapt_with_objective(meta, f, acfg.grad_draws, acfg.perturbation, rng);
    j += scenarios[k].weight / total_w * f({tau});
  }
  return j;
}

inline MetaTrainResult train_meta(const std::vector<Scenario>& scenarios,
                                  const MetaTrainConfig& cfg) {
  if (scenarios.empty()) throw EmptyScenarioSet("no scenarios to train on");
  Objective f = [&scenarios, &cfg](const std::vector<double>& x) {
    return meta_objective(scenarios, x[0], x[1], cfg.adapt, cfg.seed);
  };
  SpsaConfig scfg;
  scfg.iterations = cfg.iterations;
  scfg.a = cfg.a;
  scfg.big_a = cfg.big_a;
  scfg.c = cfg.c;
  scfg.seed = cfg.seed;
  SpsaResult r = spsa_minimize(f, {0.5, cfg.gamma_max / 2.0}, {0.0, 0.0},
                               {1.0, cfg.gamma_max}, scfg);
  return {MetaPolicy{r.x[0], r.x[1]}, std::move(r.value_curve)};
}

// ----------------------------------------------------------------------
// Generalization report on held-out scenarios.

struct GeneralizationRow {
  std::string scenario_id;
  double v_adapted = 0.0;
  double v_baseline = 0.0;  // fixed threshold, no adaptation
  double v_scratch = 0.0;   // threshold trained from scratch, equal budget
};

inline std::vector<GeneralizationRow> evaluate_generalization(
    const MetaPolicy& meta, const std::vector<Scenario>& held_out,
    double baseline_threshold, const AdaptConfig& acfg,
    const SpsaConfig& scratch_cfg, std::uint64_t seed) {
  std::vector<GeneralizationRow> rows;
  for (std::size_t k = 0; k < held_out.size(); ++k) {
    const Scenario& sc = held_out[k];
    Objective f = scenario_threshold_objective(sc);
    Rng rng(seed, scenario_stream(sc.id) ^ 1);
    GeneralizationRow row;
    row.scenario_id = sc.id;
    row.v_adapted = f({adapt_with_objective(meta, f, acfg.grad_draws,
                                            acfg.perturbation, rng)});
    row.v_baseline = f({baseline_threshold});
    AttackerPolicy att = uniform_attacker(sc.spec);
    TrustEngine engine = make_bte_engine(sc.spec, att.density);
    auto scratch = train_threshold_spsa(sc.spec, att, engine, scratch_cfg);
    row.v_scratch = f({scratch.policy.thresholds[0]});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ddztd
