#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ddztd/meta.hpp"

using namespace ddztd;

namespace {

AimgSpec chain_spec() {
  AimgSpec spec;
  // The side node keeps the frontier alive after the target falls, so the
  // per-step breach cost actually accrues.
  spec.graph = std::make_shared<NetworkGraph>(build_graph(
      {"a", "b", "c", "d"}, {{"a", "b"}, {"b", "c"}, {"a", "d"}}, "a", "c"));
  spec.horizon = 4;
  spec.pass_prob = 0.9;
  spec.false_alarm_rate = 0.1;
  spec.detection_rate = 0.9;
  spec.defense_budget = 1;
  spec.validate();
  return spec;
}

// Defense pays off: large breach cost, cheap MFA.
Scenario guard_scenario() {
  Scenario sc;
  sc.id = "guard-pays";
  sc.spec = chain_spec();
  sc.spec.breach_cost = 50.0;
  sc.spec.mfa_cost_default = 0.5;
  return sc;
}

// Defense is wasted cost: nothing to protect.
Scenario idle_scenario() {
  Scenario sc;
  sc.id = "guard-wastes";
  sc.spec = chain_spec();
  sc.spec.breach_cost = 0.0;
  sc.spec.mfa_cost_default = 2.0;
  return sc;
}

double grid_min(const Objective& f) {
  double best = 1e300;
  for (int i = 0; i <= 100; ++i) best = std::min(best, f({i * 0.01}));
  return best;
}

}  // namespace

TEST_CASE("zero adaptation step returns the meta threshold unchanged") {
  MetaPolicy meta{0.37, 0.0};
  Objective f = [](const std::vector<double>& x) {
    return (x[0] - 0.9) * (x[0] - 0.9);
  };
  Rng rng(1, 0);
  CHECK(adapt_with_objective(meta, f, 4, 0.1, rng) == 0.37);
}

TEST_CASE("adaptation projects onto the unit interval") {
  MetaPolicy meta{0.1, 10.0};
  Objective up = [](const std::vector<double>& x) { return 5.0 * x[0]; };
  Rng rng(2, 0);
  CHECK(adapt_with_objective(meta, up, 2, 0.1, rng) == 0.0);

  Objective down = [](const std::vector<double>& x) { return -5.0 * x[0]; };
  CHECK(adapt_with_objective(meta, down, 2, 0.1, rng) == 1.0);
}

TEST_CASE("quadratic surrogate adapts by the analytic gradient step") {
  // SPSA is exact on scalar quadratics, so the step is deterministic.
  double tau_star = 0.2;
  Objective f = [tau_star](const std::vector<double>& x) {
    return (x[0] - tau_star) * (x[0] - tau_star);
  };
  Rng rng(3, 0);
  for (double gamma : {0.25, 0.5}) {
    MetaPolicy meta{0.8, gamma};
    double expect = 0.8 - gamma * 2.0 * (0.8 - tau_star);
    CHECK(adapt_with_objective(meta, f, 1, 0.1, rng) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("meta policy validation") {
  CHECK_THROWS_AS((MetaPolicy{1.2, 0.1}.validate()), Error);
  CHECK_THROWS_AS((MetaPolicy{0.5, -0.1}.validate()), Error);
}

TEST_CASE("an empty scenario set is rejected") {
  MetaTrainConfig cfg;
  CHECK_THROWS_AS(train_meta({}, cfg), EmptyScenarioSet);
  CHECK_THROWS_AS(meta_objective({}, 0.5, 0.1, AdaptConfig{}, 0),
                  EmptyScenarioSet);
}

TEST_CASE("duplicated identical scenarios leave the meta objective unchanged") {
  Scenario sc = guard_scenario();
  AdaptConfig acfg;
  double single = meta_objective({sc}, 0.5, 0.3, acfg, 7);
  double doubled = meta_objective({sc, sc}, 0.5, 0.3, acfg, 7);
  CHECK(single == doubled);
}

TEST_CASE("adaptation beats the best fixed threshold on opposite scenarios") {
  std::vector<Scenario> family{guard_scenario(), idle_scenario()};
  Objective fa = scenario_threshold_objective(family[0]);
  Objective fb = scenario_threshold_objective(family[1]);

  // Grid oracles: best single fixed threshold vs per-scenario ideal.
  double best_fixed = 1e300;
  for (int i = 0; i <= 100; ++i) {
    double tau = i * 0.01;
    best_fixed = std::min(best_fixed, 0.5 * (fa({tau}) + fb({tau})));
  }
  double ideal = 0.5 * (grid_min(fa) + grid_min(fb));
  REQUIRE(ideal < best_fixed - 1e-6);  // the family is genuinely opposed
  double eps = 0.25 * (best_fixed - ideal);

  MetaTrainConfig cfg;
  cfg.iterations = 30;
  cfg.a = 0.5;
  cfg.c = 0.15;
  cfg.gamma_max = 2.0;
  cfg.seed = 1;
  auto trained = train_meta(family, cfg);
  double j = meta_objective(family, trained.policy.tau_meta,
                            trained.policy.gamma, cfg.adapt, cfg.seed);
  CHECK(j <= best_fixed - eps);

  double j_init = meta_objective(family, 0.5, cfg.gamma_max / 2.0, cfg.adapt,
                                 cfg.seed);
  CHECK(j <= j_init + 1e-9);
}

TEST_CASE("meta training is deterministic given the seed") {
  std::vector<Scenario> family{guard_scenario(), idle_scenario()};
  MetaTrainConfig cfg;
  cfg.iterations = 8;
  cfg.seed = 4;
  auto r1 = train_meta(family, cfg);
  auto r2 = train_meta(family, cfg);
  CHECK(r1.policy.tau_meta == r2.policy.tau_meta);
  CHECK(r1.policy.gamma == r2.policy.gamma);
  CHECK(r1.curve == r2.curve);
}

TEST_CASE("generalization report covers every held-out scenario") {
  std::vector<Scenario> held{guard_scenario(), idle_scenario()};
  MetaPolicy meta{0.5, 0.0};
  AdaptConfig acfg;
  SpsaConfig scratch;
  scratch.iterations = 10;
  scratch.seed = 2;
  auto rows = evaluate_generalization(meta, held, 0.5, acfg, scratch, 11);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    // gamma = 0 and matching baseline make the two columns coincide.
    CHECK(row.v_adapted == row.v_baseline);
    CHECK(std::isfinite(row.v_scratch));
  }
  CHECK(rows[0].scenario_id == "guard-pays");
  CHECK(rows[1].scenario_id == "guard-wastes");
}
