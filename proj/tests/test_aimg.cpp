#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ddztd/aimg.hpp"

using namespace ddztd;

namespace {

AimgSpec chain_spec(int horizon = 3) {
  AimgSpec spec;
  spec.graph = std::make_shared<NetworkGraph>(
      build_graph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}, "a", "c"));
  spec.horizon = horizon;
  spec.pass_prob = 0.9;
  spec.false_alarm_rate = 0.1;
  spec.detection_rate = 0.9;
  spec.defense_budget = 2;
  spec.validate();
  return spec;
}

}  // namespace

TEST_CASE("attacker action set is the frontier") {
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  ZtdState s = initial_state(g);
  s.visited[g.node_index("b")] = 1;
  auto acts = attacker_action_set(spec, s);
  REQUIRE(acts.size() == 1);
  CHECK(g.node_id(acts[0].tail) == "b");
  CHECK(g.node_id(acts[0].head) == "c");

  ZtdState sat = s;
  sat.visited.assign(g.node_count(), 1);
  CHECK(attacker_action_set(spec, sat).empty());
}

TEST_CASE("attacker action set equals a direct filter over all edges") {
  Rng rng(3, 0);
  for (int trial = 0; trial < 30; ++trial) {
    AimgSpec spec;
    spec.graph =
        std::make_shared<NetworkGraph>(random_dag(7, 0.4, rng));
    spec.validate();
    ZtdState s = initial_state(*spec.graph);
    for (int m = 0; m < 3; ++m) {
      auto f = attacker_action_set(spec, s);
      if (f.empty()) break;
      s = apply_move(*spec.graph, s, f[rng.next_index(f.size())], true);
    }
    std::vector<Edge> oracle;
    for (const Edge& e : spec.graph->edges())
      if (s.is_visited(e.tail) && !s.is_visited(e.head)) oracle.push_back(e);
    CHECK(attacker_action_set(spec, s) == oracle);
  }
}

TEST_CASE("defender action set enumerates budget-capped subsets") {
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  ZtdState s = initial_state(g);  // E^t = {(a,b)}
  auto acts = defender_action_set(spec, s, 1);
  REQUIRE(acts.size() == 2);
  CHECK(acts[0].empty());
  CHECK(acts[1].size() == 1);

  ZtdState s2 = s;
  s2.visited[g.node_index("b")] = 1;  // E^t = {(a,b),(b,c)}
  CHECK(defender_action_set(spec, s2, 2).size() == 4);
}

TEST_CASE("budget-capped subset count matches the binomial sum") {
  // |E^t| = 5, budget 2 -> 1 + 5 + 10 subsets.
  AimgSpec spec;
  spec.graph = std::make_shared<NetworkGraph>(build_graph(
      {"h", "x1", "x2", "x3", "x4", "x5"},
      {{"h", "x1"}, {"h", "x2"}, {"h", "x3"}, {"h", "x4"}, {"h", "x5"}}, "h",
      "x5"));
  spec.validate();
  ZtdState s = initial_state(*spec.graph);
  auto acts = defender_action_set(spec, s, 2);
  CHECK(acts.size() == 16);

  spec.enumeration_limit = 10;
  CHECK_THROWS_AS(defender_action_set(spec, s, 2), CombinatorialBlowup);
}

TEST_CASE("unguarded edges always pass; guarded attacker is rejected") {
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  ZtdState s = initial_state(g);
  Edge ab{g.node_index("a"), g.node_index("b")};

  CHECK(pass_probability(spec, {}, ab, kTypeMalicious) == 1.0);
  CHECK(pass_probability(spec, {}, ab, kTypeLegit) == 1.0);
  CHECK(pass_probability(spec, {ab}, ab, kTypeMalicious) == 0.0);
  CHECK(pass_probability(spec, {ab}, ab, kTypeLegit) == doctest::Approx(0.9));

  Rng rng(1, 0);
  auto res = step(spec, s, {ab}, ab, kTypeMalicious, rng);
  CHECK(res.next_state.current == s.current);
  CHECK_FALSE(res.passed);
}

TEST_CASE("legit MFA pass frequency matches pass_prob") {
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  ZtdState s = initial_state(g);
  Edge ab{g.node_index("a"), g.node_index("b")};
  Rng rng(42, 7);
  const int n = 100000;
  int passes = 0;
  for (int i = 0; i < n; ++i)
    passes += step(spec, s, {ab}, ab, kTypeLegit, rng).passed;
  CHECK(std::fabs(double(passes) / n - 0.9) < 0.01);
}

TEST_CASE("IDS empirical frequencies converge to (alpha, beta)") {
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  ZtdState s = initial_state(g);
  Edge ab{g.node_index("a"), g.node_index("b")};
  Rng rng(42, 8);
  const int n = 100000;
  int alarms0 = 0, alarms1 = 0;
  for (int i = 0; i < n; ++i) {
    alarms0 += step(spec, s, {}, ab, kTypeLegit, rng).observation;
    alarms1 += step(spec, s, {}, ab, kTypeMalicious, rng).observation;
  }
  // 3 sigma binomial tolerance.
  double tol0 = 3.0 * std::sqrt(0.1 * 0.9 / n);
  double tol1 = 3.0 * std::sqrt(0.9 * 0.1 / n);
  CHECK(std::fabs(double(alarms0) / n - 0.1) < tol0);
  CHECK(std::fabs(double(alarms1) / n - 0.9) < tol1);
}

TEST_CASE("utilities match the piecewise formulas") {
  AimgSpec spec = chain_spec();
  spec.breach_cost = 100.0;
  spec.attacker_mfa_cost = 10.0;
  spec.target_reward = 50.0;
  const auto& g = *spec.graph;
  Edge ab{g.node_index("a"), g.node_index("b")};
  Edge bc{g.node_index("b"), g.node_index("c")};
  ZtdState s = initial_state(g);

  CHECK(defender_utility(spec, s, {}, ab, kTypeLegit) == 0.0);

  ZtdState at_target = s;
  at_target.visited.assign(g.node_count(), 1);
  at_target.current = g.target();
  CHECK(defender_utility(spec, at_target, {}, ab, kTypeMalicious) == 100.0);

  spec.mfa_cost[ab] = 1.5;
  spec.mfa_cost[bc] = 2.5;
  CHECK(defender_utility(spec, s, {ab, bc}, ab, kTypeLegit) ==
        doctest::Approx(4.0));

  CHECK(attacker_utility(spec, s, {}, ab, kTypeLegit) == 1.0);
  CHECK(attacker_utility(spec, s, {ab}, ab, kTypeMalicious) == 11.0);
  CHECK(attacker_utility(spec, at_target, {}, ab, kTypeMalicious) ==
        doctest::Approx(-49.0));
}

TEST_CASE("utilities agree bit-exactly with a literal transcription") {
  Rng rng(99, 0);
  AimgSpec spec = chain_spec();
  const auto& g = *spec.graph;
  for (int i = 0; i < 1000; ++i) {
    spec.breach_cost = rng.uniform(0, 200);
    spec.attacker_mfa_cost = rng.uniform(0, 20);
    spec.target_reward = rng.uniform(0, 100);
    spec.mfa_cost_default = rng.uniform(0, 5);
    spec.move_cost_default = rng.uniform(0, 3);

    ZtdState s = initial_state(g);
    if (rng.bernoulli(0.5)) s.visited[g.node_index("b")] = 1;
    if (rng.bernoulli(0.3)) s.visited[g.node_index("c")] = 1;
    auto frontier = attacker_action_set(spec, s);
    if (frontier.empty()) continue;
    Edge a_a = frontier[rng.next_index(frontier.size())];
    auto defenses = defender_action_set(spec, s, 2);
    DefenseAction a_d = defenses[rng.next_index(defenses.size())];
    int w = rng.bernoulli(0.5) ? kTypeMalicious : kTypeLegit;

    // Literal transcription of the two piecewise displays.
    double c_ad = 0.0;
    for (const Edge& e : a_d) c_ad += spec.edge_mfa_cost(e);
    double lt = s.is_visited(g.target()) ? 1.0 : 0.0;
    double ud = (w == 0) ? c_ad : c_ad + spec.breach_cost * lt;
    double in_ad = mfa_triggered(a_d, a_a) ? 1.0 : 0.0;
    double ua = (w == 0)
                    ? spec.edge_move_cost(a_a) - spec.target_reward * lt
                    : spec.edge_move_cost(a_a) +
                          spec.attacker_mfa_cost * in_ad -
                          spec.target_reward * lt;

    CHECK(defender_utility(spec, s, a_d, a_a, w) == ud);
    CHECK(attacker_utility(spec, s, a_d, a_a, w) == ua);
  }
}

TEST_CASE("step is deterministic given the seed") {
  AimgSpec spec = chain_spec();
  ZtdState s = initial_state(*spec.graph);
  Edge ab{spec.graph->node_index("a"), spec.graph->node_index("b")};
  Rng r1(5, 5), r2(5, 5);
  for (int i = 0; i < 20; ++i) {
    auto a = step(spec, s, {ab}, ab, kTypeLegit, r1);
    auto b = step(spec, s, {ab}, ab, kTypeLegit, r2);
    CHECK(a.next_state == b.next_state);
    CHECK(a.observation == b.observation);
  }
}

TEST_CASE("information-structure classification follows the definitions") {
  auto make_record = [](int t, std::array<bool, 5> def,
                        std::array<bool, 5> att) {
    InfoRecord r;
    r.time = t;
    for (int k = 0; k < 5; ++k) {
      r.visible[0][k] = def[k];
      r.visible[1][k] = att[k];
    }
    return r;
  };

  // Defender sees everything, attacker a strict subset, at every t.
  std::vector<InfoRecord> sup{
      make_record(1, {true, true, true, true, true},
                  {false, true, true, true, false}),
      make_record(2, {true, true, true, true, true},
                  {false, true, true, true, false})};
  auto c1 = classify_information_structure(sup, 0, 1);
  CHECK(c1.sidedness == Sidedness::kOneSidedSuperiorFirst);

  // Defender misses the type, attacker misses the observation.
  std::vector<InfoRecord> dbl{
      make_record(1, {false, true, true, true, true},
                  {true, true, true, true, false})};
  auto c2 = classify_information_structure(dbl, 0, 1);
  CHECK(c2.sidedness == Sidedness::kDoubleSided);

  // Lateral-movement defender stream: no type, everything else.
  std::vector<InfoRecord> lat{
      make_record(1, {false, true, true, true, true},
                  {true, true, true, true, false}),
      make_record(2, {false, true, true, true, true},
                  {true, true, true, true, false})};
  auto c3 = classify_information_structure(lat, 0, 1);
  CHECK(c3.incomplete_first);
  CHECK_FALSE(c3.incomplete_second);
  // The defender misses only the type, so its event view is perfect.
  CHECK_FALSE(c3.imperfect_first);
  CHECK(c3.imperfect_second);

  CHECK_THROWS_AS(classify_information_structure({}, 0, 1), EmptyHistory);
}
