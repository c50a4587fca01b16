#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ddztd/dynkin.hpp"

using namespace ddztd;

namespace {

std::vector<std::vector<double>> random_stochastic(std::size_t n, Rng& rng) {
  std::vector<std::vector<double>> p(n, std::vector<double>(n));
  for (auto& row : p) {
    double sum = 0.0;
    for (double& v : row) {
      v = rng.uniform(0.05, 1.0);
      sum += v;
    }
    for (double& v : row) v /= sum;
    double resid = 1.0;
    for (std::size_t j = 0; j + 1 < n; ++j) resid -= row[j];
    row[n - 1] = resid;  // rows sum to one exactly
  }
  return p;
}

DynkinGameSpec random_spec(std::size_t n, int horizon, Rng& rng) {
  DynkinGameSpec spec;
  spec.transition = random_stochastic(n, rng);
  spec.horizon = horizon;
  spec.phi.resize(n);
  spec.zeta.resize(n);
  spec.psi.resize(n);
  spec.initial.assign(n, 0.0);
  spec.initial[0] = 1.0;
  return spec;
}

// psi <= zeta <= phi statewise.
DynkinGameSpec random_adc(std::size_t n, int horizon, Rng& rng) {
  DynkinGameSpec spec = random_spec(n, horizon, rng);
  for (std::size_t x = 0; x < n; ++x) {
    double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3),
           c = rng.uniform(-3, 3);
    double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    spec.psi[x] = lo;
    spec.zeta[x] = a + b + c - lo - hi;
    spec.phi[x] = hi;
  }
  spec.validate();
  return spec;
}

// psi <= zeta <= phi with the early-stop payoff dominating every
// continuation value (min phi >= max zeta), so stopping at once is a genuine
// saddle for both sides.
DynkinGameSpec random_adc_separated(std::size_t n, int horizon, Rng& rng) {
  DynkinGameSpec spec = random_spec(n, horizon, rng);
  for (std::size_t x = 0; x < n; ++x) {
    spec.psi[x] = rng.uniform(-3, -2);
    spec.zeta[x] = rng.uniform(-1, 1);
    spec.phi[x] = rng.uniform(2, 3);
  }
  spec.validate();
  return spec;
}

// phi <= zeta <= psi statewise.
DynkinGameSpec random_ddc(std::size_t n, int horizon, Rng& rng) {
  DynkinGameSpec spec = random_spec(n, horizon, rng);
  for (std::size_t x = 0; x < n; ++x) {
    double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3),
           c = rng.uniform(-3, 3);
    double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    spec.phi[x] = lo;
    spec.zeta[x] = a + b + c - lo - hi;
    spec.psi[x] = hi;
  }
  spec.validate();
  return spec;
}

StoppingRule random_rule(std::size_t n, int horizon, Rng& rng) {
  StoppingRule r = StoppingRule::never_before_horizon(n, horizon);
  for (int t = 0; t < horizon; ++t)
    for (std::size_t x = 0; x < n; ++x)
      r.stop[t][x] = rng.bernoulli(0.4) ? 1 : 0;
  return r;
}

// Forward path enumeration: walks every state sequence, finds each player's
// first stop along it, and accumulates the probability-weighted payoff.
double path_oracle(const DynkinGameSpec& spec, const StoppingRule& tau,
                   const StoppingRule& sigma, std::size_t x0) {
  double total = 0.0;
  std::vector<std::size_t> path{x0};
  auto rec = [&](auto&& self, double prob) -> void {
    int t = int(path.size()) - 1;
    std::size_t x = path.back();
    bool ts = tau.stop[t][x], ss = sigma.stop[t][x];
    if (ts || ss) {
      double h = ts && ss ? spec.zeta[x] : (ts ? spec.phi[x] : spec.psi[x]);
      total += prob * h;
      return;
    }
    for (std::size_t y = 0; y < spec.size(); ++y) {
      if (spec.transition[x][y] == 0.0) continue;
      path.push_back(y);
      self(self, prob * spec.transition[x][y]);
      path.pop_back();
    }
  };
  rec(rec, 1.0);
  return total;
}

// Exact best response against a fixed Markov rule, per subgame start, by
// dynamic programming over the deviator's stop/continue choice.
std::vector<std::vector<double>> best_response_table(
    const DynkinGameSpec& spec, const StoppingRule& fixed, bool fixed_is_tau) {
  std::size_t n = spec.size();
  int T = spec.horizon;
  std::vector<std::vector<double>> w(std::size_t(T) + 1,
                                     std::vector<double>(n, 0.0));
  w[T] = spec.zeta;
  for (int t = T - 1; t >= 0; --t) {
    std::vector<double> cont(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cont[i] += spec.transition[i][j] * w[t + 1][j];
    for (std::size_t x = 0; x < n; ++x) {
      if (fixed_is_tau) {  // sigma deviates, minimizing
        bool ts = fixed.stop[t][x];
        double stop_val = ts ? spec.zeta[x] : spec.psi[x];
        double wait_val = ts ? spec.phi[x] : cont[x];
        w[t][x] = std::min(stop_val, wait_val);
      } else {  // tau deviates, maximizing
        bool ss = fixed.stop[t][x];
        double stop_val = ss ? spec.zeta[x] : spec.phi[x];
        double wait_val = ss ? spec.psi[x] : cont[x];
        w[t][x] = std::max(stop_val, wait_val);
      }
    }
  }
  return w;
}

// sup over enumerated Markov tau rules of the sigma best response (and the
// mirrored inf-sup), at time 0 in state x0.
std::pair<double, double> enumerated_game_value(const DynkinGameSpec& spec,
                                                std::size_t x0) {
  std::size_t n = spec.size();
  int T = spec.horizon;
  std::size_t bits = n * std::size_t(T);
  REQUIRE(bits < 20);
  double sup_inf = -1e300, inf_sup = 1e300;
  for (std::uint64_t code = 0; code < (1ull << bits); ++code) {
    StoppingRule r = StoppingRule::never_before_horizon(n, T);
    for (int t = 0; t < T; ++t)
      for (std::size_t x = 0; x < n; ++x)
        r.stop[t][x] = (code >> (std::size_t(t) * n + x)) & 1u;
    sup_inf = std::max(sup_inf, best_response_table(spec, r, true)[0][x0]);
    inf_sup = std::min(inf_sup, best_response_table(spec, r, false)[0][x0]);
  }
  return {sup_inf, inf_sup};
}

}  // namespace

TEST_CASE("spec validation rejects malformed games") {
  Rng rng(1, 40);
  DynkinGameSpec spec = random_adc(2, 2, rng);
  spec.validate();

  DynkinGameSpec bad = spec;
  bad.transition[0][0] += 0.1;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = spec;
  bad.zeta[0] = std::max(bad.phi[0], bad.psi[0]) + 1.0;
  CHECK_THROWS_AS(bad.validate(), OrderingViolation);

  bad = spec;
  bad.horizon = -1;
  CHECK_THROWS_AS(bad.validate(), Error);

  bad = spec;
  bad.initial[0] = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero-step expectation is the identity") {
  Rng rng(2, 40);
  DynkinGameSpec spec = random_adc(3, 2, rng);
  std::vector<double> g{1.5, -2.0, 0.25};
  CHECK(semigroup_apply(spec, g, 0) == g);
}

TEST_CASE("expectation operator composes over time splits") {
  Rng rng(3, 40);
  DynkinGameSpec spec = random_adc(4, 2, rng);
  std::vector<double> g{0.3, -1.1, 2.2, 0.7};
  for (auto [s, t] : {std::pair{1, 2}, {2, 3}, {3, 1}}) {
    auto lhs = semigroup_apply(spec, g, s + t);
    auto rhs = semigroup_apply(spec, semigroup_apply(spec, g, t), s);
    for (std::size_t x = 0; x < spec.size(); ++x)
      CHECK(lhs[x] == doctest::Approx(rhs[x]).epsilon(1e-10));
  }
}

TEST_CASE("sampled expectation agrees with the exact operator within 4 sigma") {
  Rng spec_rng(4, 40);
  DynkinGameSpec spec = random_adc(3, 2, spec_rng);
  std::vector<double> g{2.0, -1.0, 0.5};
  auto exact = semigroup_apply(spec, g, 2);
  Rng rng(4, 41);
  auto mc = semigroup_apply_mc(spec, g, 2, 100000, rng);
  for (std::size_t x = 0; x < spec.size(); ++x) {
    REQUIRE(mc.std_error[x] > 0.0);
    CHECK(std::fabs(mc.mean[x] - exact[x]) < 4.0 * mc.std_error[x]);
  }
}

TEST_CASE("ordering classification") {
  Rng rng(5, 40);
  DynkinGameSpec spec = random_spec(2, 1, rng);

  spec.phi = {2, 2};
  spec.zeta = {1, 1};
  spec.psi = {0, 0};
  CHECK(classify_ordering(spec) == PayoffOrdering::Adc);

  spec.phi = {0, 0};
  spec.zeta = {1, 1};
  spec.psi = {2, 2};
  CHECK(classify_ordering(spec) == PayoffOrdering::DdcStandard);

  spec.phi = {2, 0};
  spec.zeta = {1, 1};
  spec.psi = {0, 2};
  CHECK(classify_ordering(spec) == PayoffOrdering::Mixed);

  // Ties resolve toward the first ordering.
  spec.phi = {1, 1};
  spec.zeta = {1, 1};
  spec.psi = {1, 1};
  CHECK(classify_ordering(spec) == PayoffOrdering::Adc);
}

TEST_CASE("zero horizon forces the simultaneous payoff") {
  Rng rng(6, 40);
  DynkinGameSpec adc = random_adc(3, 0, rng);
  auto sol = solve_adc(adc);
  CHECK(sol.values[0] == adc.zeta);

  DynkinGameSpec ddc = random_ddc(3, 0, rng);
  auto dsol = solve_ddc(ddc);
  CHECK(dsol.values[0] == ddc.zeta);
  CHECK(verify_dde(ddc, dsol.tau, dsol.sigma, 1e-12).passed);
}

TEST_CASE("constant equal payoffs stop immediately at that value") {
  Rng rng(7, 40);
  DynkinGameSpec spec = random_spec(3, 3, rng);
  spec.phi.assign(3, 1.75);
  spec.zeta.assign(3, 1.75);
  spec.psi.assign(3, 1.75);
  spec.validate();
  auto sol = solve_adc(spec);
  for (const auto& row : sol.values)
    for (double v : row) CHECK(v == 1.75);
  for (std::size_t x = 0; x < 3; ++x) {
    CHECK(sol.tau.stop[0][x] == 1);
    CHECK(sol.sigma.stop[0][x] == 1);
  }
}

TEST_CASE("solvers reject the wrong ordering") {
  Rng rng(8, 40);
  CHECK_THROWS_AS(solve_adc(random_ddc(3, 2, rng)), OrderingViolation);
  CHECK_THROWS_AS(solve_ddc(random_adc(3, 2, rng)), OrderingViolation);
}

TEST_CASE("the branch recursion matches a literal re-implementation") {
  Rng rng(9, 40);
  for (int trial = 0; trial < 20; ++trial) {
    DynkinGameSpec spec = random_adc(3, 3, rng);
    auto sol = solve_adc(spec);
    // Independent transcription via the expectation operator, one step at a
    // time from the horizon.
    std::vector<double> v = spec.zeta;
    for (int t = spec.horizon - 1; t >= 0; --t) {
      std::vector<double> cont = semigroup_apply(spec, v, 1);
      for (std::size_t x = 0; x < spec.size(); ++x)
        v[x] = spec.phi[x] < cont[x] ? cont[x] : spec.zeta[x];
      CHECK(sol.values[t] == v);
    }
    // Branch invariant: every value is either zeta or the continuation.
    for (int t = 0; t < spec.horizon; ++t) {
      std::vector<double> cont = semigroup_apply(spec, sol.values[t + 1], 1);
      for (std::size_t x = 0; x < spec.size(); ++x)
        CHECK((sol.values[t][x] == spec.zeta[x] ||
               sol.values[t][x] == cont[x]));
    }
  }
}

TEST_CASE("dominant early-stop instances form a verified saddle") {
  Rng rng(10, 40);
  for (int trial = 0; trial < 10; ++trial) {
    DynkinGameSpec spec = random_adc_separated(3, 3, rng);
    auto sol = solve_adc(spec);
    for (int t = 0; t <= spec.horizon; ++t) CHECK(sol.values[t] == spec.zeta);
    auto report = verify_dde(spec, sol.tau, sol.sigma, 1e-9);
    CHECK(report.passed);
  }
}

TEST_CASE("hand-checked two-state cycle") {
  DynkinGameSpec spec;
  spec.transition = {{0, 1}, {1, 0}};
  spec.phi = {0, 0};
  spec.zeta = {1, 1};
  spec.psi = {2, 2};
  spec.horizon = 2;
  spec.initial = {1, 0};
  spec.validate();
  auto sol = solve_ddc(spec);
  // v_2 = 1; v_1 = min(2, max(0, 1)) = 1; v_0 = 1.  Neither hits an edge
  // before the horizon, so both wait and collect the simultaneous payoff.
  for (const auto& row : sol.values)
    for (double v : row) CHECK(v == 1.0);
  for (int t = 0; t < 2; ++t)
    for (std::size_t x = 0; x < 2; ++x) {
      CHECK(sol.tau.stop[t][x] == 0);
      CHECK(sol.sigma.stop[t][x] == 0);
    }
  CHECK(payoff_value(spec, sol.tau, sol.sigma) == 1.0);
}

TEST_CASE("clamp recursion fixed point, envelope, and both forms") {
  Rng rng(11, 40);
  for (int trial = 0; trial < 25; ++trial) {
    DynkinGameSpec spec = random_ddc(1 + rng.next_index(4),
                                     1 + int(rng.next_index(4)), rng);
    auto sol = solve_ddc(spec);
    auto alt = ddc_backward(spec, true);
    for (int t = 0; t <= spec.horizon; ++t)
      for (std::size_t x = 0; x < spec.size(); ++x) {
        CHECK(sol.values[t][x] == alt[t][x]);
        if (t < spec.horizon) {
          std::vector<double> cont =
              semigroup_apply(spec, sol.values[t + 1], 1);
          CHECK(sol.values[t][x] ==
                std::min(spec.psi[x], std::max(spec.phi[x], cont[x])));
          CHECK(spec.phi[x] <= sol.values[t][x]);
          CHECK(sol.values[t][x] <= spec.psi[x]);
        }
      }
  }
}

TEST_CASE("trivial stopping-rule payoffs") {
  Rng rng(12, 40);
  DynkinGameSpec spec = random_ddc(3, 3, rng);
  std::size_t n = spec.size();

  StoppingRule now = StoppingRule::never_before_horizon(n, spec.horizon);
  for (auto& row : now.stop) row.assign(n, 1);
  CHECK(payoff(spec, now, now) == spec.zeta);

  StoppingRule never = StoppingRule::never_before_horizon(n, spec.horizon);
  CHECK(payoff(spec, now, never) == spec.phi);
  CHECK(payoff(spec, never, now) == spec.psi);
}

TEST_CASE("payoff matches forward path enumeration and is linear in the start") {
  Rng rng(13, 40);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 1 + rng.next_index(3);
    int T = 1 + int(rng.next_index(4));
    DynkinGameSpec spec = trial % 2 ? random_ddc(n, T, rng)
                                    : random_adc(n, T, rng);
    StoppingRule tau = random_rule(n, T, rng);
    StoppingRule sigma = random_rule(n, T, rng);
    auto w0 = payoff(spec, tau, sigma);
    for (std::size_t x = 0; x < n; ++x)
      CHECK(w0[x] ==
            doctest::Approx(path_oracle(spec, tau, sigma, x)).epsilon(1e-12));

    // Linearity: a mixed start equals the mixture of point-mass starts.
    spec.initial.assign(n, 1.0 / double(n));
    double direct = payoff_value(spec, tau, sigma);
    double mixed = 0.0;
    for (std::size_t x = 0; x < n; ++x) mixed += w0[x] / double(n);
    CHECK(direct == doctest::Approx(mixed).epsilon(1e-12));
  }
}

TEST_CASE("clamp solutions survive exhaustive deviation checking") {
  Rng rng(14, 40);
  for (int trial = 0; trial < 12; ++trial) {
    std::size_t n = 1 + rng.next_index(3);
    int T = 1 + int(rng.next_index(3));
    DynkinGameSpec spec = random_ddc(n, T, rng);
    auto sol = solve_ddc(spec);
    auto report = verify_dde(spec, sol.tau, sol.sigma, 1e-9);
    CHECK(report.passed);

    auto [sup_inf, inf_sup] = enumerated_game_value(spec, 0);
    CHECK(sup_inf == doctest::Approx(sol.values[0][0]).epsilon(1e-12));
    CHECK(inf_sup == doctest::Approx(sol.values[0][0]).epsilon(1e-12));
  }
}

TEST_CASE("a shifted stop set is flagged with its deviation point") {
  DynkinGameSpec spec;
  spec.transition = {{1.0}};
  spec.phi = {0};
  spec.zeta = {1};
  spec.psi = {2};
  spec.horizon = 1;
  spec.initial = {1};
  spec.validate();
  auto sol = solve_ddc(spec);
  REQUIRE(verify_dde(spec, sol.tau, sol.sigma, 1e-12).passed);

  StoppingRule shifted = sol.tau;
  shifted.stop[0][0] = 1;  // stop early, handing away the waiting value
  auto report = verify_dde(spec, shifted, sol.sigma, 1e-9);
  CHECK(!report.passed);
  CHECK(report.max_gain_tau == doctest::Approx(1.0));
  CHECK(report.worst_time == 0);
  CHECK(report.worst_state == 0);
}

TEST_CASE("deviation enumeration respects the rule cap") {
  Rng rng(15, 40);
  DynkinGameSpec spec = random_ddc(4, 4, rng);
  auto sol = solve_ddc(spec);
  CHECK_THROWS_AS(verify_dde(spec, sol.tau, sol.sigma, 1e-9, 8),
                  StateSpaceTooLarge);
}

TEST_CASE("constant payoffs make the truncated values identical") {
  Rng rng(16, 40);
  DynkinGameSpec spec = random_spec(3, 3, rng);
  spec.phi.assign(3, 2.0);
  spec.zeta.assign(3, 2.0);
  spec.psi.assign(3, 2.0);
  spec.validate();
  auto report = check_monotone(spec);
  CHECK(report.holds);
  for (const auto& fam : report.family)
    for (const auto& row : fam)
      for (double v : row) CHECK(v == 2.0);
}

TEST_CASE("truncated-value chain holds on random dominant-order instances") {
  Rng rng(17, 40);
  for (int trial = 0; trial < 100; ++trial) {
    DynkinGameSpec spec = random_adc(1 + rng.next_index(4),
                                     1 + int(rng.next_index(5)), rng);
    CHECK(check_monotone(spec).holds);
  }
}

TEST_CASE("the chain can break once the ordering is violated") {
  // phi < continuation < zeta makes the truncated value dip below the
  // forced-confrontation value.
  DynkinGameSpec spec;
  spec.transition = {{0, 1}, {0, 1}};
  spec.phi = {-1, 0};
  spec.zeta = {2, 0};
  spec.psi = {3, 1};
  spec.horizon = 1;
  spec.initial = {1, 0};
  spec.validate();
  CHECK_THROWS_AS(check_monotone(spec), OrderingViolation);
  auto report = check_monotone(spec, false);
  CHECK(!report.holds);
  REQUIRE(!report.violations.empty());
  CHECK(report.violations[0].state == 0);
}

TEST_CASE("fully revealing observations recover the shared-information value") {
  Rng rng(18, 40);
  for (int trial = 0; trial < 5; ++trial) {
    DynkinGameSpec game = random_ddc(2, 2, rng);
    auto sol = solve_ddc(game);
    auto bounds = ddgia_bounds(DdgiaSpec::fully_revealing(game));
    for (std::size_t x = 0; x < game.size(); ++x) {
      CHECK(bounds.lower[x] <= bounds.upper[x] + 1e-12);
      CHECK(bounds.lower[x] ==
            doctest::Approx(sol.values[0][x]).epsilon(1e-9));
      CHECK(bounds.upper[x] ==
            doctest::Approx(sol.values[0][x]).epsilon(1e-9));
    }
  }
}

TEST_CASE("uninformative observations still satisfy weak duality") {
  Rng rng(19, 40);
  for (int trial = 0; trial < 5; ++trial) {
    DdgiaSpec spec;
    spec.game = random_ddc(3, 2, rng);
    spec.n_obs_tau = 1;
    spec.n_obs_sigma = 1;
    spec.emission.assign(3, {1.0});
    auto bounds = ddgia_bounds(spec);
    for (std::size_t x = 0; x < 3; ++x)
      CHECK(bounds.lower[x] <= bounds.upper[x] + 1e-12);
  }
}

TEST_CASE("one-sided information keeps the bounds ordered") {
  Rng rng(20, 40);
  for (int trial = 0; trial < 5; ++trial) {
    DynkinGameSpec game = random_ddc(2, 2, rng);
    DdgiaSpec spec;
    spec.game = game;
    spec.n_obs_tau = 2;   // tau sees the state
    spec.n_obs_sigma = 1; // sigma sees nothing
    spec.emission.assign(2, std::vector<double>(2, 0.0));
    spec.emission[0][0] = 1.0;
    spec.emission[1][1] = 1.0;
    auto bounds = ddgia_bounds(spec);
    for (std::size_t x = 0; x < 2; ++x)
      CHECK(bounds.lower[x] <= bounds.upper[x] + 1e-12);
  }
}

TEST_CASE("zero-horizon observation game is the simultaneous payoff") {
  Rng rng(21, 40);
  DynkinGameSpec game = random_ddc(3, 0, rng);
  auto bounds = ddgia_bounds(DdgiaSpec::fully_revealing(game));
  CHECK(bounds.lower == game.zeta);
  CHECK(bounds.upper == game.zeta);
}

TEST_CASE("observation-history enumeration respects its cap") {
  Rng rng(22, 40);
  DynkinGameSpec game = random_ddc(2, 2, rng);
  CHECK_THROWS_AS(ddgia_bounds(DdgiaSpec::fully_revealing(game), 4),
                  StateSpaceTooLarge);
  DynkinGameSpec big = random_ddc(4, 4, rng);
  CHECK_THROWS_AS(ddgia_bounds(DdgiaSpec::fully_revealing(big)),
                  StateSpaceTooLarge);
}
