#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ddztd/errors.hpp"
#include "ddztd/rng.hpp"

namespace ddztd {

// Two-player stopping game on a finite Markov chain with horizon T.
// The tau player maximizes and the sigma player minimizes
//   H = phi(X_tau) 1{tau<sigma} + zeta(X_tau) 1{tau=sigma}
//     + psi(X_sigma) 1{tau>sigma},
// with both players forced to stop at T.
struct DynkinGameSpec {
  std::vector<std::vector<double>> transition;  // row-stochastic
  std::vector<double> phi;   // tau stops alone
  std::vector<double> zeta;  // simultaneous stop
  std::vector<double> psi;   // sigma stops alone
  int horizon = 0;
  std::vector<double> initial;  // distribution over states

  std::size_t size() const { return transition.size(); }

  void validate() const {
    std::size_t n = transition.size();
    if (n == 0) throw DimensionMismatch("empty state space");
    for (const auto& row : transition) {
      if (row.size() != n) throw DimensionMismatch("transition matrix not square");
      double sum = 0.0;
      for (double p : row) {
        if (!std::isfinite(p) || p < 0.0)
          throw Error("transition probabilities must be finite and nonnegative");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-12)
        throw Error("transition row does not sum to one");
    }
    if (phi.size() != n || zeta.size() != n || psi.size() != n)
      throw DimensionMismatch("payoff vector size mismatch");
    for (std::size_t x = 0; x < n; ++x) {
      if (!std::isfinite(phi[x]) || !std::isfinite(zeta[x]) ||
          !std::isfinite(psi[x]))
        throw NonFiniteValue("payoffs must be finite");
      if (zeta[x] < std::min(phi[x], psi[x]) ||
          zeta[x] > std::max(phi[x], psi[x]))
        throw OrderingViolation(
            "simultaneous payoff must lie between the one-sided payoffs");
    }
    if (horizon < 0) throw Error("negative horizon");
    if (initial.size() != n)
      throw DimensionMismatch("initial distribution size mismatch");
    double sum = 0.0;
    for (double p : initial) {
      if (!std::isfinite(p) || p < 0.0)
        throw Error("initial distribution must be finite and nonnegative");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw Error("initial distribution does not sum to one");
  }
};

inline std::vector<double> point_mass(std::size_t n, std::size_t x) {
  std::vector<double> d(n, 0.0);
  d.at(x) = 1.0;
  return d;
}

// Exact t-step expectation operator: returns x -> E[g(X_t) | X_0 = x].
inline std::vector<double> semigroup_apply(const DynkinGameSpec& spec,
                                           std::vector<double> g, int t) {
  if (g.size() != spec.size())
    throw DimensionMismatch("function not defined on the state space");
  if (t < 0) throw Error("negative time");
  std::size_t n = spec.size();
  for (int k = 0; k < t; ++k) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        next[i] += spec.transition[i][j] * g[j];
    g = std::move(next);
  }
  return g;
}

struct McFunctionEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
};

// Sampling alternative to semigroup_apply: per-state sample mean of g(X_t)
// over n_samples simulated walks, with standard errors.
inline McFunctionEstimate semigroup_apply_mc(const DynkinGameSpec& spec,
                                             const std::vector<double>& g,
                                             int t, std::size_t n_samples,
                                             Rng& rng) {
  if (g.size() != spec.size())
    throw DimensionMismatch("function not defined on the state space");
  if (t < 0) throw Error("negative time");
  if (n_samples < 1) throw Error("need at least one sample");
  std::size_t n = spec.size();
  McFunctionEstimate out;
  out.mean.assign(n, 0.0);
  out.std_error.assign(n, 0.0);
  for (std::size_t x0 = 0; x0 < n; ++x0) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      std::size_t x = x0;
      for (int k = 0; k < t; ++k) x = rng.discrete(spec.transition[x]);
      sum += g[x];
      sumsq += g[x] * g[x];
    }
    double m = sum / double(n_samples);
    out.mean[x0] = m;
    double var = std::max(0.0, sumsq / double(n_samples) - m * m);
    if (n_samples > 1)
      out.std_error[x0] =
          std::sqrt(var / double(n_samples - 1));
  }
  return out;
}

// Adc:         psi <= zeta <= phi statewise (ties resolve here).
// DdcStandard: phi <= zeta <= psi statewise.
enum class PayoffOrdering { Adc, DdcStandard, Mixed };

inline PayoffOrdering classify_ordering(const DynkinGameSpec& spec) {
  bool adc = true, ddc = true;
  for (std::size_t x = 0; x < spec.size(); ++x) {
    adc = adc && spec.psi[x] <= spec.zeta[x] && spec.zeta[x] <= spec.phi[x];
    ddc = ddc && spec.phi[x] <= spec.zeta[x] && spec.zeta[x] <= spec.psi[x];
  }
  if (adc) return PayoffOrdering::Adc;
  if (ddc) return PayoffOrdering::DdcStandard;
  return PayoffOrdering::Mixed;
}

// Markov (state-feedback) stopping rule: stop[t][x] == 1 means the player
// stops the first time the chain sits in x at time t.  Row T is all-stop.
struct StoppingRule {
  std::vector<std::vector<char>> stop;

  void validate(std::size_t n, int horizon) const {
    if (stop.size() != std::size_t(horizon) + 1)
      throw DimensionMismatch("stopping rule horizon mismatch");
    for (const auto& row : stop)
      if (row.size() != n)
        throw DimensionMismatch("stopping rule state-space mismatch");
    for (char s : stop.back())
      if (!s) throw Error("stopping rule must stop everywhere at the horizon");
  }

  static StoppingRule never_before_horizon(std::size_t n, int horizon) {
    StoppingRule r;
    r.stop.assign(std::size_t(horizon) + 1, std::vector<char>(n, 0));
    r.stop.back().assign(n, 1);
    return r;
  }
};

struct DynkinSolution {
  std::vector<std::vector<double>> values;  // values[t][x]
  StoppingRule tau;
  StoppingRule sigma;
};

namespace detail {

inline std::vector<double> kernel_apply(const DynkinGameSpec& spec,
                                        const std::vector<double>& g) {
  std::size_t n = spec.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += spec.transition[i][j] * g[j];
  return out;
}

}  // namespace detail

// Backward recursion under psi <= zeta <= phi:
//   v_T = zeta;  v_t = (P v_{t+1})  if phi < P v_{t+1},  else zeta.
// tau stops where v hits zeta or phi; sigma where v hits zeta or psi.
inline DynkinSolution solve_adc(const DynkinGameSpec& spec) {
  spec.validate();
  if (classify_ordering(spec) != PayoffOrdering::Adc)
    throw OrderingViolation("payoffs are not psi <= zeta <= phi statewise");
  std::size_t n = spec.size();
  int T = spec.horizon;
  DynkinSolution sol;
  sol.values.assign(std::size_t(T) + 1, std::vector<double>(n, 0.0));
  sol.values[T] = spec.zeta;
  for (int t = T - 1; t >= 0; --t) {
    std::vector<double> cont = detail::kernel_apply(spec, sol.values[t + 1]);
    for (std::size_t x = 0; x < n; ++x)
      sol.values[t][x] = spec.phi[x] < cont[x] ? cont[x] : spec.zeta[x];
  }
  sol.tau.stop.assign(std::size_t(T) + 1, std::vector<char>(n, 0));
  sol.sigma.stop.assign(std::size_t(T) + 1, std::vector<char>(n, 0));
  for (int t = 0; t <= T; ++t)
    for (std::size_t x = 0; x < n; ++x) {
      double v = sol.values[t][x];
      sol.tau.stop[t][x] = (v == spec.zeta[x] || v == spec.phi[x]) ? 1 : 0;
      sol.sigma.stop[t][x] = (v == spec.zeta[x] || v == spec.psi[x]) ? 1 : 0;
    }
  sol.tau.stop[T].assign(n, 1);
  sol.sigma.stop[T].assign(n, 1);
  return sol;
}

// The two equivalent clamp forms of the value recursion under
// phi <= zeta <= psi.  They agree exactly whenever the ordering holds.
inline std::vector<std::vector<double>> ddc_backward(const DynkinGameSpec& spec,
                                                     bool max_of_min) {
  std::size_t n = spec.size();
  int T = spec.horizon;
  std::vector<std::vector<double>> v(std::size_t(T) + 1,
                                     std::vector<double>(n, 0.0));
  v[T] = spec.zeta;
  for (int t = T - 1; t >= 0; --t) {
    std::vector<double> cont = detail::kernel_apply(spec, v[t + 1]);
    for (std::size_t x = 0; x < n; ++x)
      v[t][x] = max_of_min
                    ? std::max(spec.phi[x], std::min(spec.psi[x], cont[x]))
                    : std::min(spec.psi[x], std::max(spec.phi[x], cont[x]));
  }
  return v;
}

// Backward recursion under phi <= zeta <= psi:
//   v_T = zeta;  v_t = min{psi, max{phi, P v_{t+1}}}.
// tau stops where v hits phi; sigma where v hits psi.
inline DynkinSolution solve_ddc(const DynkinGameSpec& spec) {
  spec.validate();
  if (classify_ordering(spec) != PayoffOrdering::DdcStandard)
    throw OrderingViolation("payoffs are not phi <= zeta <= psi statewise");
  std::size_t n = spec.size();
  int T = spec.horizon;
  DynkinSolution sol;
  sol.values = ddc_backward(spec, false);
  auto alt = ddc_backward(spec, true);
  for (int t = 0; t <= T; ++t)
    for (std::size_t x = 0; x < n; ++x)
      if (sol.values[t][x] != alt[t][x])
        throw NonFiniteValue("value recursion forms disagree");
  sol.tau.stop.assign(std::size_t(T) + 1, std::vector<char>(n, 0));
  sol.sigma.stop.assign(std::size_t(T) + 1, std::vector<char>(n, 0));
  for (int t = 0; t <= T; ++t)
    for (std::size_t x = 0; x < n; ++x) {
      sol.tau.stop[t][x] = sol.values[t][x] == spec.phi[x] ? 1 : 0;
      sol.sigma.stop[t][x] = sol.values[t][x] == spec.psi[x] ? 1 : 0;
    }
  sol.tau.stop[T].assign(n, 1);
  sol.sigma.stop[T].assign(n, 1);
  return sol;
}

// payoff_table[t][x]: expected H for the subgame that starts at time t in
// state x with both players still active.  Exact backward recursion.
inline std::vector<std::vector<double>> payoff_table(
    const DynkinGameSpec& spec, const StoppingRule& tau,
    const StoppingRule& sigma) {
  std::size_t n = spec.size();
  int T = spec.horizon;
  tau.validate(n, T);
  sigma.validate(n, T);
  std::vector<std::vector<double>> w(std::size_t(T) + 1,
                                     std::vector<double>(n, 0.0));
  for (int t = T; t >= 0; --t) {
    std::vector<double> cont =
        t == T ? std::vector<double>(n, 0.0)
               : detail::kernel_apply(spec, w[t + 1]);
    for (std::size_t x = 0; x < n; ++x) {
      bool ts = tau.stop[t][x], ss = sigma.stop[t][x];
      if (ts && ss)
        w[t][x] = spec.zeta[x];
      else if (ts)
        w[t][x] = spec.phi[x];
      else if (ss)
        w[t][x] = spec.psi[x];
      else
        w[t][x] = cont[x];
    }
  }
  return w;
}

// Expected H per initial state (time 0).
inline std::vector<double> payoff(const DynkinGameSpec& spec,
                                  const StoppingRule& tau,
                                  const StoppingRule& sigma) {
  return payoff_table(spec, tau, sigma)[0];
}

// Expected H under the spec's initial distribution; linear in it.
inline double payoff_value(const DynkinGameSpec& spec, const StoppingRule& tau,
                           const StoppingRule& sigma) {
  std::vector<double> w0 = payoff(spec, tau, sigma);
  double v = 0.0;
  for (std::size_t x = 0; x < spec.size(); ++x) v += spec.initial[x] * w0[x];
  return v;
}

struct DdeReport {
  double max_gain_tau = 0.0;    // best unilateral improvement for tau
  double max_gain_sigma = 0.0;  // best unilateral improvement for sigma
  int worst_time = -1;
  std::size_t worst_state = 0;
  std::uint64_t rules_enumerated = 0;
  double tol = 0.0;
  bool passed = false;

  double max_violation() const {
    return std::max(max_gain_tau, max_gain_sigma);
  }
};

// Saddle check by exhaustive enumeration of Markov stopping rules: for every
// subgame start (t, x), no unilateral deviation may improve the deviator's
// side of the payoff beyond tol.
inline DdeReport verify_dde(const DynkinGameSpec& spec, const StoppingRule& tau,
                            const StoppingRule& sigma, double tol,
                            std::uint64_t rule_cap = (1ull << 22)) {
  spec.validate();
  std::size_t n = spec.size();
  int T = spec.horizon;
  tau.validate(n, T);
  sigma.validate(n, T);
  std::size_t bits = n * std::size_t(T);
  if (bits >= 63 || (1ull << bits) > rule_cap)
    throw StateSpaceTooLarge("too many Markov stopping rules to enumerate");
  std::uint64_t count = 1ull << bits;

  DdeReport report;
  report.tol = tol;
  report.rules_enumerated = count;
  auto base = payoff_table(spec, tau, sigma);

  StoppingRule dev = StoppingRule::never_before_horizon(n, T);
  for (std::uint64_t code = 0; code < count; ++code) {
    for (int t = 0; t < T; ++t)
      for (std::size_t x = 0; x < n; ++x)
        dev.stop[t][x] = (code >> (std::size_t(t) * n + x)) & 1u;

    auto w_tau = payoff_table(spec, dev, sigma);    // tau deviates (maximizer)
    auto w_sigma = payoff_table(spec, tau, dev);    // sigma deviates (minimizer)
    for (int t = 0; t <= T; ++t)
      for (std::size_t x = 0; x < n; ++x) {
        double gt = w_tau[t][x] - base[t][x];
        double gs = base[t][x] - w_sigma[t][x];
        double worst = std::max(gt, gs);
        if (worst > report.max_violation()) {
          report.worst_time = t;
          report.worst_state = x;
        }
        report.max_gain_tau = std::max(report.max_gain_tau, gt);
        report.max_gain_sigma = std::max(report.max_gain_sigma, gs);
      }
  }
  report.passed = report.max_violation() <= tol;
  return report;
}

struct MonotoneViolation {
  int truncation;  // t of the truncated recursion
  int stage;       // n
  std::size_t state;
  double lhs, rhs;
};

struct MonotoneReport {
  bool holds = true;
  // family[t][k][x]: stage-k value of the recursion truncated at horizon t.
  std::vector<std::vector<std::vector<double>>> family;
  std::vector<MonotoneViolation> violations;
};

// Checks the truncated-value chain V^n_n <= V^t_n <= V^{t+1}_n statewise.
// The ordering precondition can be lifted to exercise negative controls.
inline MonotoneReport check_monotone(const DynkinGameSpec& spec,
                                     bool enforce_ordering = true) {
  spec.validate();
  if (enforce_ordering && classify_ordering(spec) != PayoffOrdering::Adc)
    throw OrderingViolation("payoffs are not psi <= zeta <= phi statewise");
  std::size_t n = spec.size();
  int T = spec.horizon;
  MonotoneReport report;
  report.family.resize(std::size_t(T) + 1);
  for (int t = 0; t <= T; ++t) {
    auto& v = report.family[t];
    v.assign(std::size_t(t) + 1, std::vector<double>(n, 0.0));
    v[t] = spec.zeta;
    for (int k = t - 1; k >= 0; --k) {
      std::vector<double> cont = detail::kernel_apply(spec, v[k + 1]);
      for (std::size_t x = 0; x < n; ++x)
        v[k][x] = spec.phi[x] < cont[x] ? cont[x] : spec.zeta[x];
    }
  }
  auto record = [&](int trunc, int stage, std::size_t x, double lhs,
                    double rhs) {
    if (lhs > rhs) {
      report.holds = false;
      report.violations.push_back({trunc, stage, x, lhs, rhs});
    }
  };
  for (int k = 0; k <= T; ++k)
    for (int t = k; t <= T; ++t)
      for (std::size_t x = 0; x < n; ++x) {
        record(t, k, x, report.family[k][k][x], report.family[t][k][x]);
        if (t + 1 <= T)
          record(t + 1, k, x, report.family[t][k][x],
                 report.family[t + 1][k][x]);
      }
  return report;
}

// ----------------------------------------------------------------------
// Partially observed variant: the chain is hidden and each player stops on
// the history of a private observation channel.

struct DdgiaSpec {
  DynkinGameSpec game;
  std::size_t n_obs_tau = 0;    // alphabet size of the tau player's channel
  std::size_t n_obs_sigma = 0;  // alphabet size of the sigma player's channel
  // emission[x][o1 * n_obs_sigma + o2]: joint law of the two observations.
  std::vector<std::vector<double>> emission;

  void validate() const {
    game.validate();
    if (n_obs_tau == 0 || n_obs_sigma == 0)
      throw DimensionMismatch("empty observation alphabet");
    if (emission.size() != game.size())
      throw DimensionMismatch("emission kernel state-space mismatch");
    for (const auto& row : emission) {
      if (row.size() != n_obs_tau * n_obs_sigma)
        throw DimensionMismatch("emission row size mismatch");
      double sum = 0.0;
      for (double p : row) {
        if (!std::isfinite(p) || p < 0.0)
          throw Error("emission probabilities must be finite and nonnegative");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-12)
        throw Error("emission row does not sum to one");
    }
  }

  static DdgiaSpec fully_revealing(const DynkinGameSpec& game) {
    DdgiaSpec spec;
    spec.game = game;
    spec.n_obs_tau = game.size();
    spec.n_obs_sigma = game.size();
    spec.emission.assign(game.size(),
                         std::vector<double>(game.size() * game.size(), 0.0));
    for (std::size_t x = 0; x < game.size(); ++x)
      spec.emission[x][x * game.size() + x] = 1.0;
    return spec;
  }
};

struct DdgiaBounds {
  std::vector<double> lower;  // sup over tau rules of inf over sigma rules
  std::vector<double> upper;  // inf over sigma rules of sup over tau rules
  std::uint64_t rules_tau = 0;
  std::uint64_t rules_sigma = 0;

  double max_gap() const {
    double g = 0.0;
    for (std::size_t x = 0; x < lower.size(); ++x)
      g = std::max(g, upper[x] - lower[x]);
    return g;
  }
  bool has_value(double tol) const { return max_gap() <= tol; }
};

namespace detail {

// Decision-bit layout for observation-history feedback rules of one player:
// one stop bit per (time t < T, observation history of length t+1).
struct HistoryRuleLayout {
  std::size_t alphabet = 0;
  int horizon = 0;
  std::vector<std::uint64_t> offset;  // offset[t] of the length-(t+1) block
  std::size_t bit_count = 0;

  HistoryRuleLayout(std::size_t m, int T) : alphabet(m), horizon(T) {
    std::uint64_t off = 0, block = 1;
    for (int t = 0; t < T; ++t) {
      offset.push_back(off);
      block *= m;
      if (block > (1ull << 40)) throw StateSpaceTooLarge("history explosion");
      off += block;
    }
    bit_count = std::size_t(off);
  }

  bool stops(std::uint64_t rule, int t, std::uint64_t history) const {
    return (rule >> (offset[std::size_t(t)] + history)) & 1u;
  }
};

inline double ddgia_payoff_rec(const DdgiaSpec& spec,
                               const HistoryRuleLayout& lay_tau,
                               const HistoryRuleLayout& lay_sigma,
                               std::uint64_t rule_tau, std::uint64_t rule_sigma,
                               int t, std::size_t x, std::uint64_t h_tau,
                               std::uint64_t h_sigma) {
  if (t == spec.game.horizon) return spec.game.zeta[x];
  double total = 0.0;
  std::size_t m1 = spec.n_obs_tau, m2 = spec.n_obs_sigma;
  for (std::size_t o1 = 0; o1 < m1; ++o1)
    for (std::size_t o2 = 0; o2 < m2; ++o2) {
      double pe = spec.emission[x][o1 * m2 + o2];
      if (pe == 0.0) continue;
      std::uint64_t h1 = h_tau * m1 + o1;
      std::uint64_t h2 = h_sigma * m2 + o2;
      bool ts = lay_tau.stops(rule_tau, t, h1);
      bool ss = lay_sigma.stops(rule_sigma, t, h2);
      double v;
      if (ts && ss)
        v = spec.game.zeta[x];
      else if (ts)
        v = spec.game.phi[x];
      else if (ss)
        v = spec.game.psi[x];
      else {
        v = 0.0;
        for (std::size_t y = 0; y < spec.game.size(); ++y) {
          double pt = spec.game.transition[x][y];
          if (pt == 0.0) continue;
          v += pt * ddgia_payoff_rec(spec, lay_tau, lay_sigma, rule_tau,
                                     rule_sigma, t + 1, y, h1, h2);
        }
      }
      total += pe * v;
    }
  return total;
}

}  // namespace detail

// Brute-force lower and upper values over all observation-history feedback
// stopping rules.  Weak duality (lower <= upper) holds per initial state.
inline DdgiaBounds ddgia_bounds(const DdgiaSpec& spec,
                                std::uint64_t pair_cap = (1ull << 16)) {
  spec.validate();
  detail::HistoryRuleLayout lay_tau(spec.n_obs_tau, spec.game.horizon);
  detail::HistoryRuleLayout lay_sigma(spec.n_obs_sigma, spec.game.horizon);
  if (lay_tau.bit_count >= 30 || lay_sigma.bit_count >= 30)
    throw StateSpaceTooLarge("too many observation histories to enumerate");
  std::uint64_t r1 = 1ull << lay_tau.bit_count;
  std::uint64_t r2 = 1ull << lay_sigma.bit_count;
  if (r1 * r2 > pair_cap)
    throw StateSpaceTooLarge("rule-pair count exceeds the enumeration cap");

  std::size_t n = spec.game.size();
  DdgiaBounds bounds;
  bounds.rules_tau = r1;
  bounds.rules_sigma = r2;
  bounds.lower.assign(n, 0.0);
  bounds.upper.assign(n, 0.0);
  std::vector<double> val(std::size_t(r1) * std::size_t(r2), 0.0);
  for (std::size_t x0 = 0; x0 < n; ++x0) {
    for (std::uint64_t a = 0; a < r1; ++a)
      for (std::uint64_t b = 0; b < r2; ++b)
        val[std::size_t(a) * std::size_t(r2) + std::size_t(b)] =
            detail::ddgia_payoff_rec(spec, lay_tau, lay_sigma, a, b, 0, x0, 0,
                                     0);
    double lower = -1e300;
    for (std::uint64_t a = 0; a < r1; ++a) {
      double worst = 1e300;
      for (std::uint64_t b = 0; b < r2; ++b)
        worst = std::min(worst, val[std::size_t(a) * r2 + b]);
      lower = std::max(lower, worst);
    }
    double upper = 1e300;
    for (std::uint64_t b = 0; b < r2; ++b) {
      double best = -1e300;
      for (std::uint64_t a = 0; a < r1; ++a)
        best = std::max(best, val[std::size_t(a) * r2 + b]);
      upper = std::min(upper, best);
    }
    bounds.lower[x0] = lower;
    bounds.upper[x0] = upper;
  }
  return bounds;
}

}  // namespace ddztd
