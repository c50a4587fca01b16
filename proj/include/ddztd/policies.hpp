#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "ddztd/aimg.hpp"
#include "ddztd/belief.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/rng.hpp"
#include "ddztd/trust.hpp"

namespace ddztd {

// ----------------------------------------------------------------------
// Threshold policies.

// Thresholds partition [0,1] into trust-score cells; the cell index is the
// action label.  Cell 0 (lowest trust scores, closed upper boundary) is the
// most defensive action.
struct ThresholdPolicy {
  std::vector<double> thresholds;

  void validate() const {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      if (thresholds[i] < 0.0 || thresholds[i] > 1.0)
        throw Error("threshold outside [0,1]");
      if (i > 0 && thresholds[i] < thresholds[i - 1])
        throw Error("thresholds must be nondecreasing");
    }
  }

  // Number of thresholds strictly below the trust score, so the boundary
  // b(0) = tau stays in the lower (defensive) cell.
  int act(const Belief& b) const {
    double trust = b.trust_score();
    int cell = 0;
    for (double tau : thresholds) cell += (tau < trust);
    return cell;
  }
};

inline int threshold_act(const ThresholdPolicy& policy, const Belief& b) {
  return policy.act(b);
}

// ----------------------------------------------------------------------
// Policy interfaces used by rollouts and evaluators.

// Stochastic defender: distribution over defense actions at (s, b).
using MixedDefender = std::function<
    std::vector<std::pair<DefenseAction, double>>(const ZtdState&,
                                                  const Belief&)>;

using DefenderPolicy =
    std::function<DefenseAction(const ZtdState&, const Belief&, Rng&)>;

struct AttackerPolicy {
  std::function<Edge(const ZtdState&, int type, Rng&)> sample;
  AttackerDensity density;
};

// Uniform choice over the frontier, for both types; this is also the default
// legitimate-user model.
inline AttackerPolicy uniform_attacker(const AimgSpec& spec) {
  auto graph = spec.graph;
  AttackerPolicy p;
  p.sample = [graph](const ZtdState& s, int, Rng& rng) {
    auto frontier = attacker_action_set(*graph, s);
    if (frontier.empty()) throw IllegalMove("no frontier edge to sample");
    return frontier[rng.next_index(frontier.size())];
  };
  p.density = [graph](const Edge& e, const ZtdState& s, int) {
    auto frontier = attacker_action_set(*graph, s);
    bool member = std::binary_search(frontier.begin(), frontier.end(), e);
    return member ? 1.0 / double(frontier.size()) : 0.0;
  };
  return p;
}

// Belief update rule applied along trajectories.
using TrustEngine = std::function<Belief(
    const Belief&, const ZtdState&, const DefenseAction&, const Edge&,
    int obs, const ZtdState&)>;

inline TrustEngine make_bte_engine(const AimgSpec& spec,
                                   AttackerDensity density) {
  return [&spec, density = std::move(density)](
             const Belief& b, const ZtdState& s, const DefenseAction& a_d,
             const Edge& a_a, int obs, const ZtdState& s_next) {
    return bte_update_lateral(b, spec, s, a_d, a_a, obs, s_next, density);
  };
}

// Off-path observations keep the current belief; realizable ones follow the
// wrapped engine.
inline Belief engine_update_or_keep(const TrustEngine& engine,
                                    const Belief& b, const ZtdState& s,
                                    const DefenseAction& a_d, const Edge& a_a,
                                    int obs, const ZtdState& s_next) {
  try {
    return engine(b, s, a_d, a_a, obs, s_next);
  } catch (const UnrealizableObservation&) {
    return b;
  }
}

// Guards the first `count` frontier edges in canonical edge order.
inline DefenseAction guard_frontier(const AimgSpec& spec, const ZtdState& s,
                                    std::size_t count) {
  auto frontier = attacker_action_set(*spec.graph, s);
  if (count > frontier.size()) count = frontier.size();
  return DefenseAction(frontier.begin(), frontier.begin() + count);
}

// Threshold policy realized as a defender: cell 0 guards up to the budget,
// the last cell idles, intermediate cells interpolate linearly.
inline MixedDefender make_threshold_defender(const AimgSpec& spec,
                                             ThresholdPolicy policy) {
  policy.validate();
  const AimgSpec* sp = &spec;
  std::size_t n_cells = policy.thresholds.size() + 1;
  return [sp, policy, n_cells](const ZtdState& s, const Belief& b)
             -> std::vector<std::pair<DefenseAction, double>> {
    int cell = policy.act(b);
    std::size_t guards =
        n_cells == 1
            ? sp->defense_budget
            : (sp->defense_budget * (n_cells - 1 - std::size_t(cell))) /
                  (n_cells - 1);
    return {{guard_frontier(*sp, s, guards), 1.0}};
  };
}

inline DefenderPolicy sampled_defender(MixedDefender mixed) {
  return [mixed = std::move(mixed)](const ZtdState& s, const Belief& b,
                                    Rng& rng) {
    auto dist = mixed(s, b);
    std::vector<double> w;
    w.reserve(dist.size());
    for (const auto& [a, p] : dist) w.push_back(p);
    return dist[rng.discrete(w)].first;
  };
}

// ----------------------------------------------------------------------
// Trajectories.

struct StepRecord {
  ZtdState state;
  Belief belief;
  DefenseAction a_d;
  int a_d_index = -1;  // index into defender_action_set at this state
  Edge a_a;
  int obs = 0;
  bool passed = false;
  double u_d = 0.0;
  double u_a = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  int type = kTypeLegit;
  std::uint64_t seed = 0;
  double total_u_d = 0.0;
  double total_u_a = 0.0;
};

// Plays the game forward until the horizon or until the frontier empties.
inline Trajectory rollout(const AimgSpec& spec, const DefenderPolicy& defender,
                          const AttackerPolicy& attacker, int type,
                          const TrustEngine& engine, Rng& rng) {
  Trajectory traj;
  traj.type = type;
  ZtdState s = initial_state(*spec.graph);
  Belief b = spec.prior;
  for (int t = 1; t <= spec.horizon; ++t) {
    auto frontier = attacker_action_set(*spec.graph, s);
    if (frontier.empty()) break;

    StepRecord rec;
    rec.state = s;
    rec.belief = b;
    rec.a_d = defender(s, b, rng);
    auto actions = defender_action_set(spec, s);
    auto it = std::find(actions.begin(), actions.end(), rec.a_d);
    rec.a_d_index = it == actions.end() ? -1 : int(it - actions.begin());
    rec.a_a = attacker.sample(s, type, rng);

    StepResult res = step(spec, s, rec.a_d, rec.a_a, type, rng);
    rec.obs = res.observation;
    rec.passed = res.passed;
    rec.u_d = res.u_d;
    rec.u_a = res.u_a;
    traj.total_u_d += res.u_d;
    traj.total_u_a += res.u_a;

    b = engine_update_or_keep(engine, b, s, rec.a_d, rec.a_a, rec.obs,
                              res.next_state);
    s = res.next_state;
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

// Replays the stored record stream through the engine and returns the
// maximum belief deviation, used as a trajectory integrity check.
inline double replay_belief_residual(const AimgSpec& spec,
                                     const Trajectory& traj,
                                     const TrustEngine& engine) {
  double worst = 0.0;
  Belief b = spec.prior;
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const StepRecord& rec = traj.steps[i];
    for (std::size_t w = 0; w < b.size(); ++w)
      worst = std::max(worst, std::fabs(b(w) - rec.belief(w)));
    ZtdState s_next = apply_move(*spec.graph, rec.state, rec.a_a, rec.passed);
    b = engine_update_or_keep(engine, b, rec.state, rec.a_d, rec.a_a, rec.obs,
                              s_next);
  }
  return worst;
}

// ----------------------------------------------------------------------
// Exact evaluation by exhaustive tree expansion.  Feasible for the desk-scale
// toys used in training and verification; probability mass below the cutoff
// is pruned (it is exactly zero in all supported branches).

namespace detail {

inline double exact_value_rec(const AimgSpec& spec,
                              const MixedDefender& defender,
                              const AttackerDensity& att_density,
                              const TrustEngine& engine, const ZtdState& s,
                              const Belief& b, std::vector<double> reach,
                              bool defender_side) {
  double mass = 0.0;
  for (double p : reach) mass += p;
  if (mass <= 1e-15 || s.time > spec.horizon) return 0.0;
  auto frontier = attacker_action_set(*spec.graph, s);
  if (frontier.empty()) return 0.0;

  double total = 0.0;
  for (const auto& [a_d, p_d] : defender(s, b)) {
    if (p_d <= 0.0) continue;
    for (const Edge& a_a : frontier) {
      // Stage utility, weighted by the joint reach measure.
      for (std::size_t w = 0; w < reach.size(); ++w) {
        double pw = reach[w] * p_d * att_density(a_a, s, int(w));
        if (pw <= 0.0) continue;
        total += pw * (defender_side
                           ? defender_utility(spec, s, a_d, a_a, int(w))
                           : attacker_utility(spec, s, a_d, a_a, int(w)));
      }
      for (int pass = 0; pass < 2; ++pass) {
        ZtdState s_next = apply_move(*spec.graph, s, a_a, pass == 1);
        for (int obs = 0; obs < 2; ++obs) {
          std::vector<double> next_reach(reach.size(), 0.0);
          double branch = 0.0;
          for (std::size_t w = 0; w < reach.size(); ++w) {
            double pp = pass_probability(spec, a_d, a_a, int(w));
            double pr = reach[w] * p_d * att_density(a_a, s, int(w)) *
                        (pass ? pp : 1.0 - pp) *
                        observation_probability(spec, obs, int(w));
            next_reach[w] = pr;
            branch += pr;
          }
          if (branch <= 1e-15) continue;
          Belief b_next = engine_update_or_keep(engine, b, s, a_d, a_a, obs,
                                                s_next);
          total += exact_value_rec(spec, defender, att_density, engine,
                                   s_next, b_next, std::move(next_reach),
                                   defender_side);
        }
      }
    }
  }
  return total;
}

}  // namespace detail

// Expected cumulative defender cost under the given policies, computed by
// exhaustive expansion of the game tree from the prior.
inline double exact_defender_value(const AimgSpec& spec,
                                   const MixedDefender& defender,
                                   const AttackerDensity& att_density,
                                   const TrustEngine& engine) {
  std::vector<double> reach(spec.prior.size());
  for (std::size_t w = 0; w < reach.size(); ++w) reach[w] = spec.prior(w);
  return detail::exact_value_rec(spec, defender, att_density, engine,
                                 initial_state(*spec.graph), spec.prior,
                                 std::move(reach), true);
}

inline double exact_attacker_value(const AimgSpec& spec,
                                   const MixedDefender& defender,
                                   const AttackerDensity& att_density,
                                   const TrustEngine& engine) {
  std::vector<double> reach(spec.prior.size());
  for (std::size_t w = 0; w < reach.size(); ++w) reach[w] = spec.prior(w);
  return detail::exact_value_rec(spec, defender, att_density, engine,
                                 initial_state(*spec.graph), spec.prior,
                                 std::move(reach), false);
}

// ----------------------------------------------------------------------
// Parametric defender and the policy gradient learner.

// Softmax over the enumerated defense actions; the logit of action slot j is
// weights[j] . features(s, b).
struct SoftmaxPolicy {
  Matrix weights;  // [slot][feature]

  static constexpr std::size_t kFeatureCount = 4;

  static SoftmaxPolicy zero(std::size_t n_slots) {
    SoftmaxPolicy p;
    p.weights.assign(n_slots, std::vector<double>(kFeatureCount, 0.0));
    return p;
  }

  static std::vector<double> features(const AimgSpec& spec, const ZtdState& s,
                                      const Belief& b) {
    double frac =
        double(s.visited_count()) / double(spec.graph->node_count());
    double tgt = s.is_visited(spec.graph->target()) ? 1.0 : 0.0;
    return {1.0, b.trust_score(), frac, tgt};
  }

  std::vector<double> probs(const AimgSpec& spec, const ZtdState& s,
                            const Belief& b, std::size_t n_actions) const {
    if (n_actions > weights.size())
      throw DimensionMismatch("more defense actions than policy slots");
    auto x = features(spec, s, b);
    std::vector<double> logits(n_actions, 0.0);
    double mx = -1e300;
    for (std::size_t j = 0; j < n_actions; ++j) {
      for (std::size_t f = 0; f < kFeatureCount; ++f)
        logits[j] += weights[j][f] * x[f];
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (double& v : logits) z += (v = std::exp(v - mx));
    for (double& v : logits) v /= z;
    return logits;
  }

  // d/dweights of log pi(action | s, b).
  Matrix grad_log(const AimgSpec& spec, const ZtdState& s, const Belief& b,
                  std::size_t n_actions, int action) const {
    auto x = features(spec, s, b);
    auto pi = probs(spec, s, b, n_actions);
    Matrix g = zeros_like(weights);
    for (std::size_t j = 0; j < n_actions; ++j) {
      double coef = (int(j) == action ? 1.0 : 0.0) - pi[j];
      for (std::size_t f = 0; f < kFeatureCount; ++f) g[j][f] = coef * x[f];
    }
    return g;
  }
};

inline MixedDefender make_softmax_defender(const AimgSpec& spec,
                                           SoftmaxPolicy policy) {
  const AimgSpec* sp = &spec;
  return [sp, policy = std::move(policy)](const ZtdState& s, const Belief& b) {
    auto actions = defender_action_set(*sp, s);
    auto pi = policy.probs(*sp, s, b, actions.size());
    std::vector<std::pair<DefenseAction, double>> out;
    for (std::size_t j = 0; j < actions.size(); ++j)
      out.emplace_back(actions[j], pi[j]);
    return out;
  };
}

// Batch estimator: (1/K) sum_k [sum_t grad log pi(a_D^t)] * total u_D^(k).
inline Matrix policy_gradient_estimate(const AimgSpec& spec,
                                       const SoftmaxPolicy& policy,
                                       const std::vector<Trajectory>& batch) {
  if (batch.empty()) throw EmptyDataset("policy gradient needs trajectories");
  Matrix g = zeros_like(policy.weights);
  for (const Trajectory& traj : batch) {
    Matrix score = zeros_like(policy.weights);
    for (const StepRecord& rec : traj.steps) {
      auto actions = defender_action_set(spec, rec.state);
      if (rec.a_d_index < 0)
        throw EvaluationFailure("trajectory action outside enumerated set");
      axpy(score, 1.0,
           policy.grad_log(spec, rec.state, rec.belief, actions.size(),
                           rec.a_d_index));
    }
    axpy(g, traj.total_u_d / double(batch.size()), score);
  }
  return g;
}

struct PgConfig {
  std::size_t iterations = 50;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double grad_tol = 1e-3;
  std::size_t policy_slots = 8;
  std::uint64_t seed = 0;
};

struct PgResult {
  SoftmaxPolicy policy;
  std::vector<double> value_curve;  // exact V_D after each iteration
  bool converged = false;
};

// Minimizes the expected cumulative defender cost by gradient descent on the
// softmax parameters.
inline PgResult train_policy_gradient(const AimgSpec& spec,
                                      const AttackerPolicy& attacker,
                                      const TrustEngine& engine,
                                      const PgConfig& cfg) {
  PgResult res;
  res.policy = SoftmaxPolicy::zero(cfg.policy_slots);
  Rng rng(cfg.seed, 0x3c1);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    DefenderPolicy actor =
        sampled_defender(make_softmax_defender(spec, res.policy));
    std::vector<Trajectory> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t k = 0; k < cfg.batch_size; ++k) {
      int type = rng.bernoulli(spec.prior(kTypeMalicious)) ? kTypeMalicious
                                                           : kTypeLegit;
      batch.push_back(rollout(spec, actor, attacker, type, engine, rng));
    }
    Matrix g = policy_gradient_estimate(spec, res.policy, batch);
    double norm = 0.0;
    for (const auto& row : g)
      for (double v : row) {
        if (!std::isfinite(v)) throw NonFiniteValue("policy gradient");
        norm += v * v;
      }
    norm = std::sqrt(norm);
    axpy(res.policy.weights, -cfg.learning_rate, g);
    res.value_curve.push_back(exact_defender_value(
        spec, make_softmax_defender(spec, res.policy), attacker.density,
        engine));
    if (!std::isfinite(res.value_curve.back()))
      throw NonFiniteValue("policy value diverged");
    if (norm < cfg.grad_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

// ----------------------------------------------------------------------
// SPSA.

using Objective = std::function<double(const std::vector<double>&)>;

// Two-evaluation simultaneous-perturbation estimate at perturbation size c.
inline std::vector<double> spsa_gradient(const Objective& f,
                                         const std::vector<double>& x,
                                         double c, Rng& rng) {
  if (!(c > 0.0)) throw Error("perturbation size must be positive");
  std::vector<double> delta(x.size()), up(x), dn(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    delta[i] = rng.rademacher();
    up[i] += c * delta[i];
    dn[i] -= c * delta[i];
  }
  double fu = f(up), fd = f(dn);
  if (!std::isfinite(fu) || !std::isfinite(fd))
    throw EvaluationFailure("objective returned a non-finite value");
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    g[i] = (fu - fd) / (2.0 * c * delta[i]);
  return g;
}

struct SpsaConfig {
  std::size_t iterations = 100;
  double a = 0.2;        // step gain numerator
  double big_a = 10.0;   // step stability constant
  double c = 0.2;        // perturbation gain numerator
  std::size_t grad_draws = 1;  // averaged perturbation draws per step
  std::uint64_t seed = 0;
};

struct SpsaResult {
  std::vector<double> x;  // best iterate encountered, the initial point included
  std::vector<double> value_curve;
};

// Projected SPSA descent with the standard decaying gains
// a_k = a/(k+1+A)^0.602 and c_k = c/(k+1)^0.101.  The returned point is the
// best evaluated iterate, so the result is never worse than the start even
// when the late iterates wander on flat or noisy objectives.
inline SpsaResult spsa_minimize(const Objective& f, std::vector<double> x,
                                const std::vector<double>& lo,
                                const std::vector<double>& hi,
                                const SpsaConfig& cfg) {
  if (x.size() != lo.size() || x.size() != hi.size())
    throw DimensionMismatch("bound dimensions");
  SpsaResult res;
  Rng rng(cfg.seed, 0x59a);
  std::vector<double> best_x = x;
  double best_f = f(x);
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    double ak = cfg.a / std::pow(double(k) + 1.0 + cfg.big_a, 0.602);
    double ck = cfg.c / std::pow(double(k) + 1.0, 0.101);
    std::vector<double> g(x.size(), 0.0);
    for (std::size_t d = 0; d < cfg.grad_draws; ++d) {
      auto gd = spsa_gradient(f, x, ck, rng);
      for (std::size_t i = 0; i < x.size(); ++i)
        g[i] += gd[i] / double(cfg.grad_draws);
    }
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = std::clamp(x[i] - ak * g[i], lo[i], hi[i]);
    double fx = f(x);
    res.value_curve.push_back(fx);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  res.x = std::move(best_x);
  return res;
}

// Exact-evaluation objective V_D(tau) for single-threshold policies.
inline Objective threshold_value_objective(const AimgSpec& spec,
                                           const AttackerPolicy& attacker,
                                           const TrustEngine& engine) {
  const AimgSpec* sp = &spec;
  const AttackerPolicy* att = &attacker;
  const TrustEngine* eng = &engine;
  return [sp, att, eng](const std::vector<double>& x) {
    // Perturbed SPSA probes may step outside [0,1]; the policy saturates.
    ThresholdPolicy p{{std::clamp(x.at(0), 0.0, 1.0)}};
    return exact_defender_value(*sp, make_threshold_defender(*sp, p),
                                att->density, *eng);
  };
}

struct ThresholdTrainResult {
  ThresholdPolicy policy;
  std::vector<double> value_curve;
};

inline ThresholdTrainResult train_threshold_spsa(const AimgSpec& spec,
                                                 const AttackerPolicy& attacker,
                                                 const TrustEngine& engine,
                                                 const SpsaConfig& cfg,
                                                 double tau0 = 0.5) {
  Objective f = threshold_value_objective(spec, attacker, engine);
  SpsaResult r = spsa_minimize(f, {tau0}, {0.0}, {1.0}, cfg);
  return {ThresholdPolicy{{r.x[0]}}, std::move(r.value_curve)};
}

// Grid search oracle over one threshold; returns every grid point whose value
// ties the minimum within 1e-12.
struct GridSearchResult {
  double best_tau = 0.0;
  double best_value = 0.0;
  std::vector<double> optimal_taus;
};

inline GridSearchResult grid_search_threshold(const Objective& f,
                                              double step = 0.01) {
  GridSearchResult r;
  r.best_value = 1e300;
  int n = int(std::round(1.0 / step));
  std::vector<double> values(n + 1);
  for (int i = 0; i <= n; ++i) {
    double tau = double(i) * step;
    values[i] = f({tau});
    if (values[i] < r.best_value) {
      r.best_value = values[i];
      r.best_tau = tau;
    }
  }
  for (int i = 0; i <= n; ++i)
    if (values[i] <= r.best_value + 1e-12)
      r.optimal_taus.push_back(double(i) * step);
  return r;
}

// ----------------------------------------------------------------------
// Attacker best response against a fixed defender, by backward induction
// over the attacker's induced decision tree.  The attacker knows its own
// malicious type and observes the full public history, so the recursion
// carries (state, defender belief, time).

struct BestResponse {
  double value = 0.0;  // minimal expected cumulative attacker cost
  std::function<Edge(const ZtdState&, const Belief&)> act;
};

namespace detail {

inline double best_response_rec(const AimgSpec& spec,
                                const MixedDefender& defender,
                                const TrustEngine& engine, const ZtdState& s,
                                const Belief& b, std::size_t* budget,
                                Edge* best_edge) {
  if (s.time > spec.horizon) return 0.0;
  auto frontier = attacker_action_set(*spec.graph, s);
  if (frontier.empty()) return 0.0;
  if (*budget == 0)
    throw StateSpaceTooLarge("best-response tree exceeds the node budget");
  --*budget;

  double best = 1e300;
  for (const Edge& a_a : frontier) {
    double cost = 0.0;
    for (const auto& [a_d, p_d] : defender(s, b)) {
      if (p_d <= 0.0) continue;
      double c = attacker_utility(spec, s, a_d, a_a, kTypeMalicious);
      double pp = pass_probability(spec, a_d, a_a, kTypeMalicious);
      for (int pass = 0; pass < 2; ++pass) {
        double p_tr = pass ? pp : 1.0 - pp;
        if (p_tr <= 0.0) continue;
        ZtdState s_next = apply_move(*spec.graph, s, a_a, pass == 1);
        for (int obs = 0; obs < 2; ++obs) {
          double p_o = observation_probability(spec, obs, kTypeMalicious);
          if (p_o <= 0.0) continue;
          Belief b_next =
              engine_update_or_keep(engine, b, s, a_d, a_a, obs, s_next);
          c += p_tr * p_o *
               best_response_rec(spec, defender, engine, s_next, b_next,
                                 budget, nullptr);
        }
      }
      cost += p_d * c;
    }
    if (cost < best - 1e-12) {
      best = cost;
      if (best_edge) *best_edge = a_a;
    }
  }
  return best;
}

}  // namespace detail

inline BestResponse attacker_best_response(const AimgSpec& spec,
                                           const MixedDefender& defender,
                                           const TrustEngine& engine,
                                           std::size_t node_budget = 2000000) {
  BestResponse br;
  std::size_t budget = node_budget;
  Edge dummy{-1, -1};
  br.value = detail::best_response_rec(spec, defender, engine,
                                       initial_state(*spec.graph), spec.prior,
                                       &budget, &dummy);
  const AimgSpec* sp = &spec;
  br.act = [sp, defender, engine, node_budget](const ZtdState& s,
                                               const Belief& b) {
    std::size_t budget = node_budget;
    Edge e{-1, -1};
    detail::best_response_rec(*sp, defender, engine, s, b, &budget, &e);
    if (e.tail < 0) throw IllegalMove("no frontier edge at this state");
    return e;
  };
  return br;
}

}  // namespace ddztd
