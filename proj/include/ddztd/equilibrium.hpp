#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "ddztd/aimg.hpp"
#include "ddztd/belief.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/trust.hpp"

namespace ddztd {

// ----------------------------------------------------------------------
// Stage bimatrix games.  Both entries are costs; each player minimizes its
// own matrix given the opponent's mixed strategy.

struct StageGame {
  Matrix defender_cost;  // [defender action][attacker action]
  Matrix attacker_cost;

  void validate() const {
    if (defender_cost.empty() || defender_cost[0].empty())
      throw DimensionMismatch("empty stage game");
    if (attacker_cost.size() != defender_cost.size())
      throw DimensionMismatch("stage matrices disagree on rows");
    for (std::size_t i = 0; i < defender_cost.size(); ++i) {
      if (defender_cost[i].size() != defender_cost[0].size() ||
          attacker_cost[i].size() != defender_cost[0].size())
        throw DimensionMismatch("ragged stage matrix");
      for (std::size_t j = 0; j < defender_cost[i].size(); ++j)
        if (!std::isfinite(defender_cost[i][j]) ||
            !std::isfinite(attacker_cost[i][j]))
          throw NonFiniteValue("stage matrix entry");
    }
  }
};

struct StageEquilibrium {
  std::vector<double> x;  // defender mixed strategy over rows
  std::vector<double> y;  // attacker mixed strategy over columns
  double defender_value = 0.0;
  double attacker_value = 0.0;
  bool degenerate = false;
};

namespace detail {

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_linear(Matrix a, std::vector<double> rhs,
                         std::vector<double>& out) {
  std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    if (std::fabs(a[piv][col]) < 1e-12) return false;
    std::swap(a[piv], a[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double v = rhs[r];
    for (std::size_t c = r + 1; c < n; ++c) v -= a[r][c] * out[c];
    out[r] = v / a[r][r];
  }
  return true;
}

// Solves for the column player's mixture that makes every row in `rows`
// indifferent at common value v, with probability mass only on `cols`.
inline bool indifference_mixture(const Matrix& cost,
                                 const std::vector<std::size_t>& rows,
                                 const std::vector<std::size_t>& cols,
                                 std::vector<double>& mix, double& value) {
  std::size_t k = rows.size();  // == cols.size()
  Matrix a(k + 1, std::vector<double>(k + 1, 0.0));
  std::vector<double> rhs(k + 1, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) a[r][c] = cost[rows[r]][cols[c]];
    a[r][k] = -1.0;  // common value unknown
  }
  for (std::size_t c = 0; c < k; ++c) a[k][c] = 1.0;
  rhs[k] = 1.0;
  std::vector<double> sol;
  if (!solve_linear(std::move(a), std::move(rhs), sol)) return false;
  mix.assign(sol.begin(), sol.begin() + k);
  value = sol[k];
  for (double p : mix)
    if (p < -1e-9) return false;
  return true;
}

inline void enumerate_subsets(std::size_t n, std::size_t k,
                              const std::function<bool(
                                  const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> pick;
  std::function<bool(std::size_t)> rec = [&](std::size_t start) -> bool {
    if (pick.size() == k) return visit(pick);
    for (std::size_t i = start; i < n; ++i) {
      pick.push_back(i);
      if (rec(i + 1)) return true;
      pick.pop_back();
    }
    return false;
  };
  rec(0);
}

}  // namespace detail

// One Nash equilibrium of the bimatrix cost game by support enumeration.
// Selection is deterministic: smallest support size first, then lexicographic
// support order.  The degenerate flag is raised when a non-support action
// ties the equilibrium value or a support probability vanishes.
inline StageEquilibrium stage_bayes_nash(const StageGame& game,
                                         double tol = 1e-9) {
  game.validate();
  std::size_t m = game.defender_cost.size();
  std::size_t n = game.defender_cost[0].size();

  StageEquilibrium eq;
  bool found = false;
  for (std::size_t k = 1; k <= std::min(m, n) && !found; ++k) {
    detail::enumerate_subsets(
        m, k, [&](const std::vector<std::size_t>& rows) {
          bool done = false;
          detail::enumerate_subsets(
              n, k, [&](const std::vector<std::size_t>& cols) {
                std::vector<double> y_sub, x_sub;
                double vd = 0.0, va = 0.0;
                if (!detail::indifference_mixture(game.defender_cost, rows,
                                                  cols, y_sub, vd))
                  return false;
                // Transposed view for the column player's indifference.
                Matrix at(n, std::vector<double>(m, 0.0));
                for (std::size_t i = 0; i < m; ++i)
                  for (std::size_t j = 0; j < n; ++j)
                    at[j][i] = game.attacker_cost[i][j];
                if (!detail::indifference_mixture(at, cols, rows, x_sub, va))
                  return false;

                std::vector<double> x(m, 0.0), y(n, 0.0);
                for (std::size_t r = 0; r < k; ++r) {
                  x[rows[r]] = std::max(0.0, x_sub[r]);
                  y[cols[r]] = std::max(0.0, y_sub[r]);
                }

                // Best-response checks outside the supports.
                bool degenerate = false;
                for (std::size_t i = 0; i < m; ++i) {
                  double c = 0.0;
                  for (std::size_t j = 0; j < n; ++j)
                    c += game.defender_cost[i][j] * y[j];
                  bool in = std::find(rows.begin(), rows.end(), i) !=
                            rows.end();
                  if (!in && c < vd - tol) return false;
                  if (!in && std::fabs(c - vd) <= tol) degenerate = true;
                }
                for (std::size_t j = 0; j < n; ++j) {
                  double c = 0.0;
                  for (std::size_t i = 0; i < m; ++i)
                    c += game.attacker_cost[i][j] * x[i];
                  bool in = std::find(cols.begin(), cols.end(), j) !=
                            cols.end();
                  if (!in && c < va - tol) return false;
                  if (!in && std::fabs(c - va) <= tol) degenerate = true;
                }
                for (double p : x_sub)
                  if (p <= tol) degenerate = true;
                for (double p : y_sub)
                  if (p <= tol) degenerate = true;

                eq.x = std::move(x);
                eq.y = std::move(y);
                eq.defender_value = vd;
                eq.attacker_value = va;
                eq.degenerate = degenerate;
                found = done = true;
                return true;
              });
          return done;
        });
  }
  if (!found)
    throw NoEquilibriumFound("support enumeration exhausted; solver bug");
  return eq;
}

// ----------------------------------------------------------------------
// Belief-value iteration over the lateral-movement game.
//
// Nodes are the reachable states (the time step is part of the state).  The
// backward pass solves the stage game at each node with beliefs fixed; the
// forward pass recomputes beliefs from the joint (state, type) occupancy
// measure under the current policies.  The legitimate user follows a fixed
// supplied policy density; the strategic stage game is played against the
// malicious type, whose continuation enters the defender's matrix weighted
// by the node belief.

struct BviResult {
  std::map<ZtdState, double> v_d;
  std::map<ZtdState, double> v_a;  // malicious attacker cost-to-go
  std::map<ZtdState, std::vector<double>> pi_d;  // over defender_action_set
  std::map<ZtdState, std::vector<double>> pi_a;  // over the frontier
  std::map<ZtdState, Belief> beliefs;
  bool converged = false;
  std::size_t iterations = 0;
};

namespace detail {

inline std::vector<ZtdState> enumerate_states(const AimgSpec& spec,
                                              std::size_t limit) {
  std::vector<ZtdState> order;
  std::map<ZtdState, bool> seen;
  std::vector<ZtdState> queue{initial_state(*spec.graph)};
  seen[queue[0]] = true;
  while (!queue.empty()) {
    ZtdState s = queue.back();
    queue.pop_back();
    order.push_back(s);
    if (order.size() > limit)
      throw StateSpaceTooLarge("reachable state enumeration exceeds limit");
    if (s.time >= spec.horizon) continue;
    for (const Edge& e : attacker_action_set(*spec.graph, s)) {
      for (bool pass : {true, false}) {
        ZtdState nxt = apply_move(*spec.graph, s, e, pass);
        if (!seen[nxt]) {
          seen[nxt] = true;
          queue.push_back(nxt);
        }
      }
    }
  }
  // Deepest nodes first, so a single sweep is a valid backward pass.
  std::sort(order.begin(), order.end(),
            [](const ZtdState& a, const ZtdState& b) {
              if (a.time != b.time) return a.time > b.time;
              return a < b;
            });
  return order;
}

struct StageLayout {
  std::vector<DefenseAction> defense;
  std::vector<Edge> frontier;
};

// Stage matrices at node s under belief b, with continuation read from the
// supplied value tables (absent states contribute zero, i.e. terminal).
inline StageGame build_stage_game(const AimgSpec& spec, const ZtdState& s,
                                  const Belief& b,
                                  const AttackerDensity& legit,
                                  const std::map<ZtdState, double>& v_d,
                                  const std::map<ZtdState, double>& v_a,
                                  StageLayout* layout) {
  auto defense = defender_action_set(spec, s);
  auto frontier = attacker_action_set(*spec.graph, s);
  auto cont = [&](const std::map<ZtdState, double>& table,
                  const ZtdState& nxt) {
    auto it = table.find(nxt);
    return it == table.end() ? 0.0 : it->second;
  };

  StageGame g;
  g.defender_cost.assign(defense.size(),
                         std::vector<double>(frontier.size(), 0.0));
  g.attacker_cost = g.defender_cost;
  for (std::size_t i = 0; i < defense.size(); ++i) {
    // Legitimate-type term, independent of the strategic column.
    double legit_term = 0.0;
    for (const Edge& e : frontier) {
      double pe = legit(e, s, kTypeLegit);
      if (pe <= 0.0) continue;
      double u = defender_utility(spec, s, defense[i], e, kTypeLegit);
      double pp = pass_probability(spec, defense[i], e, kTypeLegit);
      double c = pp * cont(v_d, apply_move(*spec.graph, s, e, true)) +
                 (1.0 - pp) * cont(v_d, apply_move(*spec.graph, s, e, false));
      legit_term += pe * (u + c);
    }
    for (std::size_t j = 0; j < frontier.size(); ++j) {
      const Edge& e = frontier[j];
      double pp = pass_probability(spec, defense[i], e, kTypeMalicious);
      ZtdState sp = apply_move(*spec.graph, s, e, true);
      ZtdState sr = apply_move(*spec.graph, s, e, false);
      double mal_d =
          defender_utility(spec, s, defense[i], e, kTypeMalicious) +
          pp * cont(v_d, sp) + (1.0 - pp) * cont(v_d, sr);
      g.defender_cost[i][j] =
          b(kTypeLegit) * legit_term + b(kTypeMalicious) * mal_d;
      g.attacker_cost[i][j] =
          attacker_utility(spec, s, defense[i], e, kTypeMalicious) +
          pp * cont(v_a, sp) + (1.0 - pp) * cont(v_a, sr);
    }
  }
  if (layout) {
    layout->defense = std::move(defense);
    layout->frontier = std::move(frontier);
  }
  return g;
}

}  // namespace detail

inline BviResult bvi(const AimgSpec& spec, const AttackerDensity& legit,
                     double tol, std::size_t max_iter,
                     std::size_t state_limit = 20000) {
  spec.validate();
  auto order = detail::enumerate_states(spec, state_limit);

  BviResult res;
  for (const ZtdState& s : order) res.beliefs.emplace(s, spec.prior);

  std::map<ZtdState, double> prev_v;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    // Backward value pass with beliefs frozen.
    res.v_d.clear();
    res.v_a.clear();
    for (const ZtdState& s : order) {
      if (attacker_action_set(*spec.graph, s).empty() ||
          s.time > spec.horizon) {
        res.v_d[s] = 0.0;
        res.v_a[s] = 0.0;
        res.pi_d[s] = {};
        res.pi_a[s] = {};
        continue;
      }
      detail::StageLayout layout;
      StageGame g = detail::build_stage_game(spec, s, res.beliefs.at(s),
                                             legit, res.v_d, res.v_a,
                                             &layout);
      StageEquilibrium eq = stage_bayes_nash(g);
      res.v_d[s] = eq.defender_value;
      res.v_a[s] = eq.attacker_value;
      res.pi_d[s] = eq.x;
      res.pi_a[s] = eq.y;
    }

    if (!prev_v.empty()) {
      double dv = 0.0;
      for (const auto& [s, v] : res.v_d)
        dv = std::max(dv, std::fabs(v - prev_v.at(s)));
      if (dv < tol) {
        res.converged = true;
        return res;
      }
    }
    prev_v = res.v_d;

    // Forward belief pass: joint occupancy over (state, type).
    std::map<ZtdState, std::vector<double>> mu;
    ZtdState s0 = initial_state(*spec.graph);
    mu[s0] = {spec.prior(kTypeLegit), spec.prior(kTypeMalicious)};
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const ZtdState& s = *it;  // shallow states first in reverse order
      auto mit = mu.find(s);
      if (mit == mu.end()) continue;
      const std::vector<double>& mass = mit->second;
      auto frontier = attacker_action_set(*spec.graph, s);
      if (frontier.empty() || s.time >= spec.horizon) continue;
      auto defense = defender_action_set(spec, s);
      const auto& x = res.pi_d.at(s);
      const auto& y = res.pi_a.at(s);
      for (std::size_t i = 0; i < defense.size(); ++i) {
        if (x[i] <= 0.0) continue;
        for (std::size_t j = 0; j < frontier.size(); ++j) {
          const Edge& e = frontier[j];
          double pw[2] = {legit(e, s, kTypeLegit), y[j]};
          for (int w = 0; w < 2; ++w) {
            double p = mass[w] * x[i] * pw[w];
            if (p <= 0.0) continue;
            double pp = pass_probability(spec, defense[i], e, w);
            if (pp > 0.0) {
              auto& m = mu[apply_move(*spec.graph, s, e, true)];
              m.resize(2, 0.0);
              m[w] += p * pp;
            }
            if (pp < 1.0) {
              auto& m = mu[apply_move(*spec.graph, s, e, false)];
              m.resize(2, 0.0);
              m[w] += p * (1.0 - pp);
            }
          }
        }
      }
    }
    for (const ZtdState& s : order) {
      auto mit = mu.find(s);
      if (mit == mu.end()) continue;  // unreachable: keep previous belief
      double z = mit->second[0] + mit->second[1];
      if (z <= 0.0) continue;
      res.beliefs.at(s) =
          Belief({mit->second[0] / z, mit->second[1] / z});
    }
  }
  res.iterations = max_iter;
  return res;  // converged stays false
}

// ----------------------------------------------------------------------
// Equilibrium verification: unilateral deviation gains per node with the
// belief system frozen (P1 for the defender, P2 for the malicious attacker)
// and belief-consistency residuals on realizable nodes (C1).

struct PbneNodeCheck {
  ZtdState state;
  double gain_d = 0.0;       // profile cost minus best-response cost
  double gain_a = 0.0;
  double c1_residual = 0.0;  // only meaningful when realizable
  bool realizable = false;
};

struct PbneReport {
  std::vector<PbneNodeCheck> nodes;
  double max_gain_d = 0.0;
  double max_gain_a = 0.0;
  double max_c1_residual = 0.0;

  bool pass(double tol_gain, double tol_c1) const {
    return max_gain_d <= tol_gain && max_gain_a <= tol_gain &&
           max_c1_residual <= tol_c1;
  }
};

inline PbneReport verify_pbne(
    const AimgSpec& spec, const std::map<ZtdState, std::vector<double>>& pi_d,
    const std::map<ZtdState, std::vector<double>>& pi_a,
    const std::map<ZtdState, Belief>& beliefs, const AttackerDensity& legit,
    std::size_t state_limit = 20000) {
  auto order = detail::enumerate_states(spec, state_limit);

  std::map<ZtdState, double> vd_prof, va_prof, vd_br, va_br;
  std::map<ZtdState, PbneNodeCheck> checks;
  for (const ZtdState& s : order) {
    PbneNodeCheck chk;
    chk.state = s;
    if (attacker_action_set(*spec.graph, s).empty() ||
        s.time > spec.horizon) {
      vd_prof[s] = va_prof[s] = vd_br[s] = va_br[s] = 0.0;
      checks[s] = chk;
      continue;
    }
    const Belief& b = beliefs.at(s);
    const auto& x = pi_d.at(s);
    const auto& y = pi_a.at(s);

    // Profile value.
    StageGame gp = detail::build_stage_game(spec, s, b, legit, vd_prof,
                                            va_prof, nullptr);
    double vd = 0.0, va = 0.0;
    for (std::size_t i = 0; i < gp.defender_cost.size(); ++i)
      for (std::size_t j = 0; j < gp.defender_cost[i].size(); ++j) {
        vd += x[i] * y[j] * gp.defender_cost[i][j];
        va += x[i] * y[j] * gp.attacker_cost[i][j];
      }
    vd_prof[s] = vd;
    va_prof[s] = va;

    // Defender best response (deviates at every node, attacker fixed).
    StageGame gd = detail::build_stage_game(spec, s, b, legit, vd_br,
                                            va_prof, nullptr);
    double best_d = 1e300;
    for (std::size_t i = 0; i < gd.defender_cost.size(); ++i) {
      double c = 0.0;
      for (std::size_t j = 0; j < gd.defender_cost[i].size(); ++j)
        c += y[j] * gd.defender_cost[i][j];
      best_d = std::min(best_d, c);
    }
    vd_br[s] = best_d;

    // Attacker best response (defender fixed).
    StageGame ga = detail::build_stage_game(spec, s, b, legit, vd_prof,
                                            va_br, nullptr);
    double best_a = 1e300;
    for (std::size_t j = 0; j < ga.attacker_cost[0].size(); ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < ga.attacker_cost.size(); ++i)
        c += x[i] * ga.attacker_cost[i][j];
      best_a = std::min(best_a, c);
    }
    va_br[s] = best_a;

    chk.gain_d = vd_prof[s] - vd_br[s];
    chk.gain_a = va_prof[s] - va_br[s];
    checks[s] = chk;
  }

  // Forward occupancy under the profile for C1.
  std::map<ZtdState, std::vector<double>> mu;
  ZtdState s0 = initial_state(*spec.graph);
  mu[s0] = {spec.prior(kTypeLegit), spec.prior(kTypeMalicious)};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const ZtdState& s = *it;
    auto mit = mu.find(s);
    if (mit == mu.end()) continue;
    auto frontier = attacker_action_set(*spec.graph, s);
    if (frontier.empty() || s.time >= spec.horizon) continue;
    auto defense = defender_action_set(spec, s);
    const auto& x = pi_d.at(s);
    const auto& y = pi_a.at(s);
    for (std::size_t i = 0; i < defense.size(); ++i) {
      if (x[i] <= 0.0) continue;
      for (std::size_t j = 0; j < frontier.size(); ++j) {
        const Edge& e = frontier[j];
        double pw[2] = {legit(e, s, kTypeLegit), y[j]};
        for (int w = 0; w < 2; ++w) {
          double p = mit->second[w] * x[i] * pw[w];
          if (p <= 0.0) continue;
          double pp = pass_probability(spec, defense[i], e, w);
          if (pp > 0.0) {
            auto& m = mu[apply_move(*spec.graph, s, e, true)];
            m.resize(2, 0.0);
            m[w] += p * pp;
          }
          if (pp < 1.0) {
            auto& m = mu[apply_move(*spec.graph, s, e, false)];
            m.resize(2, 0.0);
            m[w] += p * (1.0 - pp);
          }
        }
      }
    }
  }

  PbneReport report;
  for (const ZtdState& s : order) {
    PbneNodeCheck& chk = checks.at(s);
    auto mit = mu.find(s);
    if (mit != mu.end()) {
      double z = mit->second[0] + mit->second[1];
      if (z > 0.0) {
        chk.realizable = true;
        const Belief& b = beliefs.at(s);
        chk.c1_residual =
            std::max(std::fabs(b(0) - mit->second[0] / z),
                     std::fabs(b(1) - mit->second[1] / z));
      }
    }
    report.max_gain_d = std::max(report.max_gain_d, chk.gain_d);
    report.max_gain_a = std::max(report.max_gain_a, chk.gain_a);
    if (chk.realizable)
      report.max_c1_residual =
          std::max(report.max_c1_residual, chk.c1_residual);
    report.nodes.push_back(chk);
  }
  return report;
}

}  // namespace ddztd
