#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ddztd/belief.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/netgraph.hpp"
#include "ddztd/rng.hpp"

namespace ddztd {

// Attacker types: 0 is the legitimate user, 1 the malicious attacker.
inline constexpr int kTypeLegit = 0;
inline constexpr int kTypeMalicious = 1;

using DefenseAction = std::vector<Edge>;  // sorted subset of E^t

// The lateral-movement game: credential graph, type prior, MFA transition,
// IDS observation channel, and the type-dependent utilities.
struct AimgSpec {
  std::shared_ptr<const NetworkGraph> graph;
  Belief prior = Belief{0.5, 0.5};
  int horizon = 1;

  double mfa_cost_default = 1.0;          // c(e) fallback
  std::map<Edge, double> mfa_cost;        // per-edge override
  double breach_cost = 100.0;             // M
  double attacker_mfa_cost = 10.0;        // M-hat
  double target_reward = 50.0;            // R
  double move_cost_default = 1.0;         // u(s, a_A) fallback
  std::map<Edge, double> move_cost;       // per-edge override

  double pass_prob = 1.0;                 // legit MFA pass probability
  double false_alarm_rate = 0.0;          // alpha
  double detection_rate = 0.0;            // beta

  std::size_t defense_budget = 1;         // cap on |a_D|
  std::size_t enumeration_limit = 4096;   // defense action-set cap

  void validate() const {
    if (!graph) throw Error("AimgSpec has no graph");
    if (prior.size() != 2) throw Error("AimgSpec prior must be binary");
    if (horizon < 1) throw Error("horizon must be >= 1");
    if (!(pass_prob > 0.0 && pass_prob <= 1.0))
      throw Error("pass_prob must lie in (0, 1]");
    if (false_alarm_rate < 0.0 || false_alarm_rate > 1.0 ||
        detection_rate < 0.0 || detection_rate > 1.0)
      throw Error("IDS rates must lie in [0, 1]");
    if (detection_rate < false_alarm_rate)
      throw Error("detector must be informative (beta >= alpha)");
    if (breach_cost < 0.0 || attacker_mfa_cost < 0.0 || target_reward < 0.0)
      throw Error("costs must be nonnegative");
  }

  double edge_mfa_cost(const Edge& e) const {
    auto it = mfa_cost.find(e);
    return it == mfa_cost.end() ? mfa_cost_default : it->second;
  }

  double edge_move_cost(const Edge& e) const {
    auto it = move_cost.find(e);
    return it == move_cost.end() ? move_cost_default : it->second;
  }

  double defense_cost(const DefenseAction& a_d) const {
    double c = 0.0;
    for (const Edge& e : a_d) c += edge_mfa_cost(e);
    return c;
  }
};

inline std::vector<Edge> attacker_action_set(const AimgSpec& spec,
                                             const ZtdState& state) {
  return attacker_action_set(*spec.graph, state);
}

namespace detail {
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}
}  // namespace detail

// All subsets of E^t with cardinality <= budget, ordered by cardinality and
// lexicographically within each cardinality.
inline std::vector<DefenseAction> defender_action_set(const AimgSpec& spec,
                                                      const ZtdState& state,
                                                      std::size_t budget) {
  auto auth_edges = authentication_subgraph(*spec.graph, state);
  std::size_t cap = std::min(budget, auth_edges.size());
  std::uint64_t count = 0;
  for (std::size_t k = 0; k <= cap; ++k)
    count += detail::binomial(auth_edges.size(), k);
  if (count > spec.enumeration_limit)
    throw CombinatorialBlowup("defense action enumeration exceeds limit");

  std::vector<DefenseAction> out;
  out.reserve(count);
  std::vector<std::size_t> pick;
  auto emit = [&](auto&& self, std::size_t start, std::size_t k) -> void {
    if (pick.size() == k) {
      DefenseAction a;
      for (std::size_t i : pick) a.push_back(auth_edges[i]);
      out.push_back(std::move(a));
      return;
    }
    for (std::size_t i = start; i < auth_edges.size(); ++i) {
      pick.push_back(i);
      self(self, i + 1, k);
      pick.pop_back();
    }
  };
  for (std::size_t k = 0; k <= cap; ++k) emit(emit, 0, k);
  return out;
}

inline std::vector<DefenseAction> defender_action_set(const AimgSpec& spec,
                                                      const ZtdState& state) {
  return defender_action_set(spec, state, spec.defense_budget);
}

inline bool mfa_triggered(const DefenseAction& a_d, const Edge& a_a) {
  return std::binary_search(a_d.begin(), a_d.end(), a_a);
}

// Probability that the move passes given the joint action and type: the
// malicious type is rejected deterministically at an MFA edge, the legitimate
// one passes with pass_prob, and everyone passes an unguarded edge.
inline double pass_probability(const AimgSpec& spec, const DefenseAction& a_d,
                               const Edge& a_a, int type) {
  if (!mfa_triggered(a_d, a_a)) return 1.0;
  return type == kTypeLegit ? spec.pass_prob : 0.0;
}

// IDS emission: P(o=1 | type) is the detection rate for the malicious type
// and the false alarm rate otherwise.
inline double observation_probability(const AimgSpec& spec, int obs,
                                      int type) {
  double p1 = type == kTypeMalicious ? spec.detection_rate
                                     : spec.false_alarm_rate;
  return obs == 1 ? p1 : 1.0 - p1;
}

inline double defender_utility(const AimgSpec& spec, const ZtdState& state,
                               const DefenseAction& a_d, const Edge& /*a_a*/,
                               int type) {
  double cost = spec.defense_cost(a_d);
  if (type == kTypeMalicious && state.is_visited(spec.graph->target()))
    cost += spec.breach_cost;
  return cost;
}

inline double attacker_utility(const AimgSpec& spec, const ZtdState& state,
                               const DefenseAction& a_d, const Edge& a_a,
                               int type) {
  double cost = spec.edge_move_cost(a_a);
  if (type == kTypeMalicious && mfa_triggered(a_d, a_a))
    cost += spec.attacker_mfa_cost;
  if (state.is_visited(spec.graph->target())) cost -= spec.target_reward;
  return cost;
}

// Belief-expected defender utility.
inline double defender_utility(const AimgSpec& spec, const ZtdState& state,
                               const DefenseAction& a_d, const Edge& a_a,
                               const Belief& b) {
  double u = 0.0;
  for (std::size_t w = 0; w < b.size(); ++w)
    u += b(w) * defender_utility(spec, state, a_d, a_a, int(w));
  return u;
}

struct StepResult {
  ZtdState next_state;
  int observation = 0;
  bool passed = false;
  double u_d = 0.0;
  double u_a = 0.0;
};

inline StepResult step(const AimgSpec& spec, const ZtdState& state,
                       const DefenseAction& a_d, const Edge& a_a, int type,
                       Rng& rng) {
  bool passed = rng.bernoulli(pass_probability(spec, a_d, a_a, type));
  StepResult r;
  r.next_state = apply_move(*spec.graph, state, a_a, passed);
  r.passed = passed;
  r.observation = rng.bernoulli(type == kTypeMalicious
                                    ? spec.detection_rate
                                    : spec.false_alarm_rate)
                      ? 1
                      : 0;
  r.u_d = defender_utility(spec, state, a_d, a_a, type);
  r.u_a = attacker_utility(spec, state, a_d, a_a, type);
  return r;
}

// ----------------------------------------------------------------------
// Information-structure classification.

// One gameplay record together with per-player visibility flags.  Item kinds
// follow the history decomposition: the hidden type, the state, both actions,
// and the defender-side observation.
struct InfoRecord {
  enum Item { kType = 0, kState, kActionD, kActionA, kObservation, kItemCount };

  int time = 1;
  // visible[player][item]
  std::array<std::array<bool, kItemCount>, 2> visible{};
};

enum class Sidedness {
  kOneSidedSuperiorFirst,   // I_j^t strictly inside I_i^t at every t
  kOneSidedSuperiorSecond,  // the reverse
  kDoubleSided,             // both private differences at some t
  kSymmetric,               // identical information throughout
};

struct InfoClassification {
  Sidedness sidedness = Sidedness::kSymmetric;
  bool incomplete_first = false;   // type hidden from player i at all t
  bool incomplete_second = false;
  bool imperfect_first = false;    // some event hidden at some t
  bool imperfect_second = false;
};

inline InfoClassification classify_information_structure(
    const std::vector<InfoRecord>& records, int player_i, int player_j) {
  if (records.empty()) throw EmptyHistory("no gameplay records");

  using ItemKey = std::pair<int, int>;  // (time, item); type is (0, kType)
  std::array<std::set<ItemKey>, 2> info;
  std::set<ItemKey> history;

  bool superior_ij = true, superior_ji = true, double_sided = false;
  std::array<bool, 2> saw_type{false, false};
  std::array<bool, 2> imperfect{false, false};

  for (const InfoRecord& rec : records) {
    history.insert({0, InfoRecord::kType});
    for (int item = InfoRecord::kState; item < InfoRecord::kItemCount; ++item)
      history.insert({rec.time, item});
    for (int p : {0, 1}) {
      int pl = p == 0 ? player_i : player_j;
      if (rec.visible.at(pl)[InfoRecord::kType]) {
        info[p].insert({0, InfoRecord::kType});
        saw_type[p] = true;
      }
      for (int item = InfoRecord::kState; item < InfoRecord::kItemCount;
           ++item)
        if (rec.visible.at(pl)[item]) info[p].insert({rec.time, item});
    }

    auto subset = [](const std::set<ItemKey>& a, const std::set<ItemKey>& b) {
      return std::includes(b.begin(), b.end(), a.begin(), a.end());
    };
    bool i_in_j = subset(info[0], info[1]);
    bool j_in_i = subset(info[1], info[0]);
    if (!(j_in_i && !i_in_j)) superior_ij = false;
    if (!(i_in_j && !j_in_i)) superior_ji = false;
    if (!i_in_j && !j_in_i) double_sided = true;

    for (int p : {0, 1}) {
      // Compare I^t and H^t with the type element removed.
      std::size_t info_events = info[p].size() - (saw_type[p] ? 1 : 0);
      if (info_events < history.size() - 1) imperfect[p] = true;
    }
  }

  InfoClassification out;
  if (superior_ij)
    out.sidedness = Sidedness::kOneSidedSuperiorFirst;
  else if (superior_ji)
    out.sidedness = Sidedness::kOneSidedSuperiorSecond;
  else if (double_sided)
    out.sidedness = Sidedness::kDoubleSided;
  else
    out.sidedness = Sidedness::kSymmetric;
  out.incomplete_first = !saw_type[0];
  out.incomplete_second = !saw_type[1];
  out.imperfect_first = imperfect[0];
  out.imperfect_second = imperfect[1];
  return out;
}

}  // namespace ddztd
