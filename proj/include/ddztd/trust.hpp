#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ddztd/aimg.hpp"
#include "ddztd/belief.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/rng.hpp"

namespace ddztd {

// Attacker policy density pi_A(a_A | s, omega), supplied by the caller.
using AttackerDensity =
    std::function<double(const Edge&, const ZtdState&, int type)>;

// Recursive Bayes update for the lateral-movement game: the emerging
// information at t+1 is (a_D, a_A, o, s'), and the per-type likelihood is
// the product of the transition, observation, and policy densities.
inline Belief bte_update_lateral(const Belief& belief, const AimgSpec& spec,
                                 const ZtdState& s, const DefenseAction& a_d,
                                 const Edge& a_a, int obs,
                                 const ZtdState& s_next,
                                 const AttackerDensity& pi_a) {
  ZtdState pass_state = apply_move(*spec.graph, s, a_a, true);
  ZtdState reject_state = apply_move(*spec.graph, s, a_a, false);
  bool is_pass = (s_next == pass_state);
  if (!is_pass && !(s_next == reject_state))
    throw IllegalMove("next state unreachable from (s, a_D, a_A)");

  std::vector<double> likelihood(belief.size());
  for (std::size_t w = 0; w < belief.size(); ++w) {
    double p_pass = pass_probability(spec, a_d, a_a, int(w));
    double p_trans = is_pass ? p_pass : 1.0 - p_pass;
    likelihood[w] = p_trans * observation_probability(spec, obs, int(w)) *
                    pi_a(a_a, s, int(w));
  }
  return belief.updated(likelihood);
}

// Attribute-based scoring: logistic of the weighted attribute sum, mapped to
// the trust score b(0).
inline Belief abte_score(const std::vector<double>& attributes,
                         const std::vector<double>& weights) {
  if (attributes.size() != weights.size())
    throw DimensionMismatch("attribute/weight dimension mismatch");
  double logit = 0.0;
  for (std::size_t i = 0; i < attributes.size(); ++i)
    logit += weights[i] * attributes[i];
  double trust = 1.0 / (1.0 + std::exp(-logit));
  return Belief{trust, 1.0 - trust};
}

// ----------------------------------------------------------------------
// Variational-Bayes trust engine over a finite observation alphabet.
//
// The information record is encoded as one symbol from a finite alphabet.
// The inference side q_phi(w | symbol) is a per-symbol softmax over types;
// the generative side p_theta(symbol | w) is a per-type softmax over symbols.

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros_like(const Matrix& m) {
  Matrix z(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) z[i].assign(m[i].size(), 0.0);
  return z;
}

struct VbModel {
  Matrix phi;    // [type][symbol] inference logits
  Matrix theta;  // [type][symbol] generative logits
  std::vector<double> prior;

  static VbModel zero(std::size_t n_types, std::size_t n_symbols,
                      std::vector<double> prior) {
    VbModel m;
    m.phi.assign(n_types, std::vector<double>(n_symbols, 0.0));
    m.theta.assign(n_types, std::vector<double>(n_symbols, 0.0));
    m.prior = std::move(prior);
    return m;
  }

  std::size_t n_types() const { return phi.size(); }
  std::size_t n_symbols() const { return phi.empty() ? 0 : phi[0].size(); }

  // q_phi(. | symbol): softmax over types of the symbol's logit column.
  std::vector<double> posterior(int symbol) const {
    std::vector<double> q(n_types());
    double mx = -1e300;
    for (std::size_t w = 0; w < n_types(); ++w)
      mx = std::max(mx, phi[w].at(symbol));
    double z = 0.0;
    for (std::size_t w = 0; w < n_types(); ++w)
      z += (q[w] = std::exp(phi[w][symbol] - mx));
    for (double& v : q) v /= z;
    return q;
  }

  // p_theta(. | type): softmax over symbols of the type's logit row.
  std::vector<double> emission(int type) const {
    const auto& row = theta.at(type);
    double mx = *std::max_element(row.begin(), row.end());
    std::vector<double> p(row.size());
    double z = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a)
      z += (p[a] = std::exp(row[a] - mx));
    for (double& v : p) v /= z;
    return p;
  }

  double log_joint(int symbol, int type) const {
    return std::log(prior.at(type)) + std::log(emission(type).at(symbol));
  }
};

// Exact ELBO by summing over the finite type space:
//   L = sum_w q(w|I) [ -log q(w|I) + log p(I, w) ].
inline double elbo_exact(const VbModel& model, int symbol) {
  auto q = model.posterior(symbol);
  double l = 0.0;
  for (std::size_t w = 0; w < q.size(); ++w) {
    if (q[w] <= 0.0) continue;
    l += q[w] * (-std::log(q[w]) + model.log_joint(symbol, int(w)));
  }
  return l;
}

// Monte-Carlo ELBO with M samples drawn from q_phi.
inline double elbo_estimate(const VbModel& model, int symbol, std::size_t m,
                            Rng& rng) {
  if (m < 1) throw Error("sample count must be >= 1");
  auto q = model.posterior(symbol);
  double acc = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    int w = int(rng.discrete(q));
    acc += -std::log(q[w]) + model.log_joint(symbol, w);
  }
  return acc / double(m);
}

// d/dphi log q(w | symbol) for softmax-over-types logits.
inline Matrix grad_log_q(const VbModel& model, int symbol, int type) {
  Matrix g = zeros_like(model.phi);
  auto q = model.posterior(symbol);
  for (std::size_t w = 0; w < q.size(); ++w)
    g[w][symbol] = (int(w) == type ? 1.0 : 0.0) - q[w];
  return g;
}

// d/dtheta log p(symbol | type) for softmax-over-symbols logits.
inline Matrix grad_log_p(const VbModel& model, int symbol, int type) {
  Matrix g = zeros_like(model.theta);
  auto p = model.emission(type);
  for (std::size_t a = 0; a < p.size(); ++a)
    g[type][a] = (int(a) == symbol ? 1.0 : 0.0) - p[a];
  return g;
}

inline void axpy(Matrix& y, double a, const Matrix& x) {
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y[i].size(); ++j) y[i][j] += a * x[i][j];
}

// Two-term score-function estimator of the ELBO gradient in phi:
//   (1/M) sum_l [ -log q(w_l|I) + log p(I, w_l) ] grad_phi log q(w_l|I).
inline Matrix grad_phi_estimate(const VbModel& model, int symbol,
                                std::size_t m, Rng& rng) {
  if (m < 1) throw Error("sample count must be >= 1");
  auto q = model.posterior(symbol);
  Matrix g = zeros_like(model.phi);
  for (std::size_t l = 0; l < m; ++l) {
    int w = int(rng.discrete(q));
    double f = -std::log(q[w]) + model.log_joint(symbol, w);
    axpy(g, f / double(m), grad_log_q(model, symbol, w));
  }
  return g;
}

// The vanishing score term (1/M) sum_l grad_phi log q(w_l|I), exposed so its
// zero mean can be checked on its own.
inline Matrix grad_phi_score_term(const VbModel& model, int symbol,
                                  std::size_t m, Rng& rng) {
  auto q = model.posterior(symbol);
  Matrix g = zeros_like(model.phi);
  for (std::size_t l = 0; l < m; ++l) {
    int w = int(rng.discrete(q));
    axpy(g, 1.0 / double(m), grad_log_q(model, symbol, w));
  }
  return g;
}

// (1/M) sum_l grad_theta log p(I, w_l).
inline Matrix grad_theta_estimate(const VbModel& model, int symbol,
                                  std::size_t m, Rng& rng) {
  if (m < 1) throw Error("sample count must be >= 1");
  auto q = model.posterior(symbol);
  Matrix g = zeros_like(model.theta);
  for (std::size_t l = 0; l < m; ++l) {
    int w = int(rng.discrete(q));
    axpy(g, 1.0 / double(m), grad_log_p(model, symbol, w));
  }
  return g;
}

// Exact ELBO gradients for the finite type space, usable both as a training
// mode and as a reference for the sampled estimators.
inline Matrix grad_phi_exact(const VbModel& model, int symbol) {
  auto q = model.posterior(symbol);
  Matrix g = zeros_like(model.phi);
  for (std::size_t w = 0; w < q.size(); ++w) {
    double f = -std::log(q[w]) + model.log_joint(symbol, int(w));
    // dq(w)/dphi[v][symbol] = q(w) (1{v==w} - q(v))
    for (std::size_t v = 0; v < q.size(); ++v)
      g[v][symbol] += q[w] * ((v == w ? 1.0 : 0.0) - q[v]) * f;
  }
  return g;
}

inline Matrix grad_theta_exact(const VbModel& model, int symbol) {
  auto q = model.posterior(symbol);
  Matrix g = zeros_like(model.theta);
  for (std::size_t w = 0; w < q.size(); ++w)
    axpy(g, q[w], grad_log_p(model, symbol, int(w)));
  return g;
}

// ----------------------------------------------------------------------
// Training.

// Synthetic dataset: a type is drawn from the prior, then a symbol from the
// true per-type emission table.  Only the symbols are kept.
inline std::vector<int> generate_dataset(const std::vector<double>& prior,
                                         const Matrix& true_emission,
                                         std::size_t n, Rng& rng) {
  std::vector<int> data;
  data.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int w = int(rng.discrete(prior));
    data.push_back(int(rng.discrete(true_emission.at(w))));
  }
  return data;
}

struct VbTrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::size_t mc_samples = 8;      // M, ignored in exact mode
  bool exact_gradients = false;    // sum over types instead of sampling
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct VbTrainResult {
  VbModel model;
  std::vector<double> train_curve;    // mean training ELBO per epoch
  std::vector<double> holdout_curve;  // mean held-out exact ELBO per epoch
};

inline double mean_exact_elbo(const VbModel& model,
                              const std::vector<int>& data) {
  double s = 0.0;
  for (int sym : data) s += elbo_exact(model, sym);
  return data.empty() ? 0.0 : s / double(data.size());
}

inline VbTrainResult vb_train(const std::vector<int>& dataset,
                              std::size_t n_types, std::size_t n_symbols,
                              const std::vector<double>& prior,
                              const VbTrainConfig& cfg) {
  if (dataset.empty()) throw EmptyDataset("vb_train requires data");
  for (int sym : dataset)
    if (sym < 0 || std::size_t(sym) >= n_symbols)
      throw UnknownSymbol("dataset symbol outside alphabet");

  std::size_t holdout = std::size_t(double(dataset.size()) *
                                    cfg.holdout_fraction);
  std::vector<int> train(dataset.begin(), dataset.end() - holdout);
  std::vector<int> held(dataset.end() - holdout, dataset.end());
  if (train.empty()) train = dataset;

  VbTrainResult res;
  res.model = VbModel::zero(n_types, n_symbols, prior);
  Rng rng(cfg.seed, 0x7b5);

  double init_holdout = mean_exact_elbo(res.model, held);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_elbo = 0.0;
    for (int sym : train) {
      Matrix gphi = cfg.exact_gradients
                        ? grad_phi_exact(res.model, sym)
                        : grad_phi_estimate(res.model, sym, cfg.mc_samples,
                                            rng);
      Matrix gtheta = cfg.exact_gradients
                          ? grad_theta_exact(res.model, sym)
                          : grad_theta_estimate(res.model, sym,
                                                cfg.mc_samples, rng);
      axpy(res.model.phi, cfg.learning_rate / double(train.size()), gphi);
      axpy(res.model.theta, cfg.learning_rate / double(train.size()), gtheta);
      epoch_elbo += elbo_exact(res.model, sym);
    }
    epoch_elbo /= double(train.size());
    if (!std::isfinite(epoch_elbo))
      throw NonFiniteLoss("training ELBO diverged at epoch " +
                          std::to_string(epoch));
    res.train_curve.push_back(epoch_elbo);
    res.holdout_curve.push_back(mean_exact_elbo(res.model, held));
  }
  if (!held.empty() && res.holdout_curve.back() < init_holdout - 1e-9)
    throw NonFiniteLoss("held-out ELBO fell below initialization");
  return res;
}

struct MlteResult {
  Belief belief;
  bool known_symbol = true;
};

// Posterior lookup; symbols outside the training alphabet fall back to the
// prior and are flagged.
inline MlteResult mlte_infer(const VbModel& model, int symbol) {
  if (symbol < 0 || std::size_t(symbol) >= model.n_symbols())
    return {Belief(model.prior), false};
  return {Belief(model.posterior(symbol)), true};
}

}  // namespace ddztd
