#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "ddztd/errors.hpp"

namespace ddztd {

// Probability vector over attacker types.  Entry 0 is the legitimate type;
// belief mass on it is the trust score.
class Belief {
 public:
  Belief() = default;

  explicit Belief(std::vector<double> probs) : p_(std::move(probs)) {
    validate_();
  }

  Belief(std::initializer_list<double> probs) : p_(probs) { validate_(); }

  static Belief uniform(std::size_t n_types) {
    return Belief(std::vector<double>(n_types, 1.0 / double(n_types)));
  }

  double operator()(std::size_t type) const { return p_.at(type); }
  std::size_t size() const { return p_.size(); }
  const std::vector<double>& probs() const { return p_; }

  // Trust score b(0): belief mass on the legitimate type.
  double trust_score() const { return p_.at(0); }

  // Bayes update with per-type likelihoods.  Throws UnrealizableObservation
  // when every product b(w)*l(w) vanishes; the caller owns the off-path rule.
  Belief updated(const std::vector<double>& likelihood) const {
    if (likelihood.size() != p_.size())
      throw DimensionMismatch("likelihood dimension does not match belief");
    std::vector<double> post(p_.size());
    double denom = 0.0;
    for (std::size_t w = 0; w < p_.size(); ++w) {
      if (likelihood[w] < 0.0)
        throw Error("negative likelihood");
      post[w] = p_[w] * likelihood[w];
      denom += post[w];
    }
    if (denom <= 0.0)
      throw UnrealizableObservation("all posterior products are zero");
    for (double& v : post) v /= denom;
    return Belief(std::move(post));
  }

  bool operator==(const Belief& other) const { return p_ == other.p_; }

 private:
  void validate_() const {
    if (p_.empty()) throw DimensionMismatch("empty belief");
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error("belief entry negative or non-finite");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw Error("belief does not sum to 1");
  }

  std::vector<double> p_;
};

inline Belief bte_update(const Belief& belief,
                         const std::vector<double>& likelihood_per_type) {
  return belief.updated(likelihood_per_type);
}

}  // namespace ddztd
