#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ddztd/aimg.hpp"
#include "ddztd/ddztd_case.hpp"
#include "ddztd/dynkin.hpp"
#include "ddztd/errors.hpp"
#include "ddztd/meta.hpp"

namespace ddztd {

using Json = nlohmann::json;

inline constexpr int kConfigSchemaVersion = 1;

namespace cfg_detail {

inline void expect_object(const Json& j, const std::string& path) {
  if (!j.is_object())
    throw ConfigInvalid("config error at " + path + ": expected an object");
}

inline void reject_unknown(const Json& j, const std::string& path,
                           std::initializer_list<const char*> keys) {
  expect_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys)
      if (it.key() == k) known = true;
    if (!known)
      throw ConfigInvalid("config error at " + path + ": unknown key '" +
                          it.key() + "'");
  }
}

inline const Json& require(const Json& j, const std::string& path,
                           const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigInvalid("config error at " + path + ": missing key '" +
                        std::string(key) + "'");
  return *it;
}

template <class T>
T as(const Json& j, const std::string& path, const char* key) {
  try {
    return require(j, path, key).get<T>();
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigInvalid("config error at " + path + "/" + key + ": " +
                        e.what());
  }
}

template <class T>
T get_or(const Json& j, const std::string& path, const char* key, T def) {
  if (j.find(key) == j.end()) return def;
  return as<T>(j, path, key);
}

inline std::vector<std::vector<double>> matrix(const Json& j,
                                               const std::string& path,
                                               const char* key) {
  return as<std::vector<std::vector<double>>>(j, path, key);
}

}  // namespace cfg_detail

struct TrainingConfig {
  std::size_t iterations = 100;
  double a = 0.2;
  double big_a = 10.0;
  double c = 0.2;
  std::size_t grad_draws = 1;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double grad_tol = 1e-3;
  std::size_t policy_slots = 8;
  double tol = 1e-9;
  std::size_t max_iter = 100;
};

struct VbConfig {
  std::size_t n_types = 2;
  std::size_t n_symbols = 3;
  std::vector<double> prior{0.5, 0.5};
  std::vector<std::vector<double>> true_emission;
  std::size_t n_samples = 2000;
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::size_t mc_samples = 8;
  bool exact_gradients = true;
  double holdout_fraction = 0.2;
};

struct MetaConfig {
  std::size_t iterations = 40;
  double a = 0.4;
  double big_a = 5.0;
  double c = 0.1;
  double gamma_max = 1.0;
  std::size_t grad_draws = 2;
  double perturbation = 0.15;
  double baseline_threshold = 0.5;
};

struct VerifyConfig {
  double tol_gain = 1e-8;
  double tol_c1 = 1e-9;
  double dde_tol = 1e-9;
  std::uint64_t rule_cap = 1ull << 20;
};

struct ExperimentConfig {
  int version = kConfigSchemaVersion;
  std::uint64_t seed = 0;

  bool has_aimg = false;
  AimgSpec aimg;

  std::string trust_engine = "bte";
  double trust_threshold = 0.5;

  TrainingConfig training;
  std::size_t simulate_rollouts = 10;

  bool has_scenarios = false;
  std::vector<Scenario> scenarios;
  MetaConfig meta;

  bool has_dynkin = false;
  DynkinGameSpec dynkin;

  bool has_ddgia = false;
  DdgiaSpec ddgia;  // game field mirrors `dynkin`
  std::uint64_t ddgia_pair_cap = 1ull << 16;

  bool has_log = false;
  LogModel log;
  CaseStudyConfig case_study;  // aimg/log/seed filled from the sections above

  VbConfig vb;
  VerifyConfig verify;
};

namespace cfg_detail {

inline std::shared_ptr<NetworkGraph> parse_graph(const Json& j) {
  reject_unknown(j, "/graph", {"nodes", "edges", "entry", "target"});
  auto nodes = as<std::vector<std::string>>(j, "/graph", "nodes");
  auto raw_edges =
      as<std::vector<std::vector<std::string>>>(j, "/graph", "edges");
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : raw_edges) {
    if (e.size() != 2)
      throw ConfigInvalid("config error at /graph/edges: an edge is a pair");
    edges.emplace_back(e[0], e[1]);
  }
  try {
    return std::make_shared<NetworkGraph>(
        build_graph(nodes, edges, as<std::string>(j, "/graph", "entry"),
                    as<std::string>(j, "/graph", "target")));
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("config error at /graph: ") + e.what());
  }
}

inline void apply_aimg_fields(AimgSpec& spec, const Json& j,
                              const std::string& path) {
  reject_unknown(j, path,
                 {"horizon", "prior_malicious", "mfa_cost", "breach_cost",
                  "attacker_mfa_cost", "target_reward", "move_cost",
                  "pass_prob", "false_alarm_rate", "detection_rate",
                  "defense_budget", "enumeration_limit"});
  spec.horizon = get_or<int>(j, path, "horizon", spec.horizon);
  if (j.contains("prior_malicious")) {
    double m = as<double>(j, path, "prior_malicious");
    if (m < 0.0 || m > 1.0)
      throw ConfigInvalid("config error at " + path +
                          "/prior_malicious: outside [0,1]");
    spec.prior = Belief{1.0 - m, m};
  }
  spec.mfa_cost_default =
      get_or<double>(j, path, "mfa_cost", spec.mfa_cost_default);
  spec.breach_cost = get_or<double>(j, path, "breach_cost", spec.breach_cost);
  spec.attacker_mfa_cost =
      get_or<double>(j, path, "attacker_mfa_cost", spec.attacker_mfa_cost);
  spec.target_reward =
      get_or<double>(j, path, "target_reward", spec.target_reward);
  spec.move_cost_default =
      get_or<double>(j, path, "move_cost", spec.move_cost_default);
  spec.pass_prob = get_or<double>(j, path, "pass_prob", spec.pass_prob);
  spec.false_alarm_rate =
      get_or<double>(j, path, "false_alarm_rate", spec.false_alarm_rate);
  spec.detection_rate =
      get_or<double>(j, path, "detection_rate", spec.detection_rate);
  spec.defense_budget =
      get_or<std::size_t>(j, path, "defense_budget", spec.defense_budget);
  spec.enumeration_limit = get_or<std::size_t>(j, path, "enumeration_limit",
                                               spec.enumeration_limit);
}

inline DynkinGameSpec parse_dynkin(const Json& j) {
  reject_unknown(j, "/dynkin",
                 {"transition", "phi", "zeta", "psi", "horizon", "initial"});
  DynkinGameSpec spec;
  spec.transition = matrix(j, "/dynkin", "transition");
  spec.phi = as<std::vector<double>>(j, "/dynkin", "phi");
  spec.zeta = as<std::vector<double>>(j, "/dynkin", "zeta");
  spec.psi = as<std::vector<double>>(j, "/dynkin", "psi");
  spec.horizon = as<int>(j, "/dynkin", "horizon");
  if (j.contains("initial"))
    spec.initial = as<std::vector<double>>(j, "/dynkin", "initial");
  else if (!spec.transition.empty())
    spec.initial = point_mass(spec.transition.size(), 0);
  return spec;
}

inline LogModel parse_log_model(const Json& j) {
  reject_unknown(j, "/log_model",
                 {"symbols", "transition", "cutoff_cost", "exploit_loss",
                  "malicious_prior", "initial"});
  LogModel log;
  log.symbols = as<std::vector<std::string>>(j, "/log_model", "symbols");
  log.transition = matrix(j, "/log_model", "transition");
  log.cutoff_cost = as<std::vector<double>>(j, "/log_model", "cutoff_cost");
  log.exploit_loss = as<std::vector<double>>(j, "/log_model", "exploit_loss");
  log.malicious_prior =
      as<std::vector<double>>(j, "/log_model", "malicious_prior");
  log.initial = as<std::vector<double>>(j, "/log_model", "initial");
  return log;
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(const Json& j) {
  using namespace cfg_detail;
  reject_unknown(j, "/",
                 {"version", "seed", "graph", "aimg", "trust", "training",
                  "simulate", "scenarios", "meta", "dynkin", "ddgia",
                  "log_model", "case", "vb", "verify"});
  ExperimentConfig cfg;
  cfg.version = as<int>(j, "/", "version");
  if (cfg.version != kConfigSchemaVersion)
    throw ConfigInvalid("config error at /version: unsupported schema version");
  cfg.seed = as<std::uint64_t>(j, "/", "seed");  // mandatory

  if (j.contains("graph") || j.contains("aimg")) {
    cfg.aimg.graph = parse_graph(require(j, "/", "graph"));
    if (j.contains("aimg")) apply_aimg_fields(cfg.aimg, j.at("aimg"), "/aimg");
    try {
      cfg.aimg.validate();
    } catch (const Error& e) {
      throw ConfigInvalid(std::string("config error at /aimg: ") + e.what());
    }
    cfg.has_aimg = true;
  }

  if (j.contains("trust")) {
    const Json& t = j.at("trust");
    reject_unknown(t, "/trust", {"engine", "threshold"});
    cfg.trust_engine = get_or<std::string>(t, "/trust", "engine", "bte");
    if (cfg.trust_engine != "bte")
      throw ConfigInvalid(
          "config error at /trust/engine: only 'bte' is supported");
    cfg.trust_threshold =
        get_or<double>(t, "/trust", "threshold", cfg.trust_threshold);
    if (cfg.trust_threshold < 0.0 || cfg.trust_threshold > 1.0)
      throw ConfigInvalid("config error at /trust/threshold: outside [0,1]");
  }

  if (j.contains("training")) {
    const Json& t = j.at("training");
    reject_unknown(t, "/training",
                   {"iterations", "a", "big_a", "c", "grad_draws",
                    "batch_size", "learning_rate", "grad_tol", "policy_slots",
                    "tol", "max_iter"});
    TrainingConfig& tr = cfg.training;
    tr.iterations = get_or<std::size_t>(t, "/training", "iterations",
                                        tr.iterations);
    tr.a = get_or<double>(t, "/training", "a", tr.a);
    tr.big_a = get_or<double>(t, "/training", "big_a", tr.big_a);
    tr.c = get_or<double>(t, "/training", "c", tr.c);
    tr.grad_draws =
        get_or<std::size_t>(t, "/training", "grad_draws", tr.grad_draws);
    tr.batch_size =
        get_or<std::size_t>(t, "/training", "batch_size", tr.batch_size);
    tr.learning_rate =
        get_or<double>(t, "/training", "learning_rate", tr.learning_rate);
    tr.grad_tol = get_or<double>(t, "/training", "grad_tol", tr.grad_tol);
    tr.policy_slots =
        get_or<std::size_t>(t, "/training", "policy_slots", tr.policy_slots);
    tr.tol = get_or<double>(t, "/training", "tol", tr.tol);
    tr.max_iter = get_or<std::size_t>(t, "/training", "max_iter", tr.max_iter);
  }

  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    reject_unknown(s, "/simulate", {"rollouts"});
    cfg.simulate_rollouts =
        get_or<std::size_t>(s, "/simulate", "rollouts", cfg.simulate_rollouts);
  }

  if (j.contains("scenarios")) {
    if (!cfg.has_aimg)
      throw ConfigInvalid(
          "config error at /scenarios: requires a /graph section");
    const Json& arr = j.at("scenarios");
    if (!arr.is_array())
      throw ConfigInvalid("config error at /scenarios: expected an array");
    std::size_t k = 0;
    for (const Json& sj : arr) {
      std::string path = "/scenarios/" + std::to_string(k++);
      reject_unknown(sj, path, {"id", "weight", "overrides"});
      Scenario sc;
      sc.id = as<std::string>(sj, path, "id");
      sc.weight = get_or<double>(sj, path, "weight", 1.0);
      sc.spec = cfg.aimg;
      if (sj.contains("overrides"))
        apply_aimg_fields(sc.spec, sj.at("overrides"), path + "/overrides");
      try {
        sc.spec.validate();
      } catch (const Error& e) {
        throw ConfigInvalid("config error at " + path + ": " + e.what());
      }
      cfg.scenarios.push_back(std::move(sc));
    }
    cfg.has_scenarios = true;
  }

  if (j.contains("meta")) {
    const Json& m = j.at("meta");
    reject_unknown(m, "/meta",
                   {"iterations", "a", "big_a", "c", "gamma_max", "grad_draws",
                    "perturbation", "baseline_threshold"});
    MetaConfig& mc = cfg.meta;
    mc.iterations = get_or<std::size_t>(m, "/meta", "iterations",
                                        mc.iterations);
    mc.a = get_or<double>(m, "/meta", "a", mc.a);
    mc.big_a = get_or<double>(m, "/meta", "big_a", mc.big_a);
    mc.c = get_or<double>(m, "/meta", "c", mc.c);
    mc.gamma_max = get_or<double>(m, "/meta", "gamma_max", mc.gamma_max);
    mc.grad_draws =
        get_or<std::size_t>(m, "/meta", "grad_draws", mc.grad_draws);
    mc.perturbation =
        get_or<double>(m, "/meta", "perturbation", mc.perturbation);
    mc.baseline_threshold = get_or<double>(m, "/meta", "baseline_threshold",
                                           mc.baseline_threshold);
  }

  if (j.contains("dynkin")) {
    cfg.dynkin = cfg_detail::parse_dynkin(j.at("dynkin"));
    cfg.has_dynkin = true;
  }

  if (j.contains("ddgia")) {
    if (!cfg.has_dynkin)
      throw ConfigInvalid("config error at /ddgia: requires a /dynkin section");
    const Json& d = j.at("ddgia");
    reject_unknown(d, "/ddgia",
                   {"n_obs_tau", "n_obs_sigma", "emission", "pair_cap"});
    cfg.ddgia.game = cfg.dynkin;
    cfg.ddgia.n_obs_tau = as<std::size_t>(d, "/ddgia", "n_obs_tau");
    cfg.ddgia.n_obs_sigma = as<std::size_t>(d, "/ddgia", "n_obs_sigma");
    cfg.ddgia.emission = matrix(d, "/ddgia", "emission");
    cfg.ddgia_pair_cap =
        get_or<std::uint64_t>(d, "/ddgia", "pair_cap", cfg.ddgia_pair_cap);
    cfg.has_ddgia = true;
  }

  if (j.contains("log_model")) {
    cfg.log = cfg_detail::parse_log_model(j.at("log_model"));
    try {
      cfg.log.validate();
    } catch (const Error& e) {
      throw ConfigInvalid(std::string("config error at /log_model: ") +
                          e.what());
    }
    cfg.has_log = true;
  }

  if (j.contains("case")) {
    const Json& c = j.at("case");
    reject_unknown(c, "/case",
                   {"episodes", "n_rollouts", "bucket_width", "threshold",
                    "run_verification", "verify_rule_cap", "state_limit"});
    CaseStudyConfig& cs = cfg.case_study;
    cs.episodes = get_or<int>(c, "/case", "episodes", cs.episodes);
    cs.n_rollouts =
        get_or<std::size_t>(c, "/case", "n_rollouts", cs.n_rollouts);
    cs.bucket_width =
        get_or<double>(c, "/case", "bucket_width", cs.bucket_width);
    cs.threshold = get_or<double>(c, "/case", "threshold", cs.threshold);
    cs.run_verification =
        get_or<bool>(c, "/case", "run_verification", cs.run_verification);
    cs.verify_rule_cap = get_or<std::uint64_t>(c, "/case", "verify_rule_cap",
                                               cs.verify_rule_cap);
    cs.state_limit =
        get_or<std::size_t>(c, "/case", "state_limit", cs.state_limit);
  }

  if (j.contains("vb")) {
    const Json& v = j.at("vb");
    reject_unknown(v, "/vb",
                   {"n_types", "n_symbols", "prior", "true_emission",
                    "n_samples", "epochs", "learning_rate", "mc_samples",
                    "exact_gradients", "holdout_fraction"});
    VbConfig& vb = cfg.vb;
    vb.n_types = get_or<std::size_t>(v, "/vb", "n_types", vb.n_types);
    vb.n_symbols = get_or<std::size_t>(v, "/vb", "n_symbols", vb.n_symbols);
    if (v.contains("prior"))
      vb.prior = as<std::vector<double>>(v, "/vb", "prior");
    if (v.contains("true_emission"))
      vb.true_emission = matrix(v, "/vb", "true_emission");
    vb.n_samples = get_or<std::size_t>(v, "/vb", "n_samples", vb.n_samples);
    vb.epochs = get_or<std::size_t>(v, "/vb", "epochs", vb.epochs);
    vb.learning_rate =
        get_or<double>(v, "/vb", "learning_rate", vb.learning_rate);
    vb.mc_samples = get_or<std::size_t>(v, "/vb", "mc_samples", vb.mc_samples);
    vb.exact_gradients =
        get_or<bool>(v, "/vb", "exact_gradients", vb.exact_gradients);
    vb.holdout_fraction =
        get_or<double>(v, "/vb", "holdout_fraction", vb.holdout_fraction);
  }

  if (j.contains("verify")) {
    const Json& v = j.at("verify");
    reject_unknown(v, "/verify", {"tol_gain", "tol_c1", "dde_tol", "rule_cap"});
    cfg.verify.tol_gain =
        get_or<double>(v, "/verify", "tol_gain", cfg.verify.tol_gain);
    cfg.verify.tol_c1 =
        get_or<double>(v, "/verify", "tol_c1", cfg.verify.tol_c1);
    cfg.verify.dde_tol =
        get_or<double>(v, "/verify", "dde_tol", cfg.verify.dde_tol);
    cfg.verify.rule_cap =
        get_or<std::uint64_t>(v, "/verify", "rule_cap", cfg.verify.rule_cap);
  }

  cfg.case_study.aimg = cfg.aimg;
  cfg.case_study.log = cfg.log;
  cfg.case_study.seed = cfg.seed;
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path,
                                    std::string* raw_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string raw = buf.str();
  if (raw_out) *raw_out = raw;
  Json j;
  try {
    j = Json::parse(raw);
  } catch (const std::exception& e) {
    throw ConfigInvalid(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

// Stable hash of the raw config text, recorded in the run manifest.
inline std::uint64_t config_hash(const std::string& raw) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : raw) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ddztd
