// Command-line harness: every experiment driver reads one JSON config, seeds
// all randomness from it, and writes CSV artifacts plus a run manifest into
// the output directory.  Identical config + seed reproduce identical bytes.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ddztd/config.hpp"
#include "ddztd/csv.hpp"
#include "ddztd/ddztd_case.hpp"
#include "ddztd/dynkin.hpp"
#include "ddztd/equilibrium.hpp"
#include "ddztd/meta.hpp"
#include "ddztd/policies.hpp"
#include "ddztd/trust.hpp"

namespace {

using namespace ddztd;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerificationFailure = 2;

bool verbose() {
  const char* v = std::getenv("DDZTD_LOG");
  return v != nullptr && std::string(v) != "" && std::string(v) != "off";
}

void log_line(const std::string& msg) {
  if (verbose()) std::cerr << "[ddztd] " << msg << "\n";
}

struct RunContext {
  ExperimentConfig cfg;
  std::string raw_config;
  std::filesystem::path out_dir;
  std::vector<std::string> outputs;

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (out_dir / name).string();
  }

  void write_manifest(const std::string& subcommand) {
    Json m;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  (unsigned long long)config_hash(raw_config));
    m["subcommand"] = subcommand;
    m["config_hash"] = std::string(hash);
    m["seed"] = cfg.seed;
    m["schema_version"] = kConfigSchemaVersion;
    m["outputs"] = outputs;
    std::ofstream out(out_dir / "manifest.json");
    out << m.dump(2) << "\n";
  }
};

void write_summary(RunContext& ctx,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
  CsvWriter csv(ctx.path("summary.csv"), {"key", "value"});
  for (const auto& [k, v] : kv) csv.row(std::vector<std::string>{k, v});
}

std::uint64_t visited_mask(const ZtdState& s) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < s.visited.size(); ++i)
    if (s.visited[i]) m |= 1ull << i;
  return m;
}

void require_section(bool present, const std::string& name) {
  if (!present)
    throw ConfigInvalid("this subcommand requires the /" + name +
                        " config section");
}

// ----------------------------------------------------------------------

int cmd_simulate(RunContext& ctx) {
  require_section(ctx.cfg.has_aimg, "graph");
  const AimgSpec& spec = ctx.cfg.aimg;
  AttackerPolicy attacker = uniform_attacker(spec);
  TrustEngine engine = make_bte_engine(spec, attacker.density);
  DefenderPolicy defender = sampled_defender(
      make_threshold_defender(spec, ThresholdPolicy{{ctx.cfg.trust_threshold}}));

  CsvWriter csv(ctx.path("trajectories.csv"),
                {"traj", "step", "time", "type", "trust", "guards",
                 "edge_tail", "edge_head", "observation", "passed", "u_d",
                 "u_a"});
  Rng rng(ctx.cfg.seed, 0x510);
  for (std::size_t i = 0; i < ctx.cfg.simulate_rollouts; ++i) {
    int type = rng.bernoulli(spec.prior(1)) ? kTypeMalicious : kTypeLegit;
    Trajectory traj = rollout(spec, defender, attacker, type, engine, rng);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
      const StepRecord& rec = traj.steps[k];
      csv.row(std::vector<double>{
          double(i), double(k), double(rec.state.time), double(type),
          rec.belief.trust_score(), double(rec.a_d.size()),
          double(rec.a_a.tail), double(rec.a_a.head), double(rec.obs),
          double(rec.passed), rec.u_d, rec.u_a});
    }
  }
  write_summary(ctx, {{"rollouts", std::to_string(ctx.cfg.simulate_rollouts)}});
  return kExitOk;
}

int cmd_train_threshold(RunContext& ctx) {
  require_section(ctx.cfg.has_aimg, "graph");
  const AimgSpec& spec = ctx.cfg.aimg;
  AttackerPolicy attacker = uniform_attacker(spec);
  TrustEngine engine = make_bte_engine(spec, attacker.density);
  SpsaConfig scfg;
  scfg.iterations = ctx.cfg.training.iterations;
  scfg.a = ctx.cfg.training.a;
  scfg.big_a = ctx.cfg.training.big_a;
  scfg.c = ctx.cfg.training.c;
  scfg.grad_draws = ctx.cfg.training.grad_draws;
  scfg.seed = ctx.cfg.seed;
  auto res = train_threshold_spsa(spec, attacker, engine, scfg,
                                  ctx.cfg.trust_threshold);

  CsvWriter csv(ctx.path("threshold_curve.csv"), {"iteration", "value"});
  for (std::size_t i = 0; i < res.value_curve.size(); ++i)
    csv.row(std::vector<double>{double(i), res.value_curve[i]});
  Objective f = threshold_value_objective(spec, attacker, engine);
  write_summary(ctx,
                {{"threshold", format_double(res.policy.thresholds[0])},
                 {"value", format_double(f({res.policy.thresholds[0]}))}});
  return kExitOk;
}

int cmd_train_pg(RunContext& ctx) {
  require_section(ctx.cfg.has_aimg, "graph");
  const AimgSpec& spec = ctx.cfg.aimg;
  AttackerPolicy attacker = uniform_attacker(spec);
  TrustEngine engine = make_bte_engine(spec, attacker.density);
  PgConfig pcfg;
  pcfg.iterations = ctx.cfg.training.iterations;
  pcfg.batch_size = ctx.cfg.training.batch_size;
  pcfg.learning_rate = ctx.cfg.training.learning_rate;
  pcfg.grad_tol = ctx.cfg.training.grad_tol;
  pcfg.policy_slots = ctx.cfg.training.policy_slots;
  pcfg.seed = ctx.cfg.seed;
  auto res = train_policy_gradient(spec, attacker, engine, pcfg);

  CsvWriter csv(ctx.path("pg_curve.csv"), {"iteration", "value"});
  for (std::size_t i = 0; i < res.value_curve.size(); ++i)
    csv.row(std::vector<double>{double(i), res.value_curve[i]});
  CsvWriter wcsv(ctx.path("pg_weights.csv"), {"slot", "feature", "weight"});
  for (std::size_t s = 0; s < res.policy.weights.size(); ++s)
    for (std::size_t f = 0; f < res.policy.weights[s].size(); ++f)
      wcsv.row(std::vector<double>{double(s), double(f),
                                   res.policy.weights[s][f]});
  write_summary(ctx, {{"converged", res.converged ? "1" : "0"},
                      {"final_value", format_double(res.value_curve.empty()
                                                        ? 0.0
                                                        : res.value_curve
                                                              .back())}});
  return kExitOk;
}

int cmd_train_vb(RunContext& ctx) {
  VbConfig vb = ctx.cfg.vb;
  if (vb.true_emission.empty()) {
    if (vb.n_types != 2 || vb.n_symbols != 3)
      throw ConfigInvalid("config error at /vb: true_emission is required "
                          "unless n_types=2 and n_symbols=3");
    vb.true_emission = {{0.7, 0.2, 0.1}, {0.1, 0.2, 0.7}};
  }
  Rng data_rng(ctx.cfg.seed, 0x7b0);
  auto dataset =
      generate_dataset(vb.prior, vb.true_emission, vb.n_samples, data_rng);
  VbTrainConfig tcfg;
  tcfg.epochs = vb.epochs;
  tcfg.learning_rate = vb.learning_rate;
  tcfg.mc_samples = vb.mc_samples;
  tcfg.exact_gradients = vb.exact_gradients;
  tcfg.holdout_fraction = vb.holdout_fraction;
  tcfg.seed = ctx.cfg.seed;
  auto res = vb_train(dataset, vb.n_types, vb.n_symbols, vb.prior, tcfg);

  CsvWriter csv(ctx.path("vb_curves.csv"),
                {"epoch", "train_elbo", "holdout_elbo"});
  for (std::size_t e = 0; e < res.train_curve.size(); ++e)
    csv.row(std::vector<double>{double(e), res.train_curve[e],
                                res.holdout_curve[e]});
  CsvWriter ecsv(ctx.path("vb_emission.csv"), {"type", "symbol", "prob"});
  for (std::size_t w = 0; w < vb.n_types; ++w) {
    auto em = res.model.emission(int(w));
    for (std::size_t s = 0; s < em.size(); ++s)
      ecsv.row(std::vector<double>{double(w), double(s), em[s]});
  }
  write_summary(ctx,
                {{"final_train_elbo", format_double(res.train_curve.back())},
                 {"final_holdout_elbo",
                  format_double(res.holdout_curve.back())}});
  return kExitOk;
}

int cmd_bvi(RunContext& ctx) {
  require_section(ctx.cfg.has_aimg, "graph");
  const AimgSpec& spec = ctx.cfg.aimg;
  AttackerPolicy attacker = uniform_attacker(spec);
  auto res = bvi(spec, attacker.density, ctx.cfg.training.tol,
                 ctx.cfg.training.max_iter);
  log_line(res.converged ? "bvi converged" : "bvi did not converge");

  CsvWriter csv(ctx.path("bvi_nodes.csv"),
                {"time", "current", "visited_mask", "v_d", "v_a",
                 "belief_malicious"});
  for (const auto& [s, vd] : res.v_d)
    csv.row(std::vector<double>{double(s.time), double(s.current),
                                double(visited_mask(s)), vd, res.v_a.at(s),
                                res.beliefs.at(s)(1)});
  write_summary(ctx, {{"converged", res.converged ? "1" : "0"},
                      {"iterations", std::to_string(res.iterations)}});
  return kExitOk;
}

int cmd_train_meta(RunContext& ctx) {
  require_section(ctx.cfg.has_scenarios, "scenarios");
  MetaTrainConfig mcfg;
  mcfg.iterations = ctx.cfg.meta.iterations;
  mcfg.a = ctx.cfg.meta.a;
  mcfg.big_a = ctx.cfg.meta.big_a;
  mcfg.c = ctx.cfg.meta.c;
  mcfg.gamma_max = ctx.cfg.meta.gamma_max;
  mcfg.adapt.grad_draws = ctx.cfg.meta.grad_draws;
  mcfg.adapt.perturbation = ctx.cfg.meta.perturbation;
  mcfg.seed = ctx.cfg.seed;
  auto res = train_meta(ctx.cfg.scenarios, mcfg);

  CsvWriter csv(ctx.path("meta_curve.csv"), {"iteration", "objective"});
  for (std::size_t i = 0; i < res.curve.size(); ++i)
    csv.row(std::vector<double>{double(i), res.curve[i]});

  SpsaConfig scratch;
  scratch.iterations = ctx.cfg.training.iterations;
  scratch.a = ctx.cfg.training.a;
  scratch.big_a = ctx.cfg.training.big_a;
  scratch.c = ctx.cfg.training.c;
  scratch.seed = ctx.cfg.seed;
  auto rows = evaluate_generalization(res.policy, ctx.cfg.scenarios,
                                      ctx.cfg.meta.baseline_threshold,
                                      mcfg.adapt, scratch, ctx.cfg.seed);
  CsvWriter gcsv(ctx.path("generalization.csv"),
                 {"scenario", "v_adapted", "v_baseline", "v_scratch"});
  for (const auto& row : rows)
    gcsv.row({row.scenario_id, format_double(row.v_adapted),
              format_double(row.v_baseline), format_double(row.v_scratch)});

  double j = meta_objective(ctx.cfg.scenarios, res.policy.tau_meta,
                            res.policy.gamma, mcfg.adapt, ctx.cfg.seed);
  write_summary(ctx, {{"tau_meta", format_double(res.policy.tau_meta)},
                      {"gamma", format_double(res.policy.gamma)},
                      {"objective", format_double(j)}});
  return kExitOk;
}

void write_dynkin_solution(RunContext& ctx, const DynkinGameSpec& game,
                           const DynkinSolution& sol) {
  CsvWriter csv(ctx.path("dynkin_values.csv"),
                {"t", "state", "value", "tau_stop", "sigma_stop"});
  for (std::size_t t = 0; t < sol.values.size(); ++t)
    for (std::size_t x = 0; x < game.size(); ++x)
      csv.row(std::vector<double>{double(t), double(x), sol.values[t][x],
                                  double(sol.tau.stop[t][x]),
                                  double(sol.sigma.stop[t][x])});
}

int cmd_solve_dynkin(RunContext& ctx) {
  require_section(ctx.cfg.has_dynkin, "dynkin");
  const DynkinGameSpec& game = ctx.cfg.dynkin;
  PayoffOrdering ordering = classify_ordering(game);
  if (ordering == PayoffOrdering::Mixed)
    throw Error("mixed ordering: neither solver applies");
  DynkinSolution sol = ordering == PayoffOrdering::Adc ? solve_adc(game)
                                                       : solve_ddc(game);
  write_dynkin_solution(ctx, game, sol);

  std::string verified = "skipped";
  int code = kExitOk;
  try {
    auto report = verify_dde(game, sol.tau, sol.sigma, ctx.cfg.verify.dde_tol,
                             ctx.cfg.verify.rule_cap);
    verified = report.passed ? "pass" : "fail";
    if (!report.passed) code = kExitVerificationFailure;
  } catch (const StateSpaceTooLarge&) {
    log_line("instance too large for exhaustive verification");
  }
  double v0 = 0.0;
  for (std::size_t x = 0; x < game.size(); ++x)
    v0 += game.initial[x] * sol.values[0][x];
  write_summary(
      ctx, {{"ordering", ordering == PayoffOrdering::Adc ? "adc" : "ddc"},
            {"value", format_double(v0)},
            {"verification", verified}});
  return code;
}

int cmd_ddgia_bounds(RunContext& ctx) {
  require_section(ctx.cfg.has_ddgia, "ddgia");
  auto bounds = ddgia_bounds(ctx.cfg.ddgia, ctx.cfg.ddgia_pair_cap);
  CsvWriter csv(ctx.path("ddgia_bounds.csv"), {"state", "lower", "upper"});
  for (std::size_t x = 0; x < bounds.lower.size(); ++x)
    csv.row(std::vector<double>{double(x), bounds.lower[x], bounds.upper[x]});
  write_summary(ctx, {{"max_gap", format_double(bounds.max_gap())},
                      {"rules_tau", std::to_string(bounds.rules_tau)},
                      {"rules_sigma", std::to_string(bounds.rules_sigma)}});
  return kExitOk;
}

int cmd_case_study(RunContext& ctx) {
  require_section(ctx.cfg.has_aimg, "graph");
  require_section(ctx.cfg.has_log, "log_model");
  CaseStudyConfig cs = ctx.cfg.case_study;
  cs.seed = ctx.cfg.seed;
  cs.threshold = ctx.cfg.trust_threshold;
  auto report = run_dd_ztd(cs);

  CsvWriter scsv(ctx.path("case_states.csv"),
                 {"state", "episode", "bucket", "symbol", "phi", "zeta", "psi",
                  "initial"});
  for (std::size_t i = 0; i < report.chain.states.size(); ++i) {
    const ChainState& s = report.chain.states[i];
    scsv.row(std::vector<double>{double(i), double(s.episode),
                                 double(s.bucket), double(s.symbol),
                                 report.payoffs.phi[i], report.payoffs.zeta[i],
                                 report.payoffs.psi[i],
                                 report.chain.initial[i]});
  }
  CsvWriter ccsv(ctx.path("case_costs.csv"),
                 {"symbol", "episode_cost", "std_error", "cutoff_cost",
                  "exploit_loss"});
  for (std::size_t x = 0; x < report.chain.log.size(); ++x)
    ccsv.row(std::vector<double>{double(x), report.chain.episode_cost[x],
                                 report.chain.episode_cost_se[x],
                                 report.chain.log.cutoff_cost[x],
                                 report.chain.log.exploit_loss[x]});

  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dominance_holds", report.dominance.holds ? "1" : "0");
  kv.emplace_back("ordering",
                  report.dominance.ordering == PayoffOrdering::Adc
                      ? "adc"
                      : report.dominance.ordering == PayoffOrdering::DdcStandard
                            ? "ddc"
                            : "mixed");
  int code = kExitOk;
  if (report.solver_dispatched) {
    write_dynkin_solution(ctx, to_dynkin(report.chain), report.solution);
    CsvWriter dcsv(ctx.path("cutoff_distribution.csv"),
                   {"episode", "probability"});
    for (std::size_t t = 0; t < report.stop_time_distribution.size(); ++t)
      dcsv.row(std::vector<double>{double(t),
                                   report.stop_time_distribution[t]});
    kv.emplace_back("value", format_double(report.value));
    if (report.verify_attempted) {
      kv.emplace_back("verification",
                      report.verification.passed ? "pass" : "fail");
      if (!report.verification.passed) code = kExitVerificationFailure;
    } else {
      kv.emplace_back("verification", "skipped");
    }
  }
  if (!report.note.empty()) kv.emplace_back("note", report.note);
  write_summary(ctx, kv);
  return code;
}

int cmd_verify(RunContext& ctx) {
  if (!ctx.cfg.has_dynkin && !ctx.cfg.has_aimg)
    throw ConfigInvalid(
        "verify requires a /dynkin or /graph section to check");
  CsvWriter csv(ctx.path("verify.csv"), {"check", "metric", "passed"});
  bool all_ok = true;

  if (ctx.cfg.has_dynkin) {
    const DynkinGameSpec& game = ctx.cfg.dynkin;
    PayoffOrdering ordering = classify_ordering(game);
    if (ordering == PayoffOrdering::Mixed)
      throw Error("mixed ordering: nothing to verify");
    DynkinSolution sol = ordering == PayoffOrdering::Adc ? solve_adc(game)
                                                         : solve_ddc(game);
    auto report = verify_dde(game, sol.tau, sol.sigma, ctx.cfg.verify.dde_tol,
                             ctx.cfg.verify.rule_cap);
    csv.row({"dde_saddle", format_double(report.max_violation()),
             report.passed ? "1" : "0"});
    all_ok = all_ok && report.passed;
  }

  if (ctx.cfg.has_aimg) {
    AttackerPolicy attacker = uniform_attacker(ctx.cfg.aimg);
    auto res = bvi(ctx.cfg.aimg, attacker.density, ctx.cfg.training.tol,
                   ctx.cfg.training.max_iter);
    csv.row({"bvi_converged", std::to_string(res.iterations),
             res.converged ? "1" : "0"});
    if (res.converged) {
      auto report = verify_pbne(ctx.cfg.aimg, res.pi_d, res.pi_a, res.beliefs,
                                attacker.density);
      bool ok = report.pass(ctx.cfg.verify.tol_gain, ctx.cfg.verify.tol_c1);
      csv.row({"pbne_gains",
               format_double(std::max(report.max_gain_d, report.max_gain_a)),
               ok ? "1" : "0"});
      all_ok = all_ok && ok;
    } else {
      log_line("bvi did not converge; equilibrium check skipped");
    }
  }

  write_summary(ctx, {{"all_passed", all_ok ? "1" : "0"}});
  return all_ok ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decision-dominance zero-trust defense harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  int jobs = 1;

  std::vector<std::pair<std::string, int (*)(RunContext&)>> commands = {
      {"simulate", cmd_simulate},
      {"train-threshold", cmd_train_threshold},
      {"train-pg", cmd_train_pg},
      {"train-vb", cmd_train_vb},
      {"bvi", cmd_bvi},
      {"train-meta", cmd_train_meta},
      {"solve-dynkin", cmd_solve_dynkin},
      {"ddgia-bounds", cmd_ddgia_bounds},
      {"case-study", cmd_case_study},
      {"verify", cmd_verify},
  };

  for (auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { has_seed_override = true; });
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker count (drivers are sequential)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    RunContext ctx;
    ctx.cfg = load_config(config_path, &ctx.raw_config);
    if (has_seed_override) {
      ctx.cfg.seed = seed_override;
      ctx.cfg.case_study.seed = seed_override;
    }
    ctx.out_dir = out_dir;
    std::filesystem::create_directories(ctx.out_dir);

    for (auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) {
        log_line("running " + name);
        int code = fn(ctx);
        ctx.write_manifest(name);
        return code;
      }
    }
    throw SubcommandUnknown("no subcommand dispatched");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
