#include "wval/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "wval/chain.hpp"
#include "wval/evaluations.hpp"
#include "wval/instances.hpp"
#include "wval/measures.hpp"
#include "wval/montecarlo.hpp"
#include "wval/scenario.hpp"
#include "wval/tree.hpp"
#include "wval/values.hpp"

namespace wval {

using nlohmann::json;

double no_run_probability(int l, int n) {
  if (l < 1 || n < 0) throw InvalidInput("no_run_probability needs l >= 1 and n >= 0");
  std::vector<double> run(l, 0.0), next(l);
  run[0] = 1.0;
  for (int step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int r = 0; r < l; ++r) {
      next[0] += 0.5 * run[r];
      if (r + 1 < l) next[r + 1] += 0.5 * run[r];
    }
    run.swap(next);
  }
  double total = 0.0;
  for (double x : run) total += x;
  return total;
}

int run_block_horizon(int l, double eps) {
  if (l < 1) throw InvalidInput("l must be >= 1");
  int horizon = 50 * l;
  while (no_run_probability(l, horizon) > eps) horizon += 50 * l;
  return horizon;
}

namespace {

constexpr double kExactTolerance = 1e-9;

std::vector<double> to_vector(const Eigen::VectorXd& x) { return {x.data(), x.data() + x.size()}; }

}  // namespace

json reproduce_ex1(int l) {
  if (l < 1) throw InvalidInput("l must be >= 1");
  const Pomdp p = instances::matching_frozen();
  const Belief x1 = uniform_belief(2);
  const auto vn = value_sequence(p, x1, 50);
  double worst = 0.0;
  for (double v : vn) worst = std::max(worst, std::abs(v - 0.5));
  const auto baseline = asymptotic_value_estimate(p, x1, 50);
  const Strategy strat = switch_after(2, 0, l, 1);
  const Evaluation e = state_block(l);
  const auto payoff = weighted_payoff_exact(p, x1, strat, e, 2 * l);
  const auto irr = irregularity_exact(p, x1, strat, e, 2 * l);
  json out;
  out["baseline_value"] = baseline.to_json();
  out["baseline_max_deviation"] = worst;
  out["v_theta"] = payoff.to_json();
  out["irregularity"] = irr.to_json();
  out["expected"] = {{"baseline", 0.5}, {"v_theta", 1.0}, {"irregularity", 2.0 / l}};
  const bool ok_base = worst <= kExactTolerance;
  const bool ok_payoff = std::abs(payoff.value - 1.0) <= kExactTolerance;
  const bool ok_irr = std::abs(irr.lower - 2.0 / l) <= 1e-12 && irr.lower == irr.upper;
  out["checks"] = {{"baseline", ok_base}, {"v_theta", ok_payoff}, {"irregularity", ok_irr}};
  out["pass"] = ok_base && ok_payoff && ok_irr;
  return out;
}

json reproduce_ex2(int l, int horizon, std::size_t samples, std::uint64_t seed) {
  if (l < 1) throw InvalidInput("l must be >= 1");
  const Pomdp p = instances::uniform_redraw();
  const Belief x1 = uniform_belief(2);
  const Transducer t = always_play(p, 0);
  const auto chain = product_chain<double>(p, t, x1);
  const auto d = ergodic_decomposition(chain);
  if (horizon <= 0) horizon = run_block_horizon(l);
  const Evaluation e = run_block(l);
  const auto [payoff, irr] = weighted_estimates_mc(p, x1, t, e, horizon, samples, seed);
  const auto baseline = asymptotic_value_estimate(p, x1, 20);
  json out;
  out["classes"] = d.num_classes();
  out["stationary"] = d.num_classes() > 0 ? to_vector(d.stationary[0]) : std::vector<double>{};
  out["class_values"] = to_vector(d.class_values);
  out["horizon"] = horizon;
  out["no_run_probability"] = no_run_probability(l, horizon);
  out["v_theta"] = payoff.to_json();
  out["irregularity"] = irr.to_json();
  out["baseline_value"] = baseline.to_json();
  out["expected"] = {{"v_theta", 1.0}, {"irregularity", 2.0 / l}, {"baseline", 0.5}};
  bool ok_chain = d.num_classes() == 1;
  if (ok_chain) {
    ok_chain = (d.stationary[0].array() - 0.5).abs().maxCoeff() <= kExactTolerance &&
               std::abs(d.class_values(0) - 0.5) <= kExactTolerance;
  }
  const bool ok_payoff = payoff.value >= 0.99;
  const bool ok_irr = std::abs(irr.mean - 2.0 / l) <= 3.0 * irr.standard_error + 1e-12;
  const bool ok_base = std::abs(baseline.value - 0.5) <= kExactTolerance;
  out["checks"] = {
      {"ergodic", ok_chain}, {"v_theta", ok_payoff}, {"irregularity", ok_irr}, {"baseline", ok_base}};
  out["pass"] = ok_chain && ok_payoff && ok_irr && ok_base;
  return out;
}

json reproduce_blind_limsup(int horizon, int max_memory) {
  if (horizon < 2) throw InvalidInput("horizon must be >= 2");
  const Pomdp p = instances::blind_switch();
  const Belief x1 = uniform_belief(2);
  const auto ts = enumerate_transducers(p, max_memory);
  double lo = 1.0, hi = 0.0;
  for (const auto& t : ts) {
    const double v = liminf_value_transducer(p, x1, t);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const Strategy doubling = doubling_strategy(0, 1);
  json trajectories = json::array();
  double liminf_total = 0.0;
  bool ok_limsup = true;
  std::mt19937_64 rng(0);
  for (int k = 0; k < 2; ++k) {
    PlaySampler sampler(p, dirac(2, k), doubling, false);
    Play play;
    sampler.sample(horizon, rng, play);
    std::vector<double> r(horizon);
    for (int m = 0; m < horizon; ++m) r[m] = p.reward(play.states[m], play.actions[m]);
    const double sup = limsup_proxy(r), inf = liminf_proxy(r);
    trajectories.push_back({{"initial_state", p.states()[k]}, {"limsup", sup}, {"liminf", inf}});
    ok_limsup = ok_limsup && sup >= 0.9;
    liminf_total += inf;
  }
  json out;
  out["transducers"] = ts.size();
  out["max_memory"] = max_memory;
  out["liminf_value_min"] = lo;
  out["liminf_value_max"] = hi;
  out["doubling"] = trajectories;
  out["doubling_liminf_average"] = liminf_total / 2.0;
  out["window"] = {{"first", limsup_window(horizon).first}, {"last", horizon}};
  const bool ok_sweep = std::abs(lo - 0.5) <= kExactTolerance && std::abs(hi - 0.5) <= kExactTolerance;
  const bool ok_liminf = liminf_total / 2.0 <= 0.2;
  out["checks"] = {{"transducer_sweep", ok_sweep}, {"limsup", ok_limsup}, {"liminf", ok_liminf}};
  out["pass"] = ok_sweep && ok_limsup && ok_liminf;
  return out;
}

namespace {

json compare_limsup_modes(const Pomdp& p, const Belief& x1, int horizon, std::size_t samples,
                          std::uint64_t seed, int num_strategies, bool& all_agree) {
  json rows = json::array();
  all_agree = true;
  for (int j = 1; j <= num_strategies; ++j) {
    const Strategy s = random_behavior_strategy(p.num_actions(), p.num_signals(), seed + j);
    const auto est = limit_payoffs_mc(p, x1, s, horizon, samples, seed + 1000 + j);
    const bool agree =
        std::abs(est.limsup_difference) <= 3.0 * est.limsup_difference_se + 1e-12;
    all_agree = all_agree && agree;
    rows.push_back({{"strategy", "random:" + std::to_string(seed + j)},
                    {"limsup_belief", est.limsup_belief.to_json()},
                    {"limsup_state", est.limsup_state.to_json()},
                    {"difference", est.limsup_difference},
                    {"difference_se", est.limsup_difference_se},
                    {"agree", agree}});
  }
  return rows;
}

}  // namespace

json reproduce_known_payoffs(int horizon, std::size_t samples, std::uint64_t seed,
                             int num_strategies) {
  const Pomdp blind = instances::blind_switch();
  const auto lift = known_payoff_lift(blind);
  bool agree = false, control_agree = false;
  json out;
  out["lifted_states"] = lift.pomdp.num_states();
  out["original_has_known_payoffs"] = has_known_payoffs(blind);
  out["lift_has_known_payoffs"] = has_known_payoffs(lift.pomdp);
  out["blind_lift"] = compare_limsup_modes(lift.pomdp, lift.lift_belief(uniform_belief(2)),
                                           horizon, samples, seed, num_strategies, agree);
  // control: a POMDP that does have known payoffs
  const Pomdp known = instances::matching_revealed();
  const auto known_lift = known_payoff_lift(known);
  out["control_has_known_payoffs"] = has_known_payoffs(known);
  out["control_lift"] =
      compare_limsup_modes(known_lift.pomdp, known_lift.lift_belief(uniform_belief(2)), horizon,
                           samples, seed, num_strategies, control_agree);
  out["checks"] = {{"blind_lift_agree", agree}, {"control_agree", control_agree}};
  out["pass"] = agree;
  return out;
}

namespace {

struct CsvRow {
  std::string parameter;
  double value;
  double error_bound;
  std::string method;
};

struct Record {
  std::string instance;
  json parameters = json::object();
  json outputs = json::object();
  std::vector<CsvRow> rows;
  bool failed_checks = false;
};

struct Options {
  std::string scenario = "builtin:matching_frozen";
  std::string strategy = "uniform";
  std::string evaluation = R"({"kind":"n_stage","n":10})";
  std::string measure;
  std::string format = "json";
  std::string method;
  std::string mode;
  std::string example;
  std::string file;
  int horizon = 0;
  long long samples = 10000;
  std::uint64_t seed = 0;
  long long budget = static_cast<long long>(kDefaultNodeBudget);
  int n = 0;
  double lambda = 0.0;
  double tol = 1e-9;
  int n_max = 0;
  int l = 0;
  int max_memory = 3;
  int strategies = 5;
  bool timing = false;
};

void add_report(Record& r, const std::string& name, const ValueReport& v) {
  r.outputs[name] = v.to_json();
  r.rows.push_back({name, v.value, v.error_bound, to_string(v.method)});
}

Evaluation load_evaluation(const std::string& spec, const Scenario& sc) {
  if (auto it = sc.evaluations.find(spec); it != sc.evaluations.end()) return it->second;
  if (!spec.empty() && spec.front() == '{') {
    try {
      return make_evaluation(json::parse(spec));
    } catch (const json::parse_error& e) {
      throw InvalidInput(std::string("--evaluation is not valid JSON: ") + e.what());
    }
  }
  return make_evaluation(read_json_file(spec));
}

Strategy load_strategy(const std::string& spec, const Scenario& sc) {
  if (auto it = sc.strategies.find(spec); it != sc.strategies.end()) return it->second;
  if (auto s = builtin_strategy(spec, sc.pomdp)) return *s;
  return strategy_from_json(read_json_file(spec), sc.pomdp);
}

int horizon_or(const Options& o, int fallback) { return o.horizon > 0 ? o.horizon : fallback; }

std::size_t budget_of(const Options& o) {
  if (o.budget < 1) throw InvalidInput("--budget must be >= 1");
  return static_cast<std::size_t>(o.budget);
}

std::size_t samples_of(const Options& o) {
  if (o.samples < 1) throw InvalidInput("--samples must be >= 1");
  return static_cast<std::size_t>(o.samples);
}

Record cmd_validate(const Options& o) {
  const std::string source = o.file.empty() ? o.scenario : o.file;
  const Scenario sc = load_scenario(source);
  Record r;
  r.instance = source;
  r.outputs = {{"valid", true},
               {"states", sc.pomdp.num_states()},
               {"actions", sc.pomdp.num_actions()},
               {"signals", sc.pomdp.num_signals()},
               {"known_payoffs", has_known_payoffs(sc.pomdp)},
               {"strategies", sc.strategies.size()},
               {"evaluations", sc.evaluations.size()}};
  return r;
}

Record cmd_value(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  Record r;
  r.instance = o.scenario;
  const auto budget = budget_of(o);
  if (o.n > 0) {
    r.parameters["n"] = o.n;
    add_report(r, "v_n", value_n(sc.pomdp, sc.initial_belief, o.n, budget));
  }
  if (o.lambda > 0.0) {
    r.parameters["lambda"] = o.lambda;
    r.parameters["tol"] = o.tol;
    add_report(r, "v_lambda", value_discounted(sc.pomdp, sc.initial_belief, o.lambda, o.tol, budget));
  }
  if (o.n_max > 0) {
    r.parameters["n_max"] = o.n_max;
    add_report(r, "asymptotic", asymptotic_value_estimate(sc.pomdp, sc.initial_belief, o.n_max, budget));
  }
  if (r.rows.empty()) throw InvalidInput("value needs --n, --lambda or --n-max");
  return r;
}

Record cmd_evaluate(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Strategy strat = load_strategy(o.strategy, sc);
  const Evaluation e = load_evaluation(o.evaluation, sc);
  const int horizon = horizon_or(o, e.support().value_or(100));
  Record r;
  r.instance = o.scenario;
  r.parameters = {{"strategy", o.strategy}, {"evaluation", e.to_json()}, {"horizon", horizon}};
  const std::string method = o.method.empty() ? "exact" : o.method;
  r.parameters["method"] = method;
  if (method == "exact") {
    add_report(r, "gamma_theta",
               weighted_payoff_exact(sc.pomdp, sc.initial_belief, strat, e, horizon, budget_of(o)));
  } else if (method == "mc") {
    r.parameters["samples"] = o.samples;
    add_report(r, "gamma_theta", weighted_payoff_mc(sc.pomdp, sc.initial_belief, strat, e, horizon,
                                                    samples_of(o), o.seed));
  } else if (method == "chain") {
    const auto* t = std::get_if<Transducer>(&strat);
    if (!t) throw InvalidInput("--method chain needs a transducer strategy");
    add_report(r, "gamma_theta", weighted_payoff_chain(sc.pomdp, sc.initial_belief, *t, e, horizon));
  } else {
    throw InvalidInput("unknown --method '" + method + "' (exact, mc, chain)");
  }
  return r;
}

Record cmd_irregularity(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Evaluation e = load_evaluation(o.evaluation, sc);
  const int horizon = horizon_or(o, e.support().value_or(100));
  Record r;
  r.instance = o.scenario;
  const std::string method = o.method.empty() ? "exact" : o.method;
  r.parameters = {{"evaluation", e.to_json()}, {"horizon", horizon}, {"method", method}};
  if (method == "sup") {
    const auto rep = irregularity_sup(sc.pomdp, sc.initial_belief, e, horizon, budget_of(o));
    r.outputs["irregularity"] = rep.to_json();
    r.rows.push_back({"irregularity", rep.lower, rep.upper - rep.lower, "exact_sup"});
    return r;
  }
  const Strategy strat = load_strategy(o.strategy, sc);
  r.parameters["strategy"] = o.strategy;
  if (method == "exact") {
    const auto rep = irregularity_exact(sc.pomdp, sc.initial_belief, strat, e, horizon, budget_of(o));
    r.outputs["irregularity"] = rep.to_json();
    r.rows.push_back({"irregularity", rep.lower, rep.upper - rep.lower, "exact"});
  } else if (method == "mc") {
    r.parameters["samples"] = o.samples;
    const auto est =
        irregularity_mc(sc.pomdp, sc.initial_belief, strat, e, horizon, samples_of(o), o.seed);
    r.outputs["irregularity"] = est.to_json();
    r.rows.push_back({"irregularity", est.mean, 3.0 * est.standard_error, "monte_carlo"});
  } else {
    throw InvalidInput("unknown --method '" + method + "' (exact, mc, sup)");
  }
  return r;
}

Transducer require_transducer(const Strategy& s) {
  const auto* t = std::get_if<Transducer>(&s);
  if (!t) throw InvalidInput("this command needs a transducer strategy (e.g. always:<action>)");
  return *t;
}

Record cmd_ergodic(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Transducer t = require_transducer(load_strategy(o.strategy, sc));
  const auto c = product_chain<double>(sc.pomdp, t, sc.initial_belief);
  const auto d = ergodic_decomposition(c);
  auto label = [&](int u) {
    return sc.pomdp.states()[u / t.memory_size] + "|" + std::to_string(u % t.memory_size);
  };
  json classes = json::array(), stationary = json::array(), transient = json::array();
  for (int u : d.transient) transient.push_back(label(u));
  for (int k = 0; k < d.num_classes(); ++k) {
    json members = json::array(), pi = json::object();
    for (int u : d.classes[k]) {
      members.push_back(label(u));
      pi[label(u)] = d.stationary[k](u);
    }
    classes.push_back(members);
    stationary.push_back(pi);
  }
  Record r;
  r.instance = o.scenario;
  r.parameters = {{"strategy", o.strategy}};
  r.outputs = {{"transient", transient},
               {"classes", classes},
               {"stationary", stationary},
               {"class_values", to_vector(d.class_values)},
               {"absorption", to_vector(d.absorption)},
               {"mixing_threshold", mixing_threshold(c, d)}};
  for (int k = 0; k < d.num_classes(); ++k)
    r.rows.push_back({"gamma_" + std::to_string(k + 1), d.class_values(k), 0.0, "ergodic_exact"});
  const double liminf = d.absorption.dot(d.class_values);
  add_report(r, "liminf_value", {liminf, ValueMethod::ErgodicExact, 0.0, 0});
  return r;
}

Record cmd_limit(const Options& o, bool limsup) {
  const Scenario sc = load_scenario(o.scenario);
  const Strategy strat = load_strategy(o.strategy, sc);
  Record r;
  r.instance = o.scenario;
  r.parameters = {{"strategy", o.strategy}};
  if (!limsup && o.mode.empty() && std::holds_alternative<Transducer>(strat)) {
    r.parameters["method"] = "ergodic";
    const double v = liminf_value_transducer(sc.pomdp, sc.initial_belief, std::get<Transducer>(strat));
    add_report(r, "liminf_value", {v, ValueMethod::ErgodicExact, 0.0, 0});
    return r;
  }
  std::string mode = o.mode.empty() ? "state" : o.mode;
  if (mode == "state" || mode == "belief") mode = std::string(limsup ? "limsup_" : "liminf_") + mode;
  const LimitMode lm = parse_limit_mode(mode);
  const int horizon = horizon_or(o, 10000);
  r.parameters["mode"] = mode;
  r.parameters["horizon"] = horizon;
  r.parameters["samples"] = o.samples;
  const auto all =
      limit_payoffs_mc(sc.pomdp, sc.initial_belief, strat, horizon, samples_of(o), o.seed);
  const ValueReport chosen = lm == LimitMode::LimsupState    ? all.limsup_state
                             : lm == LimitMode::LiminfState  ? all.liminf_state
                             : lm == LimitMode::LimsupBelief ? all.limsup_belief
                                                             : all.liminf_belief;
  add_report(r, mode, chosen);
  r.outputs["all_modes"] = all.to_json();
  return r;
}

StationaryStrategy stationary_for(const Strategy& s, const SupportedMeasure& mu) {
  if (const auto* st = std::get_if<StationaryStrategy>(&s)) return *st;
  // history-independent builtins act the same at every support point
  StationaryStrategy out;
  for (const auto& a : mu.atoms()) {
    out.support.push_back(a.belief);
    out.actions.push_back(strategy_action(s, {}, a.belief));
  }
  return out;
}

Record cmd_invariance(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const SupportedMeasure mu = o.measure.empty()
                                  ? SupportedMeasure::dirac(sc.initial_belief)
                                  : SupportedMeasure::from_json(read_json_file(o.measure));
  const StationaryStrategy st = stationary_for(load_strategy(o.strategy, sc), mu);
  const auto image = image_measure(sc.pomdp, mu, st);
  const double residual = kr_distance(mu, image);
  Record r;
  r.instance = o.scenario;
  r.parameters = {{"strategy", o.strategy}, {"measure", o.measure.empty() ? "dirac:initial" : o.measure}};
  r.outputs = {{"measure", mu.to_json()}, {"image", image.to_json()}, {"residual", residual}};
  r.rows.push_back({"invariance_residual", residual, 0.0, "exact_transport"});
  return r;
}

void flag_checks(Record& r) {
  r.failed_checks = !r.outputs.value("pass", true);
  for (const auto& [name, ok] : r.outputs["checks"].items())
    r.rows.push_back({"check:" + name, ok.get<bool>() ? 1.0 : 0.0, 0.0, "check"});
}

Record cmd_reproduce(const Options& o) {
  Record r;
  r.instance = o.example;
  if (o.example == "ex1") {
    const int l = o.l > 0 ? o.l : 8;
    r.parameters = {{"l", l}};
    r.outputs = reproduce_ex1(l);
    r.rows.push_back({"v_theta", r.outputs["v_theta"]["value"], 0.0, "exact_dp"});
    r.rows.push_back({"irregularity", r.outputs["irregularity"]["lower"], 0.0, "exact"});
    r.rows.push_back({"baseline", r.outputs["baseline_value"]["value"],
                      r.outputs["baseline_value"]["error_bound"], "truncated_dp"});
  } else if (o.example == "ex2") {
    const int l = o.l > 0 ? o.l : 10;
    r.parameters = {{"l", l}, {"samples", o.samples}};
    r.outputs = reproduce_ex2(l, o.horizon, samples_of(o), o.seed);
    r.parameters["horizon"] = r.outputs["horizon"];
    r.rows.push_back({"v_theta", r.outputs["v_theta"]["value"], r.outputs["v_theta"]["error_bound"],
                      "monte_carlo"});
    r.rows.push_back({"irregularity", r.outputs["irregularity"]["mean"],
                      3.0 * r.outputs["irregularity"]["standard_error"].get<double>(), "monte_carlo"});
    r.rows.push_back({"gamma_1", r.outputs["class_values"][0], 0.0, "ergodic_exact"});
  } else if (o.example == "blind-limsup") {
    const int horizon = horizon_or(o, 100000);
    r.parameters = {{"horizon", horizon}, {"max_memory", o.max_memory}};
    r.outputs = reproduce_blind_limsup(horizon, o.max_memory);
    r.rows.push_back({"transducer_sweep_min", r.outputs["liminf_value_min"], 0.0, "ergodic_exact"});
    r.rows.push_back({"transducer_sweep_max", r.outputs["liminf_value_max"], 0.0, "ergodic_exact"});
    for (const auto& t : r.outputs["doubling"])
      r.rows.push_back({"limsup_from_" + t["initial_state"].get<std::string>(), t["limsup"], 0.0,
                        "simulation"});
    r.rows.push_back({"liminf_average", r.outputs["doubling_liminf_average"], 0.0, "simulation"});
  } else if (o.example == "known-payoffs") {
    const int horizon = horizon_or(o, 1000);
    const std::size_t samples = o.samples == 10000 ? 1000 : samples_of(o);
    r.parameters = {{"horizon", horizon}, {"samples", samples}, {"strategies", o.strategies}};
    r.outputs = reproduce_known_payoffs(horizon, samples, o.seed, o.strategies);
    for (const char* group : {"blind_lift", "control_lift"})
      for (const auto& row : r.outputs[group])
        r.rows.push_back({std::string(group) + ":" + row["strategy"].get<std::string>(),
                          row["difference"], 3.0 * row["difference_se"].get<double>(), "monte_carlo"});
  } else {
    throw InvalidInput("unknown example '" + o.example + "' (ex1, ex2, blind-limsup, known-payoffs)");
  }
  flag_checks(r);
  return r;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void emit(const std::string& command, const Record& r, const Options& o, double seconds,
          std::ostream& out) {
  if (o.format == "csv") {
    out << "command,instance,parameter,value,error_bound,method,seed\n";
    for (const auto& row : r.rows) {
      std::ostringstream v, e;
      v << std::setprecision(17) << row.value;
      e << std::setprecision(17) << row.error_bound;
      out << command << ',' << csv_escape(r.instance) << ',' << csv_escape(row.parameter) << ','
          << v.str() << ',' << e.str() << ',' << row.method << ',' << o.seed << '\n';
    }
    return;
  }
  json rec = {{"command", command},
              {"instance", r.instance},
              {"parameters", r.parameters},
              {"seed", o.seed},
              {"outputs", r.outputs}};
  if (o.timing) rec["wall_time_s"] = seconds;
  out << rec.dump(2) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Values, weighted payoffs and irregularity for finite POMDPs", "wval"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file or builtin:NAME");
    sub->add_option("--strategy", o.strategy, "always:<action>, doubling, uniform, random:<seed>, name or file");
    sub->add_option("--evaluation", o.evaluation, "evaluation JSON, name or file");
    sub->add_option("--horizon", o.horizon, "truncation horizon");
    sub->add_option("--samples", o.samples, "Monte Carlo samples");
    sub->add_option("--seed", o.seed, "base random seed");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--budget", o.budget, "node budget for exhaustive computations");
    sub->add_option("--method", o.method, "computation method");
    sub->add_flag("--timing", o.timing, "include wall time in JSON records");
  };

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  common(validate);
  validate->add_option("file", o.file, "scenario file");
  auto* value = app.add_subcommand("value", "v_n, discounted value or asymptotic estimate");
  common(value);
  value->add_option("--n", o.n, "number of stages");
  value->add_option("--lambda", o.lambda, "discount weight");
  value->add_option("--tol", o.tol, "discounted truncation tolerance");
  value->add_option("--n-max", o.n_max, "largest n for the asymptotic estimate");
  auto* evaluate = app.add_subcommand("evaluate", "weighted payoff of a strategy");
  common(evaluate);
  auto* irregularity = app.add_subcommand("irregularity", "irregularity of an evaluation");
  common(irregularity);
  auto* ergodic = app.add_subcommand("ergodic", "ergodic decomposition of a transducer chain");
  common(ergodic);
  auto* liminf = app.add_subcommand("liminf", "liminf payoff of a strategy");
  common(liminf);
  liminf->add_option("--mode", o.mode, "state or belief");
  auto* limsup = app.add_subcommand("limsup", "limsup payoff of a strategy");
  common(limsup);
  limsup->add_option("--mode", o.mode, "state or belief");
  auto* invariance = app.add_subcommand("invariance", "invariance residual of a belief measure");
  common(invariance);
  invariance->add_option("--measure", o.measure, "measure JSON file (default: Dirac at x1)");
  auto* reproduce = app.add_subcommand("reproduce", "pinned reproductions");
  common(reproduce);
  reproduce->add_option("example", o.example, "ex1, ex2, blind-limsup or known-payoffs")->required();
  reproduce->add_option("--l", o.l, "block length");
  reproduce->add_option("--max-memory", o.max_memory, "transducer sweep size");
  reproduce->add_option("--strategies", o.strategies, "random strategies to compare");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Record r;
    std::string command;
    if (*validate) command = "validate", r = cmd_validate(o);
    else if (*value) command = "value", r = cmd_value(o);
    else if (*evaluate) command = "evaluate", r = cmd_evaluate(o);
    else if (*irregularity) command = "irregularity", r = cmd_irregularity(o);
    else if (*ergodic) command = "ergodic", r = cmd_ergodic(o);
    else if (*liminf) command = "liminf", r = cmd_limit(o, false);
    else if (*limsup) command = "limsup", r = cmd_limit(o, true);
    else if (*invariance) command = "invariance", r = cmd_invariance(o);
    else command = "reproduce", r = cmd_reproduce(o);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(command, r, o, seconds, out);
    return kExitOk;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << " (" << e.nodes() << " nodes)\n";
    return kExitBudget;
  } catch (const TruncationError& e) {
    err << "truncation: " << e.what() << "\n";
    return kExitBudget;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace wval
