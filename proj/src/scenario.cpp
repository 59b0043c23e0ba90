#include "wval/scenario.hpp"

#include <fstream>
#include <sstream>

#include "wval/instances.hpp"

namespace wval {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> split_pair(const std::string& key) {
  const auto comma = key.find(',');
  if (comma == std::string::npos) throw InvalidInput("expected a \"a,b\" key, got '" + key + "'");
  return {key.substr(0, comma), key.substr(comma + 1)};
}

Belief belief_from_json(const json& j, int dim) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != dim) throw InvalidInput("belief dimension mismatch");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

std::vector<double> to_vector(const Eigen::VectorXd& x) {
  return {x.data(), x.data() + x.size()};
}

template <class F>
auto guarded(const char* what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

Pomdp pomdp_from_json(const json& j) {
  return guarded("scenario", [&] {
    auto states = j.at("states").get<std::vector<std::string>>();
    auto actions = j.at("actions").get<std::vector<std::string>>();
    auto signals = j.at("signals").get<std::vector<std::string>>();
    if (states.empty() || actions.empty() || signals.empty())
      throw InvalidInput("states, actions and signals must be non-empty");
    auto index = [](const std::vector<std::string>& names, const std::string& n,
                    const char* what) {
      for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == n) return static_cast<int>(j);
      throw InvalidInput(std::string("unknown ") + what + " '" + n + "'");
    };
    const int nk = static_cast<int>(states.size()), ni = static_cast<int>(actions.size()),
              ns = static_cast<int>(signals.size());
    std::vector<std::vector<Eigen::MatrixXd>> q(
        nk, std::vector<Eigen::MatrixXd>(ni, Eigen::MatrixXd::Zero(nk, ns)));
    for (const auto& [key, row] : j.at("transition").items()) {
      const auto [k, i] = split_pair(key);
      auto& table = q[index(states, k, "state")][index(actions, i, "action")];
      for (const auto& [cell, prob] : row.items()) {
        const auto [next, s] = split_pair(cell);
        table(index(states, next, "state"), index(signals, s, "signal")) += prob.get<double>();
      }
    }
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(nk, ni, -1.0);
    for (const auto& [key, v] : j.at("reward").items()) {
      const auto [k, i] = split_pair(key);
      r(index(states, k, "state"), index(actions, i, "action")) = v.get<double>();
    }
    for (int k = 0; k < nk; ++k)
      for (int i = 0; i < ni; ++i)
        if (r(k, i) == -1.0)
          throw InvalidInput("reward (" + states[k] + "," + actions[i] + ") is missing");
    return Pomdp(std::move(states), std::move(actions), std::move(signals), std::move(q),
                 std::move(r));
  });
}

json pomdp_to_json(const Pomdp& p) {
  json transition = json::object(), reward = json::object();
  for (int k = 0; k < p.num_states(); ++k)
    for (int i = 0; i < p.num_actions(); ++i) {
      const std::string key = p.states()[k] + "," + p.actions()[i];
      json row = json::object();
      for (int next = 0; next < p.num_states(); ++next)
        for (int s = 0; s < p.num_signals(); ++s)
          if (p.q(k, i, next, s) > 0.0)
            row[p.states()[next] + "," + p.signals()[s]] = p.q(k, i, next, s);
      transition[key] = row;
      reward[key] = p.reward(k, i);
    }
  return {{"states", p.states()},
          {"actions", p.actions()},
          {"signals", p.signals()},
          {"transition", transition},
          {"reward", reward}};
}

json scenario_to_json(const Pomdp& p, const Belief& x1) {
  json j = pomdp_to_json(p);
  j["initial_belief"] = to_vector(x1);
  return j;
}

Scenario scenario_from_json(const json& j) {
  Pomdp p = pomdp_from_json(j);
  return guarded("scenario", [&] {
    Belief x1 = j.contains("initial_belief")
                    ? belief_from_json(j.at("initial_belief"), p.num_states())
                    : uniform_belief(p.num_states());
    check_belief(p, x1);
    Scenario sc{p, x1, {}, {}};
    if (j.contains("strategies"))
      for (const auto& [name, spec] : j.at("strategies").items())
        sc.strategies.emplace(name, strategy_from_json(spec, sc.pomdp));
    if (j.contains("evaluations"))
      for (const auto& [name, spec] : j.at("evaluations").items())
        sc.evaluations.emplace(name, make_evaluation(spec));
    return sc;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::exception& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> builtin_scenario_names() {
  return {"matching_frozen", "matching_revealed", "uniform_redraw", "blind_switch",
          "blind_switch_lift"};
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
  auto make = [](Pomdp p) {
    Belief x1 = uniform_belief(p.num_states());
    return Scenario{std::move(p), std::move(x1), {}, {}};
  };
  if (name == "matching_frozen") return make(instances::matching_frozen());
  if (name == "matching_revealed") return make(instances::matching_revealed());
  if (name == "uniform_redraw") return make(instances::uniform_redraw());
  if (name == "blind_switch") return make(instances::blind_switch());
  if (name == "blind_switch_lift") {
    auto lift = known_payoff_lift(instances::blind_switch());
    Belief x1 = lift.lift_belief(uniform_belief(2));
    return Scenario{std::move(lift.pomdp), std::move(x1), {}, {}};
  }
  return std::nullopt;
}

Scenario load_scenario(const std::string& source) {
  constexpr std::string_view prefix = "builtin:";
  if (source.starts_with(prefix)) {
    if (auto sc = builtin_scenario(source.substr(prefix.size()))) return *sc;
    throw InvalidInput("unknown builtin scenario '" + source + "'");
  }
  return scenario_from_json(read_json_file(source));
}

json transducer_to_json(const Transducer& t, const Pomdp& p) {
  json act = json::array(), update = json::array();
  for (int m = 0; m < t.memory_size; ++m) {
    act.push_back(p.actions()[t.act[m]]);
    json per_action = json::array();
    for (int i = 0; i < t.num_actions; ++i) {
      json per_signal = json::array();
      for (int s = 0; s < t.num_signals; ++s) per_signal.push_back(t.next(m, i, s));
      per_action.push_back(per_signal);
    }
    update.push_back(per_action);
  }
  return {{"kind", "transducer"},
          {"memory", t.memory_size},
          {"initial", t.initial},
          {"act", act},
          {"update", update}};
}

Transducer transducer_from_json(const json& j, const Pomdp& p) {
  return guarded("transducer", [&] {
    Transducer t;
    t.memory_size = j.at("memory").get<int>();
    t.initial = j.value("initial", 0);
    t.num_actions = p.num_actions();
    t.num_signals = p.num_signals();
    if (t.memory_size < 1 || t.initial < 0 || t.initial >= t.memory_size)
      throw InvalidInput("transducer memory/initial out of range");
    const auto& act = j.at("act");
    const auto& update = j.at("update");
    if (static_cast<int>(act.size()) != t.memory_size ||
        static_cast<int>(update.size()) != t.memory_size)
      throw InvalidInput("transducer tables must have one entry per memory state");
    for (int m = 0; m < t.memory_size; ++m) {
      t.act.push_back(p.action_index(act[m].get<std::string>()));
      if (static_cast<int>(update[m].size()) != t.num_actions)
        throw InvalidInput("transducer update must cover every action");
      for (int i = 0; i < t.num_actions; ++i) {
        if (static_cast<int>(update[m][i].size()) != t.num_signals)
          throw InvalidInput("transducer update must cover every signal");
        for (int s = 0; s < t.num_signals; ++s) {
          const int next = update[m][i][s].get<int>();
          if (next < 0 || next >= t.memory_size)
            throw InvalidInput("transducer update points outside memory");
          t.update.push_back(next);
        }
      }
    }
    return t;
  });
}

json stationary_to_json(const StationaryStrategy& s) {
  json atoms = json::array();
  for (std::size_t j = 0; j < s.support.size(); ++j)
    atoms.push_back({{"belief", to_vector(s.support[j])}, {"action", to_vector(s.actions[j])}});
  return {{"kind", "stationary"}, {"atoms", atoms}};
}

StationaryStrategy stationary_from_json(const json& j, const Pomdp& p) {
  return guarded("stationary strategy", [&] {
    StationaryStrategy s;
    for (const auto& a : j.at("atoms")) {
      Belief x = belief_from_json(a.at("belief"), p.num_states());
      check_belief(p, x);
      Eigen::VectorXd act = belief_from_json(a.at("action"), p.num_actions());
      if (std::abs(act.sum() - 1.0) > kProbabilityTolerance || (act.array() < 0.0).any())
        throw InvalidInput("stationary action is not a distribution");
      s.support.push_back(std::move(x));
      s.actions.push_back(std::move(act));
    }
    if (s.support.empty()) throw InvalidInput("stationary strategy has no support");
    return s;
  });
}

Strategy strategy_from_json(const json& j, const Pomdp& p) {
  return guarded("strategy", [&]() -> Strategy {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "transducer") return transducer_from_json(j, p);
    if (kind == "stationary") return stationary_from_json(j, p);
    if (kind == "builtin") {
      const std::string name = j.at("name").get<std::string>();
      if (auto s = builtin_strategy(name, p)) return *s;
      throw InvalidInput("unknown builtin strategy '" + name + "'");
    }
    throw InvalidInput("unknown strategy kind '" + kind + "'");
  });
}

std::optional<Strategy> builtin_strategy(const std::string& name, const Pomdp& p) {
  if (name.starts_with("always:")) return always_play(p, p.action_index(name.substr(7)));
  if (name == "uniform") return uniform_strategy(p.num_actions());
  if (name == "doubling") {
    if (p.num_actions() != 2) throw InvalidInput("doubling needs exactly two actions");
    return doubling_strategy(0, 1);
  }
  if (name.starts_with("random:")) {
    try {
      return random_behavior_strategy(p.num_actions(), p.num_signals(),
                                      std::stoull(name.substr(7)));
    } catch (const std::logic_error&) {
      throw InvalidInput("bad seed in '" + name + "'");
    }
  }
  return std::nullopt;
}

}  // namespace wval
