#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "wval/evaluations.hpp"
#include "wval/model.hpp"
#include "wval/strategies.hpp"

namespace wval {

/// A POMDP with its initial belief and optional named strategies/evaluations.
struct Scenario {
  Pomdp pomdp;
  Belief initial_belief;
  std::map<std::string, Strategy> strategies;
  std::map<std::string, Evaluation> evaluations;
};

Pomdp pomdp_from_json(const nlohmann::json& j);
nlohmann::json pomdp_to_json(const Pomdp& p);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Pomdp& p, const Belief& x1);

/// Reads JSON from a file; throws InvalidInput when missing or malformed.
nlohmann::json read_json_file(const std::string& path);

/// "builtin:NAME" for the bundled instances, otherwise a JSON file path.
Scenario load_scenario(const std::string& source);
std::vector<std::string> builtin_scenario_names();
std::optional<Scenario> builtin_scenario(const std::string& name);

nlohmann::json transducer_to_json(const Transducer& t, const Pomdp& p);
Transducer transducer_from_json(const nlohmann::json& j, const Pomdp& p);

nlohmann::json stationary_to_json(const StationaryStrategy& s);
StationaryStrategy stationary_from_json(const nlohmann::json& j, const Pomdp& p);

/// {"kind": "transducer" | "stationary" | "builtin", ...}.
Strategy strategy_from_json(const nlohmann::json& j, const Pomdp& p);

/// always:<action>, doubling, uniform, random:<seed>.
std::optional<Strategy> builtin_strategy(const std::string& name, const Pomdp& p);

}  // namespace wval
