#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wval/cli.hpp"
#include "wval/instances.hpp"
#include "wval/scenario.hpp"

using namespace wval;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_temp(const std::string& name, const json& j) {
  const auto path = std::filesystem::temp_directory_path() / ("wval_test_" + name);
  std::ofstream(path) << j.dump(2);
  return path.string();
}

}  // namespace

TEST_CASE("validate accepts builtins and files") {
  const auto r = run({"validate"});
  CHECK(r.code == kExitOk);
  CHECK(json::parse(r.out)["outputs"]["valid"] == true);
  const std::string file = write_temp("good.json", scenario_to_json(instances::matching_revealed(), uniform_belief(2)));
  const auto f = run({"validate", file});
  CHECK(f.code == kExitOk);
  CHECK(json::parse(f.out)["outputs"]["known_payoffs"] == true);
}

TEST_CASE("validate names the offending row") {
  json j = scenario_to_json(instances::matching_frozen(), uniform_belief(2));
  const std::string signal = j["signals"][0];
  j["transition"]["beta,alpha"]["beta," + signal] = 1.01;
  const std::string file = write_temp("bad.json", j);
  const auto r = run({"validate", file});
  CHECK(r.code == kExitInvalid);
  CHECK(r.err.find("(beta,alpha)") != std::string::npos);

  json missing = scenario_to_json(instances::matching_frozen(), uniform_belief(2));
  missing["reward"].erase("alpha,beta");
  CHECK(run({"validate", write_temp("missing.json", missing)}).code == kExitInvalid);
  CHECK(run({"validate", "/nonexistent/file.json"}).code == kExitInvalid);
}

TEST_CASE("unknown flags give usage and exit 64") {
  const auto r = run({"value", "--frobnicate", "3"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({"teleport"}).code == kExitUsage);
  CHECK(run({"value", "--format", "xml"}).code == kExitUsage);
}

TEST_CASE("budget errors exit with 2") {
  CHECK(run({"evaluate", "--scenario", "builtin:matching_revealed", "--horizon", "20", "--budget", "1000",
             "--evaluation", R"({"kind":"n_stage","n":20})"})
            .code == kExitBudget);
  CHECK(run({"irregularity", "--scenario", "builtin:matching_frozen", "--horizon", "3", "--evaluation",
             R"({"kind":"state_block_ex1","l":4})"})
            .code == kExitBudget);
}

TEST_CASE("same seed gives byte-identical output") {
  const std::vector<std::string> args{"evaluate", "--method", "mc", "--samples", "3000", "--seed", "11",
                                      "--evaluation", R"({"kind":"discounted","lambda":0.2})", "--horizon", "60"};
  const auto a = run(args), b = run(args);
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  auto other = args;
  other[6] = "12";
  CHECK(run(other).out != a.out);
  const auto l1 = run({"limsup", "--scenario", "builtin:blind_switch", "--samples", "200", "--horizon", "300", "--seed", "4"});
  CHECK(l1.out == run({"limsup", "--scenario", "builtin:blind_switch", "--samples", "200", "--horizon", "300", "--seed", "4"}).out);
}

TEST_CASE("csv output has the fixed columns") {
  const auto r = run({"value", "--n", "5", "--format", "csv"});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(r.out);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "command,instance,parameter,value,error_bound,method,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(rows >= 1);
}

TEST_CASE("every value report has an error bound") {
  const std::vector<std::vector<std::string>> commands{
      {"value", "--n", "4"},
      {"value", "--lambda", "0.3"},
      {"value", "--n-max", "16"},
      {"evaluate"},
      {"evaluate", "--method", "mc", "--samples", "500"},
      {"liminf", "--samples", "100", "--horizon", "100"},
      {"limsup", "--samples", "100", "--horizon", "100", "--mode", "limsup_belief"},
      {"ergodic", "--scenario", "builtin:uniform_redraw", "--strategy", "always:wait"},
  };
  for (const auto& c : commands) {
    const auto r = run(c);
    INFO(c[0], " ", r.err);
    REQUIRE(r.code == kExitOk);
    const json j = json::parse(r.out);
    std::function<void(const json&)> walk = [&](const json& node) {
      if (node.is_object()) {
        if (node.contains("method") && node.contains("value")) CHECK(node.contains("error_bound"));
        for (const auto& [k, v] : node.items()) walk(v);
      } else if (node.is_array()) {
        for (const auto& v : node) walk(v);
      }
    };
    walk(j["outputs"]);
  }
}

TEST_CASE("reproduce ex1") {
  const auto r8 = run({"reproduce", "ex1", "--l", "8"});
  REQUIRE(r8.code == kExitOk);
  const json a = json::parse(r8.out)["outputs"];
  CHECK(a["v_theta"]["value"].get<double>() == doctest::Approx(1.0));
  CHECK(a["irregularity"]["lower"].get<double>() == doctest::Approx(0.25));
  CHECK(a["baseline_value"]["value"].get<double>() == doctest::Approx(0.5));
  CHECK(a["pass"] == true);
  const json b = json::parse(run({"reproduce", "ex1", "--l", "2"}).out)["outputs"];
  CHECK(b["irregularity"]["lower"].get<double>() == doctest::Approx(1.0));
  CHECK(b["v_theta"]["value"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("reproduce rejects unknown examples") {
  CHECK(run({"reproduce", "ex9"}).code != kExitOk);
}

TEST_CASE("timing is opt-in") {
  CHECK(!json::parse(run({"value", "--n", "2"}).out).contains("wall_time_s"));
  CHECK(json::parse(run({"value", "--n", "2", "--timing"}).out).contains("wall_time_s"));
}

TEST_CASE("scenario round trip") {
  for (const auto& name : builtin_scenario_names()) {
    const Scenario sc = load_scenario("builtin:" + name);
    const Pomdp back = pomdp_from_json(pomdp_to_json(sc.pomdp));
    CHECK(pomdp_to_json(back) == pomdp_to_json(sc.pomdp));
  }
  const Pomdp p = instances::matching_revealed();
  for (const auto& t : enumerate_transducers(p, 2))
    CHECK(transducer_from_json(transducer_to_json(t, p), p) == t);
  StationaryStrategy s;
  s.support = {dirac(2, 0), uniform_belief(2)};
  s.actions = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0.5, 0.5)};
  const auto back = stationary_from_json(stationary_to_json(s), p);
  CHECK(back.support.size() == 2);
  CHECK(back.act(uniform_belief(2)).isApprox(s.actions[1]));
}

TEST_CASE("run-block horizon") {
  CHECK(no_run_probability(1, 1) == doctest::Approx(0.5));
  CHECK(no_run_probability(2, 3) == doctest::Approx(5.0 / 8));
  const int h = run_block_horizon(5);
  CHECK(h % 250 == 0);
  CHECK(no_run_probability(5, h) <= 1e-5);
  if (h > 250) CHECK(no_run_probability(5, h - 250) > 1e-5);
}
