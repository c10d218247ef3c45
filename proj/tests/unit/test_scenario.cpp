#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "yflow/errors.hpp"
#include "yflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace yflow;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({
    "name": "t",
    "grid": {"dimension": 3, "nodes": 256, "r_max": 50},
    "background": {"kind": "flat", "K_radius": 10},
    "flow": {"t_end": 4},
    "yamabe": {"ball_radii": [5, 10]}
  })");
}

std::string config_error(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("minimal config gets defaults") {
    const ScenarioConfig c = parse_scenario(minimal());
    CHECK(c.name == "t");
    CHECK(c.seed == 0);
    CHECK(c.output_dir == fs::path("out/t"));
    CHECK(c.grading == 1.05);
    CHECK(c.flow.eta == FlowControls{}.eta);
    CHECK(c.checks.empty());
    CHECK(required_flows(c) == std::vector<std::string>{"base"});
    CHECK(required_equations(c).empty());
  }

  TEST_CASE("check parameters are merged with defaults") {
    json j = minimal();
    j["checks"] = json::array({{{"name", "harnack"}, {"C_cap", 30}}, {{"name", "comparison"}}});
    const ScenarioConfig c = parse_scenario(j);
    REQUIRE(c.checks.size() == 2);
    CHECK(c.checks[0].params.at("C_cap") == 30);
    CHECK(c.checks[0].params.at("r_hi") == 5.0);
    CHECK(c.checks[0].params.at("flow") == "rho");
    CHECK(c.checks[1].params.at("tol") == 1e-10);
    CHECK(c.checks[1].params.at("offset") == 0.1);
  }

  TEST_CASE("invalid configs are rejected with a path") {
    struct Case {
      const char* pointer;
      json value;
      const char* expect;
    };
    const Case cases[] = {
        {"/grid/nodes", 10, "config.grid.nodes"},
        {"/grid/r_max", -5.0, "config.grid.r_max"},
        {"/grid/extra", 1, "config.grid.extra: unknown key"},
        {"/flow/t_end", 0.5, "config.flow.t_end"},
        {"/flow/eta", "big", "config.flow.eta: must be a number"},
        {"/background/kind", "torus", "config.background"},
        {"/elliptic", {{"equations", {"heat"}}}, "config.elliptic.equations"},
        {"/yamabe", {{"tol", 0.0}}, "config.yamabe.tol: must be positive"},
        {"/checks", {{{"name", "stationarity"}, {"tol", -1e-8}}}, "config.checks[0].tol: must be positive"},
        {"/checks", {{{"name", "theoremZ"}}}, "unknown check 'theoremZ'"},
        {"/checks", {{{"name", "sandwich"}}, {{"name", "sandwich"}}}, "duplicate check 'sandwich'"},
        {"/checks", {{{"name", "harnack"}, {"flow", "w"}}}, "config.checks[0].flow"},
        {"/checks", {{{"name", "harnack"}, {"radius", 3}}}, "config.checks[0].radius: unknown key"},
        {"/surprise", true, "config.surprise: unknown key"},
    };
    for (const Case& c : cases) {
      json j = minimal();
      j[json::json_pointer(c.pointer)] = c.value;
      const std::string msg = config_error(j);
      INFO(c.pointer);
      CHECK(msg.find(c.expect) != std::string::npos);
    }
    json no_name = minimal();
    no_name.erase("name");
    CHECK(config_error(no_name).find("config.name") != std::string::npos);
    json no_flow = minimal();
    no_flow.erase("flow");
    CHECK(config_error(no_flow).find("config.flow") != std::string::npos);
    CHECK(config_error(json::array()).find("config") != std::string::npos);
  }

  TEST_CASE("load_scenario reports unreadable files") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/config.json"), ConfigError);
    const fs::path p = fs::temp_directory_path() / "yflow_bad_config.json";
    std::ofstream(p) << "{ not json";
    CHECK_THROWS_AS(load_scenario(p), ConfigError);
  }

  TEST_CASE("normalized config round-trips") {
    for (const char* name : {"flat-sanity", "neg-yamabe-reference", "zero-yamabe-reference"}) {
      const ScenarioConfig c = load_scenario(fs::path(YFLOW_SOURCE_DIR) / "scenarios" / (std::string(name) + ".json"));
      const json once = to_json(c);
      CHECK(to_json(parse_scenario(once)) == once);
      CHECK(c.name == name);
    }
  }

  TEST_CASE("dependencies of the checks") {
    json j = minimal();
    j["checks"] = json::array({{{"name", "sandwich"}},
                               {{"name", "theoremC"}},
                               {{"name", "harmonic_uniqueness"}},
                               {{"name", "comparison"}},
                               {{"name", "theoremB"}, {"flow", "v"}}});
    const ScenarioConfig c = parse_scenario(j);
    CHECK(required_flows(c) == std::vector<std::string>{"base", "comparison_upper", "rho", "v", "v_low", "v_high"});
    CHECK(required_equations(c) ==
          std::vector<std::string>{"harmonic_decay", "harmonic_decay_far_field", "prescribe_rho"});

    json k = minimal();
    k["checks"] = json::array({{{"name", "theoremA"}}});
    k["elliptic"] = {{"equations", {"compactified_u0"}}};
    CHECK(required_equations(parse_scenario(k)) == std::vector<std::string>{"steady_neg", "compactified_u0"});
  }

  TEST_CASE("stages run from artifacts on disk") {
    const fs::path out = fs::temp_directory_path() / "yflow_scenario_stages";
    fs::remove_all(out);
    json j = minimal();
    j["seed"] = 5;
    j["checks"] = json::array({{{"name", "stationarity"}}, {{"name", "comparison"}}});
    const ScenarioConfig c = parse_scenario(j);

    CHECK_THROWS_AS(run_verify_stage(c, out), StageFailure);
    CHECK(run_scenario(c, out));
    for (const char* f : {"run.json", "yamabe.json", "yamabe_witness.csv", "flows/base/meta.json",
                          "flows/comparison_upper/summary.csv", "verdicts.json", "verdicts.txt", "report.json",
                          "curves/max_u_tilde.csv", "curves/u_tilde_final.csv"}) {
      INFO(f);
      CHECK(fs::exists(out / f));
    }
    const json report = load_json(out / "report.json");
    CHECK(report.at("all_passed") == true);
    CHECK(report.at("seed") == 5);
    CHECK(report.at("verdicts").size() == 2);
    CHECK(load_json(out / "yamabe.json").at("sign") == "positive");

    // Verify again from disk: same verdicts.
    const std::vector<Verdict> again = run_verify_stage(c, out);
    const std::vector<Verdict> saved = load_verdicts(out);
    REQUIRE(again.size() == saved.size());
    for (std::size_t k = 0; k < again.size(); ++k) CHECK(again[k].margin == saved[k].margin);

    try {
      json bad = minimal();
      bad["checks"] = json::array({{{"name", "harmonic_uniqueness"}}});
      run_elliptic_stage(parse_scenario(bad), out);
      FAIL("expected a stage failure");
    } catch (const StageFailure& e) {
      CHECK(e.stage() == "elliptic");
      CHECK(std::string(e.what()).find("elliptic") == 0);
    }
  }

  TEST_CASE("report with an empty check list") {
    const fs::path out = fs::temp_directory_path() / "yflow_scenario_empty";
    fs::remove_all(out);
    const ScenarioConfig c = parse_scenario(minimal());
    CHECK(run_scenario(c, out));
    const json report = load_json(out / "report.json");
    CHECK(report.at("verdicts").empty());
    CHECK(report.at("all_passed") == true);
    CHECK(format_verdict_table({}).find("check") == 0);
  }
}
