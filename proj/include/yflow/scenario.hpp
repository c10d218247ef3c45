#pragma once

// Scenario runner: a JSON config names a grid, a background, flow controls,
// elliptic requests and a list of checks. Each stage writes its artifacts
// under the output directory and later stages read them back from disk, so
// any stage can be rerun on its own.
//
// Layout of an output directory:
//   run.json                          normalized config and seed
//   yamabe.json, yamabe_witness.csv
//   elliptic/<key>.csv, <key>.json    r,value plus solver metadata
//   flows/<name>/summary.csv          t,max_u,max_u_tilde,min_Rt,harnack_K
//   flows/<name>/summary_ext.csv      t,max_R,min_u,argmax_r,max_u_K
//   flows/<name>/checkpoints/*.csv    r,u,u_tilde,R (k<k>.csv at t = 2^k)
//   flows/<name>/meta.json
//   verdicts.json, verdicts.txt
//   report.json, curves/*.csv

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "yflow/background.hpp"
#include "yflow/elliptic.hpp"
#include "yflow/flow.hpp"
#include "yflow/verify.hpp"
#include "yflow/yamabe.hpp"

#include <json.hpp>

namespace yflow {

// A stage failed; what() starts with the stage name.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct CheckSpec {
  std::string name;
  // Defaults merged with the configured values.
  nlohmann::json params;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 0;

  int dimension = 3;
  int nodes = 1024;
  double r_max = 200.0;
  double grading = 1.05;

  CatalogEntry background{"flat", {}};
  double K_radius = 10.0;

  double t_end = 100.0;
  FlowControls flow;

  NewtonControls newton;
  double harmonic_tol = 1e-8;
  std::vector<std::string> equations;

  YamabeControls yamabe;

  std::vector<CheckSpec> checks;
  std::filesystem::path output_dir;
};

// Throws ConfigError on schema violations, unknown keys, unknown checks or
// non-positive thresholds.
ScenarioConfig parse_scenario(const nlohmann::json& config);
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Normalized form of a config, with every default filled in.
nlohmann::json to_json(const ScenarioConfig& config);

// Names of the elliptic artifacts and flows the checks depend on, in
// execution order.
std::vector<std::string> required_equations(const ScenarioConfig& config);
std::vector<std::string> required_flows(const ScenarioConfig& config);

Background scenario_background(const ScenarioConfig& config);

// Stages. Each throws StageFailure naming itself when a solver fails or a
// prerequisite artifact is missing.
YamabeEstimate run_yamabe_stage(const ScenarioConfig& config, const std::filesystem::path& out);
void run_elliptic_stage(const ScenarioConfig& config, const std::filesystem::path& out);
void run_simulate_stage(const ScenarioConfig& config, const std::filesystem::path& out);
std::vector<Verdict> run_verify_stage(const ScenarioConfig& config,
                                      const std::filesystem::path& out);
nlohmann::json run_report_stage(const std::filesystem::path& out);

// All stages in order. Returns true when every check passed.
bool run_scenario(const ScenarioConfig& config, const std::filesystem::path& out);

// Artifact I/O. Numbers are written with 17 significant digits so that a
// reloaded artifact reproduces the in-memory values exactly.
void save_solution(const std::filesystem::path& dir, const std::string& key,
                   const RadialGrid& grid, const EllipticSolution& sol, std::uint64_t seed);
EllipticSolution load_solution(const std::filesystem::path& dir, const std::string& key,
                               const RadialGrid& grid);

void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                     const nlohmann::json& extra_meta, std::uint64_t seed);
// bg must be the background the trajectory was integrated on.
Trajectory load_trajectory(const std::filesystem::path& dir, const Background& bg);
nlohmann::json load_json(const std::filesystem::path& path);

void save_verdicts(const std::filesystem::path& out, const std::vector<Verdict>& verdicts,
                   std::uint64_t seed);
std::vector<Verdict> load_verdicts(const std::filesystem::path& out);

// One line per verdict: name, PASS/FAIL, margin.
std::string format_verdict_table(const std::vector<Verdict>& verdicts);

}  // namespace yflow
