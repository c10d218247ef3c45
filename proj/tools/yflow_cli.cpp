// yflow: scenario runner.
//
//   yflow yamabe   --config scenario.json [--out dir]
//   yflow elliptic --config scenario.json [--out dir]
//   yflow simulate --config scenario.json [--out dir]
//   yflow verify   --config scenario.json [--out dir]
//   yflow report   (--config scenario.json | --out dir)
//   yflow all      --config a.json [--config b.json ...] [--out dir]
//
// Exit status: 0 all checks pass, 1 a check failed, 2 a solver or I/O
// failure (stage named on stderr), 3 invalid configuration.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "yflow/errors.hpp"
#include "yflow/scenario.hpp"

namespace fs = std::filesystem;
using namespace yflow;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kSolverFailure = 2, kConfigError = 3 };

struct Job {
  ScenarioConfig config;
  fs::path out;
};

// Parses every config before any stage runs so that an invalid config
// leaves no artifacts behind.
std::vector<Job> prepare(const std::vector<std::string>& configs, const std::string& out) {
  std::vector<Job> jobs;
  std::set<std::string> names;
  for (const std::string& path : configs) {
    ScenarioConfig c = load_scenario(path);
    if (!names.insert(c.name).second) throw ConfigError(path + ": duplicate scenario name '" + c.name + "'");
    jobs.push_back({std::move(c), {}});
  }
  for (Job& j : jobs) {
    if (out.empty()) {
      j.out = j.config.output_dir;
    } else if (jobs.size() == 1) {
      j.out = out;
    } else {
      j.out = fs::path(out) / j.config.name;
    }
  }
  return jobs;
}

int report_verdicts(const std::vector<Verdict>& verdicts) {
  std::cout << format_verdict_table(verdicts);
  for (const Verdict& v : verdicts) {
    if (!v.passed) return kCheckFailed;
  }
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yamabe flow laboratory on radial asymptotically flat backgrounds"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out;
  auto add_common = [&](CLI::App* sub, bool config_required, bool many) {
    auto* opt = sub->add_option("-c,--config", configs, "Scenario config (JSON)");
    if (config_required) opt->required();
    if (!many) opt->expected(1);
    sub->add_option("-o,--out", out, "Output directory (default: config output_dir)");
  };

  CLI::App* yamabe = app.add_subcommand("yamabe", "Classify the sign of the Yamabe constant");
  CLI::App* elliptic = app.add_subcommand("elliptic", "Solve the elliptic problems the checks need");
  CLI::App* simulate = app.add_subcommand("simulate", "Integrate the flows the checks need");
  CLI::App* verify = app.add_subcommand("verify", "Run the configured checks on saved artifacts");
  CLI::App* report = app.add_subcommand("report", "Assemble report.json and curve CSVs");
  CLI::App* all = app.add_subcommand("all", "Run every stage");
  all->alias("run");
  for (CLI::App* sub : {yamabe, elliptic, simulate, verify}) add_common(sub, true, false);
  add_common(report, false, false);
  add_common(all, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed() && configs.empty()) {
      if (out.empty()) throw ConfigError("report: pass --config or --out");
      const nlohmann::json r = run_report_stage(out);
      std::cout << (fs::path(out) / "report.json").string() << '\n';
      return r.at("all_passed").get<bool>() ? kPass : kCheckFailed;
    }

    const std::vector<Job> jobs = prepare(configs, out);
    int status = kPass;
    for (const Job& job : jobs) {
      if (yamabe->parsed()) {
        const YamabeEstimate est = run_yamabe_stage(job.config, job.out);
        const nlohmann::json j{{"sign", std::string(to_string(est.sign))}, {"lower", est.lower}, {"upper", est.upper}};
        std::cout << j.dump() << '\n';
      } else if (elliptic->parsed()) {
        run_elliptic_stage(job.config, job.out);
      } else if (simulate->parsed()) {
        run_simulate_stage(job.config, job.out);
      } else if (verify->parsed()) {
        status = std::max(status, report_verdicts(run_verify_stage(job.config, job.out)));
      } else if (report->parsed()) {
        const nlohmann::json r = run_report_stage(job.out);
        std::cout << (job.out / "report.json").string() << '\n';
        if (!r.at("all_passed").get<bool>()) status = kCheckFailed;
      } else {
        if (jobs.size() > 1) std::cout << "== " << job.config.name << '\n';
        run_yamabe_stage(job.config, job.out);
        run_elliptic_stage(job.config, job.out);
        run_simulate_stage(job.config, job.out);
        status = std::max(status, report_verdicts(run_verify_stage(job.config, job.out)));
        run_report_stage(job.out);
      }
    }
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StageFailure& e) {
    std::cerr << "solver failure in stage " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}
