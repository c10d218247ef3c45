#include "yflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "yflow/csv.hpp"
#include "yflow/errors.hpp"

namespace yflow {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { positive, nonnegative, text };

struct ParamSpec {
  const char* key;
  Kind kind;
  json value;
};

const std::map<std::string, std::vector<ParamSpec>>& check_catalog() {
  static const std::map<std::string, std::vector<ParamSpec>> catalog{
      {"stationarity", {{"tol", Kind::positive, 1e-8}}},
      {"curvature_lower", {{"tol", Kind::positive, 1e-2}}},
      {"rescaled_monotone", {{"tol", Kind::positive, 1e-10}}},
      {"comparison", {{"tol", Kind::positive, 1e-10}, {"offset", Kind::positive, 0.1}}},
      {"lower_envelope", {{"tol", Kind::positive, 1e-10}, {"compare_radius", Kind::positive, 10.0}}},
      {"theoremA",
       {{"tol", Kind::positive, 1e-2},
        {"rate_tolerance", Kind::positive, 0.10},
        {"decay_tolerance", Kind::positive, 0.15},
        {"rate_window", Kind::positive, 10.0}}},
      {"theoremB",
       {{"tol", Kind::positive, 0.05}, {"min_max_u", Kind::nonnegative, 0.0}, {"flow", Kind::text, "base"}}},
      {"theoremC", {{"tol", Kind::positive, 0.02}}},
      {"harmonic_uniqueness", {{"tol", Kind::positive, 1e-4}}},
      {"harnack",
       {{"r_lo", Kind::nonnegative, 0.0},
        {"r_hi", Kind::positive, 5.0},
        {"C_cap", Kind::positive, HarnackOptions{}.C_cap},
        {"t_min", Kind::positive, 1.0},
        {"slope_tol", Kind::positive, 0.05},
        {"flow", Kind::text, "rho"}}},
      {"curvature_sandwich", {{"tol", Kind::positive, 1e-2}}},
      {"sandwich", {{"tol", Kind::positive, 1e-11}}},
      {"max_on_compact", {{"tol", Kind::positive, 1e-10}}},
      {"rho_relation", {{"tol", Kind::positive, 1e-11}}},
      {"scalar_evolution", {{"probe_time", Kind::positive, 1.0}, {"min_order", Kind::positive, 0.9}}},
      {"scalar_evolution_control",
       {{"probe_time", Kind::positive, 1.0}, {"max_order", Kind::positive, 0.5}}},
  };
  return catalog;
}

const std::vector<std::string> kFlowNames{"base", "comparison_upper", "rho", "v", "v_low", "v_high"};
const std::vector<std::string> kEquationKeys{"steady_neg", "harmonic_decay", "harmonic_decay_far_field",
                                             "compactified_u0", "prescribe_rho"};

bool contains(const std::vector<std::string>& list, const std::string& x) {
  return std::find(list.begin(), list.end(), x) != list.end();
}

[[noreturn]] void config_fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

// Object reader that rejects unknown keys.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(path_, "must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const char* key, double fallback, Kind kind) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) config_fail(sub(key), "must be a number");
    const double x = v.get<double>();
    check_number(sub(key), x, kind);
    return x;
  }

  double required_number(const char* key, Kind kind) {
    if (!has(key)) config_fail(sub(key), "is required");
    return number(key, 0.0, kind);
  }

  long integer(const char* key, long fallback, long min) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) config_fail(sub(key), "must be an integer");
    const long x = v.get<long>();
    if (x < min) config_fail(sub(key), "must be >= " + std::to_string(min));
    return x;
  }

  std::string text(const char* key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_string()) config_fail(sub(key), "must be a string");
    return v.get<std::string>();
  }

  std::string sub(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) config_fail(sub(it.key()), "unknown key");
    }
  }

  static void check_number(const std::string& path, double x, Kind kind) {
    if (!std::isfinite(x)) config_fail(path, "must be finite");
    if (kind == Kind::positive && !(x > 0.0)) config_fail(path, "must be positive");
    if (kind == Kind::nonnegative && !(x >= 0.0)) config_fail(path, "must be non-negative");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(const json& j, const std::string& path, Kind kind) {
  if (!j.is_array()) config_fail(path, "must be an array of numbers");
  std::vector<double> out;
  for (const json& x : j) {
    if (!x.is_number()) config_fail(path, "must be an array of numbers");
    out.push_back(x.get<double>());
    Section::check_number(path, out.back(), kind);
  }
  return out;
}

// JSON cannot carry inf/nan; store them as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double read_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw std::runtime_error("expected a number, got " + j.dump());
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

json param(const CheckSpec& c, const char* key) { return c.params.at(key); }
double dparam(const CheckSpec& c, const char* key) { return c.params.at(key).get<double>(); }

std::vector<double> node_vector(const RadialGrid& grid) {
  return std::vector<double>(grid.nodes().begin(), grid.nodes().end());
}

template <class F>
auto in_stage(const std::string& stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageFailure&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(stage, e.what());
  }
}

void write_run_json(const ScenarioConfig& config, const fs::path& out) {
  write_json(out / "run.json", json{{"scenario", to_json(config)}, {"seed", config.seed}});
}

std::string checkpoint_key(const FlowState& s, double time_scale, std::size_t index) {
  if (s.t == 0.0) return "init";
  const int k = static_cast<int>(std::lround(std::log2(s.t / time_scale)));
  if (std::ldexp(time_scale, k) == s.t) return "k" + std::to_string(k);
  return "t" + std::to_string(index);
}

json controls_json(const FlowControls& c) {
  return json{{"dt_warmup", c.dt_warmup},   {"t_warmup", c.t_warmup},
              {"eta", c.eta},               {"newton_tol", c.newton_tol},
              {"max_newton", c.max_newton}, {"max_halvings", c.max_halvings},
              {"dt_min", c.dt_min},         {"time_scale", c.time_scale},
              {"boundary_value", c.boundary_value},
              {"extra_checkpoints", c.extra_checkpoints}};
}

FlowControls controls_from_json(const json& j) {
  FlowControls c;
  c.dt_warmup = j.at("dt_warmup").get<double>();
  c.t_warmup = j.at("t_warmup").get<double>();
  c.eta = j.at("eta").get<double>();
  c.newton_tol = j.at("newton_tol").get<double>();
  c.max_newton = j.at("max_newton").get<int>();
  c.max_halvings = j.at("max_halvings").get<int>();
  c.dt_min = j.at("dt_min").get<double>();
  c.time_scale = j.at("time_scale").get<double>();
  c.boundary_value = j.at("boundary_value").get<double>();
  c.extra_checkpoints = j.at("extra_checkpoints").get<std::vector<double>>();
  return c;
}

const CheckSpec* find_check(const ScenarioConfig& config, const std::string& name) {
  for (const CheckSpec& c : config.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

fs::path flow_dir(const fs::path& out, const std::string& name) { return out / "flows" / name; }

bool uses_rho_background(const std::string& flow) { return flow != "base" && flow != "comparison_upper"; }

}  // namespace

StageFailure::StageFailure(std::string stage, const std::string& message)
    : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig c;
  Section top(j, "config");
  if (!top.has("name")) config_fail("config.name", "is required");
  c.name = top.text("name", "");
  if (c.name.empty()) config_fail("config.name", "must not be empty");
  c.seed = static_cast<std::uint64_t>(top.integer("seed", 0, 0));
  c.output_dir = top.text("output_dir", "out/" + c.name);

  if (!top.has("grid")) config_fail("config.grid", "is required");
  {
    Section g(top.raw("grid"), "config.grid");
    c.dimension = static_cast<int>(g.integer("dimension", c.dimension, 3));
    c.nodes = static_cast<int>(g.integer("nodes", c.nodes, 64));
    c.r_max = g.number("r_max", c.r_max, Kind::positive);
    c.grading = g.number("grading", c.grading, Kind::positive);
    g.finish();
  }

  if (!top.has("background")) config_fail("config.background", "is required");
  {
    Section b(top.raw("background"), "config.background");
    if (!b.has("kind")) config_fail("config.background.kind", "is required");
    c.background.kind = b.text("kind", "");
    c.K_radius = b.number("K_radius", c.K_radius, Kind::positive);
    if (b.has("params")) {
      const json& p = b.raw("params");
      if (!p.is_object()) config_fail("config.background.params", "must be an object");
      for (auto it = p.begin(); it != p.end(); ++it) {
        const std::string path = "config.background.params." + it.key();
        if (!it.value().is_number()) config_fail(path, "must be a number");
        const double x = it.value().get<double>();
        Section::check_number(path, x, Kind::nonnegative);
        c.background.params[it.key()] = x;
      }
    }
    b.finish();
  }

  if (!top.has("flow")) config_fail("config.flow", "is required");
  {
    Section f(top.raw("flow"), "config.flow");
    c.t_end = f.required_number("t_end", Kind::positive);
    if (c.t_end < 1.0) config_fail("config.flow.t_end", "must be >= 1");
    c.flow.dt_warmup = f.number("dt_warmup", c.flow.dt_warmup, Kind::positive);
    c.flow.t_warmup = f.number("t_warmup", c.flow.t_warmup, Kind::positive);
    c.flow.eta = f.number("eta", c.flow.eta, Kind::positive);
    c.flow.newton_tol = f.number("newton_tol", c.flow.newton_tol, Kind::positive);
    c.flow.dt_min = f.number("dt_min", c.flow.dt_min, Kind::positive);
    c.flow.max_newton = static_cast<int>(f.integer("max_newton", c.flow.max_newton, 1));
    c.flow.max_halvings = static_cast<int>(f.integer("max_halvings", c.flow.max_halvings, 1));
    if (f.has("extra_checkpoints")) {
      c.flow.extra_checkpoints =
          number_list(f.raw("extra_checkpoints"), "config.flow.extra_checkpoints", Kind::positive);
    }
    f.finish();
  }

  if (top.has("elliptic")) {
    Section e(top.raw("elliptic"), "config.elliptic");
    c.newton.tolerance = e.number("tolerance", c.newton.tolerance, Kind::positive);
    c.newton.max_iterations = static_cast<int>(e.integer("max_iterations", c.newton.max_iterations, 1));
    c.newton.max_halvings = static_cast<int>(e.integer("max_halvings", c.newton.max_halvings, 1));
    c.harmonic_tol = e.number("harmonic_tol", c.harmonic_tol, Kind::positive);
    if (e.has("equations")) {
      const json& list = e.raw("equations");
      if (!list.is_array()) config_fail("config.elliptic.equations", "must be an array of names");
      for (const json& x : list) {
        if (!x.is_string() || !contains(kEquationKeys, x.get<std::string>())) {
          config_fail("config.elliptic.equations", "unknown equation " + x.dump());
        }
        c.equations.push_back(x.get<std::string>());
      }
    }
    e.finish();
  }

  if (top.has("yamabe")) {
    Section y(top.raw("yamabe"), "config.yamabe");
    c.yamabe.tol = y.number("tol", c.yamabe.tol, Kind::positive);
    c.yamabe.max_iterations = static_cast<int>(y.integer("max_iterations", c.yamabe.max_iterations, 1));
    c.yamabe.convergence = y.number("convergence", c.yamabe.convergence, Kind::positive);
    if (y.has("ball_radii")) {
      c.yamabe.ball_radii = number_list(y.raw("ball_radii"), "config.yamabe.ball_radii", Kind::positive);
    }
    y.finish();
  }
  c.yamabe.seed = c.seed;

  if (top.has("checks")) {
    const json& list = top.raw("checks");
    if (!list.is_array()) config_fail("config.checks", "must be an array");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "config.checks[" + std::to_string(i) + "]";
      Section s(list[i], path);
      if (!s.has("name")) config_fail(path + ".name", "is required");
      CheckSpec spec;
      spec.name = s.text("name", "");
      const auto it = check_catalog().find(spec.name);
      if (it == check_catalog().end()) config_fail(path + ".name", "unknown check '" + spec.name + "'");
      if (!seen.insert(spec.name).second) config_fail(path + ".name", "duplicate check '" + spec.name + "'");
      spec.params = json::object();
      for (const ParamSpec& p : it->second) {
        if (p.kind == Kind::text) {
          const std::string v = s.text(p.key, p.value.get<std::string>());
          if (std::string(p.key) == "flow" && !(v == "base" || v == "rho" || v == "v")) {
            config_fail(s.sub(p.key), "must be one of base, rho, v");
          }
          spec.params[p.key] = v;
        } else {
          spec.params[p.key] = s.number(p.key, p.value.get<double>(), p.kind);
        }
      }
      s.finish();
      c.checks.push_back(std::move(spec));
    }
  }
  top.finish();

  try {
    (void)scenario_background(c);
  } catch (const std::invalid_argument& e) {
    config_fail("config.background", e.what());
  }
  return c;
}

ScenarioConfig load_scenario(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

json to_json(const ScenarioConfig& c) {
  json checks = json::array();
  for (const CheckSpec& s : c.checks) {
    json item = s.params;
    item["name"] = s.name;
    checks.push_back(item);
  }
  json params = json::object();
  for (const auto& [k, v] : c.background.params) params[k] = v;
  return json{
      {"name", c.name},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"grid", {{"dimension", c.dimension}, {"nodes", c.nodes}, {"r_max", c.r_max}, {"grading", c.grading}}},
      {"background", {{"kind", c.background.kind}, {"params", params}, {"K_radius", c.K_radius}}},
      {"flow",
       {{"t_end", c.t_end},
        {"dt_warmup", c.flow.dt_warmup},
        {"t_warmup", c.flow.t_warmup},
        {"eta", c.flow.eta},
        {"newton_tol", c.flow.newton_tol},
        {"dt_min", c.flow.dt_min},
        {"max_newton", c.flow.max_newton},
        {"max_halvings", c.flow.max_halvings},
        {"extra_checkpoints", c.flow.extra_checkpoints}}},
      {"elliptic",
       {{"tolerance", c.newton.tolerance},
        {"max_iterations", c.newton.max_iterations},
        {"max_halvings", c.newton.max_halvings},
        {"harmonic_tol", c.harmonic_tol},
        {"equations", c.equations}}},
      {"yamabe",
       {{"tol", c.yamabe.tol},
        {"max_iterations", c.yamabe.max_iterations},
        {"convergence", c.yamabe.convergence},
        {"ball_radii", c.yamabe.ball_radii}}},
      {"checks", checks},
  };
}

std::vector<std::string> required_equations(const ScenarioConfig& c) {
  std::set<std::string> need(c.equations.begin(), c.equations.end());
  if (find_check(c, "lower_envelope") || find_check(c, "theoremA")) need.insert("steady_neg");
  if (find_check(c, "theoremC")) need.insert("harmonic_decay");
  if (find_check(c, "harmonic_uniqueness")) {
    need.insert("harmonic_decay");
    need.insert("harmonic_decay_far_field");
  }
  for (const std::string& f : required_flows(c)) {
    if (uses_rho_background(f)) need.insert("prescribe_rho");
  }
  std::vector<std::string> out;
  for (const std::string& k : kEquationKeys) {
    if (need.count(k)) out.push_back(k);
  }
  return out;
}

std::vector<std::string> required_flows(const ScenarioConfig& c) {
  std::set<std::string> need{"base"};
  if (find_check(c, "comparison")) need.insert("comparison_upper");
  if (find_check(c, "rho_relation")) need.insert("rho");
  if (find_check(c, "curvature_sandwich") || find_check(c, "max_on_compact")) need.insert("v");
  if (find_check(c, "sandwich")) {
    need.insert("rho");
    need.insert("v_low");
    need.insert("v_high");
  }
  for (const char* name : {"harnack", "theoremB"}) {
    if (const CheckSpec* s = find_check(c, name)) need.insert(param(*s, "flow").get<std::string>());
  }
  std::vector<std::string> out;
  for (const std::string& f : kFlowNames) {
    if (need.count(f)) out.push_back(f);
  }
  return out;
}

Background scenario_background(const ScenarioConfig& c) {
  return make_background(build_grid(c.dimension, c.nodes, c.r_max, c.grading), c.background, c.K_radius);
}

// ---------------------------------------------------------------------------
// Artifact I/O

json load_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("missing artifact " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_solution(const fs::path& dir, const std::string& key, const RadialGrid& grid,
                   const EllipticSolution& sol, std::uint64_t seed) {
  write_csv(dir / (key + ".csv"), {"r", "value"}, {node_vector(grid), sol.values});
  write_json(dir / (key + ".json"), json{{"key", key},
                                         {"equation", std::string(to_string(sol.equation))},
                                         {"residual_sup", num(sol.residual_sup)},
                                         {"decay_exponent", num(sol.decay_exponent)},
                                         {"newton_iters", sol.newton_iters},
                                         {"nodes", grid.size()},
                                         {"seed", seed}});
}

EllipticSolution load_solution(const fs::path& dir, const std::string& key, const RadialGrid& grid) {
  const json meta = load_json(dir / (key + ".json"));
  const CsvTable table = read_csv(dir / (key + ".csv"));
  EllipticSolution sol;
  sol.values = table.column("value");
  if (sol.values.size() != grid.size()) {
    throw std::runtime_error((dir / (key + ".csv")).string() + ": node count does not match the grid");
  }
  sol.residual_sup = read_num(meta.at("residual_sup"));
  sol.decay_exponent = read_num(meta.at("decay_exponent"));
  sol.newton_iters = meta.at("newton_iters").get<int>();
  const auto eq = parse_equation(meta.at("equation").get<std::string>());
  if (!eq) throw std::runtime_error((dir / (key + ".json")).string() + ": unknown equation");
  sol.equation = *eq;
  return sol;
}

void save_trajectory(const fs::path& dir, const Trajectory& traj, const json& extra_meta,
                     std::uint64_t seed) {
  const std::size_t rows = traj.summary.size();
  std::vector<std::vector<double>> cols(9, std::vector<double>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    const SummaryRow& s = traj.summary[i];
    const double values[9] = {s.t, s.max_u, s.max_u_tilde, s.min_Rt, s.harnack_K,
                              s.max_R, s.min_u, s.argmax_r, s.max_u_K};
    for (int c = 0; c < 9; ++c) cols[c][i] = values[c];
  }
  write_csv(dir / "summary.csv", {"t", "max_u", "max_u_tilde", "min_Rt", "harnack_K"},
            {cols[0], cols[1], cols[2], cols[3], cols[4]});
  write_csv(dir / "summary_ext.csv", {"t", "max_R", "min_u", "argmax_r", "max_u_K"},
            {cols[0], cols[5], cols[6], cols[7], cols[8]});

  const Background& bg = traj.background;
  const std::vector<double> r = node_vector(bg.grid);
  json checkpoints = json::array();
  for (std::size_t i = 0; i < traj.checkpoints.size(); ++i) {
    const FlowState& s = traj.checkpoints[i];
    const std::string file = "checkpoints/" + checkpoint_key(s, traj.controls.time_scale, i) + ".csv";
    std::vector<double> tilde(s.u.size(), std::nan(""));
    if (s.t > 0.0) tilde = rescaled(s, bg.dimension());
    write_csv(dir / file, {"r", "u", "u_tilde", "R"}, {r, s.u, tilde, conformal_scalar_curvature(bg, s.u)});
    checkpoints.push_back(json{{"file", file}, {"t", s.t}, {"step_index", s.step_index}});
  }

  json meta = extra_meta;
  meta["t_end"] = traj.t_end;
  meta["steps"] = traj.steps;
  meta["newton_iterations"] = traj.newton_iterations;
  meta["rejected_steps"] = traj.rejected_steps;
  meta["aborted"] = traj.aborted;
  meta["abort_reason"] = traj.abort_reason;
  meta["controls"] = controls_json(traj.controls);
  meta["background_kind"] = bg.kind;
  meta["checkpoints"] = checkpoints;
  meta["seed"] = seed;
  write_json(dir / "meta.json", meta);
}

Trajectory load_trajectory(const fs::path& dir, const Background& bg) {
  const json meta = load_json(dir / "meta.json");
  Trajectory traj{bg,
                  controls_from_json(meta.at("controls")),
                  meta.at("t_end").get<double>(),
                  {},
                  {},
                  meta.at("steps").get<long>(),
                  meta.at("newton_iterations").get<long>(),
                  meta.at("rejected_steps").get<long>(),
                  meta.at("aborted").get<bool>(),
                  meta.at("abort_reason").get<std::string>()};

  const CsvTable summary = read_csv(dir / "summary.csv");
  const CsvTable ext = read_csv(dir / "summary_ext.csv");
  if (summary.rows.size() != ext.rows.size()) {
    throw std::runtime_error((dir / "summary_ext.csv").string() + ": row count differs from summary.csv");
  }
  const std::vector<double> t = summary.column("t"), max_u = summary.column("max_u"),
                            max_tilde = summary.column("max_u_tilde"), min_Rt = summary.column("min_Rt"),
                            harnack = summary.column("harnack_K"), max_R = ext.column("max_R"),
                            min_u = ext.column("min_u"), argmax = ext.column("argmax_r"),
                            max_K = ext.column("max_u_K");
  for (std::size_t i = 0; i < t.size(); ++i) {
    traj.summary.push_back(
        SummaryRow{t[i], max_u[i], max_tilde[i], min_Rt[i], harnack[i], max_R[i], min_u[i], argmax[i], max_K[i]});
  }

  for (const json& c : meta.at("checkpoints")) {
    const fs::path file = dir / c.at("file").get<std::string>();
    FlowState s;
    s.t = c.at("t").get<double>();
    s.step_index = c.at("step_index").get<long>();
    s.u = read_csv(file).column("u");
    if (s.u.size() != bg.grid.size()) {
      throw std::runtime_error(file.string() + ": node count does not match the grid");
    }
    traj.checkpoints.push_back(std::move(s));
  }
  if (traj.checkpoints.empty()) throw std::runtime_error((dir / "meta.json").string() + ": no checkpoints");
  return traj;
}

void save_verdicts(const fs::path& out, const std::vector<Verdict>& verdicts, std::uint64_t seed) {
  json list = json::array();
  for (const Verdict& v : verdicts) {
    list.push_back(json{{"name", v.name}, {"passed", v.passed}, {"margin", num(v.margin)}, {"details", v.details}});
  }
  write_json(out / "verdicts.json", json{{"seed", seed}, {"verdicts", list}});
  write_text(out / "verdicts.txt", format_verdict_table(verdicts));
}

std::vector<Verdict> load_verdicts(const fs::path& out) {
  const json j = load_json(out / "verdicts.json");
  std::vector<Verdict> verdicts;
  try {
    for (const json& v : j.at("verdicts")) {
      Verdict x;
      x.name = v.at("name").get<std::string>();
      x.passed = v.at("passed").get<bool>();
      x.margin = read_num(v.at("margin"));
      x.details = v.at("details");
      verdicts.push_back(std::move(x));
    }
  } catch (const std::exception& e) {
    throw std::runtime_error((out / "verdicts.json").string() + ": " + e.what());
  }
  return verdicts;
}

std::string format_verdict_table(const std::vector<Verdict>& verdicts) {
  std::string text;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-6s %s\n", "check", "result", "margin");
  text += line;
  for (const Verdict& v : verdicts) {
    std::snprintf(line, sizeof line, "%-28s %-6s %.6g\n", v.name.c_str(), v.passed ? "PASS" : "FAIL", v.margin);
    text += line;
  }
  return text;
}

// ---------------------------------------------------------------------------
// Stages

YamabeEstimate run_yamabe_stage(const ScenarioConfig& config, const fs::path& out) {
  return in_stage("yamabe", [&] {
    write_run_json(config, out);
    const Background bg = scenario_background(config);
    YamabeEstimate est = estimate_yamabe(bg, config.yamabe);
    write_csv(out / "yamabe_witness.csv", {"r", "witness"}, {node_vector(bg.grid), est.witness});
    write_json(out / "yamabe.json", json{{"sign", std::string(to_string(est.sign))},
                                         {"lower", num(est.lower)},
                                         {"upper", num(est.upper)},
                                         {"tol", config.yamabe.tol},
                                         {"smallest_eigenvalue", num(est.smallest_eigenvalue)},
                                         {"iterations", est.iterations},
                                         {"ball_radii", est.ball_radii},
                                         {"ball_upper", est.ball_upper},
                                         {"seed", config.seed}});
    return est;
  });
}

namespace {

YamabeSign load_sign(const fs::path& out) {
  const json j = load_json(out / "yamabe.json");
  const auto sign = parse_sign(j.at("sign").get<std::string>());
  if (!sign) throw std::runtime_error((out / "yamabe.json").string() + ": unknown sign");
  return *sign;
}

}  // namespace

void run_elliptic_stage(const ScenarioConfig& config, const fs::path& out) {
  in_stage("elliptic", [&] {
    write_run_json(config, out);
    const Background bg = scenario_background(config);
    const fs::path dir = out / "elliptic";
    for (const std::string& key : required_equations(config)) {
      EllipticSolution sol;
      try {
        if (key == "steady_neg") {
          sol = solve_steady_negative(bg, config.newton);
        } else if (key == "harmonic_decay") {
          sol = solve_harmonic_decay(bg, HarmonicAnchor::axis, config.harmonic_tol);
        } else if (key == "harmonic_decay_far_field") {
          sol = solve_harmonic_decay(bg, HarmonicAnchor::far_field, config.harmonic_tol);
        } else if (key == "compactified_u0") {
          sol = solve_compactified_u0(bg, load_sign(out), std::nullopt, config.newton);
        } else {
          sol = prescribe_scalar_curvature(bg, compactly_supported_target(bg), config.newton);
        }
      } catch (const std::exception& e) {
        throw std::runtime_error(key + ": " + e.what());
      }
      save_solution(dir, key, bg.grid, sol, config.seed);
    }
  });
}

void run_simulate_stage(const ScenarioConfig& config, const fs::path& out) {
  in_stage("simulate", [&] {
    write_run_json(config, out);
    const Background bg = scenario_background(config);
    const std::vector<std::string> flows = required_flows(config);

    std::optional<EllipticSolution> rho;
    std::optional<Background> rho_bg;
    if (std::any_of(flows.begin(), flows.end(), uses_rho_background)) {
      rho = load_solution(out / "elliptic", "prescribe_rho", bg.grid);
      rho_bg = conformal_change(bg, rho->values);
    }

    auto finish = [&](const std::string& name, const Trajectory& traj, json meta) {
      meta["flow"] = name;
      save_trajectory(flow_dir(out, name), traj, meta, config.seed);
      if (traj.aborted) throw std::runtime_error("flow " + name + " aborted: " + traj.abort_reason);
    };

    for (const std::string& name : flows) {
      if (name == "base") {
        finish(name, run(bg, config.t_end, config.flow), {{"background", "base"}, {"scale", 1.0}});
      } else if (name == "comparison_upper") {
        const double offset = dparam(*find_check(config, "comparison"), "offset");
        FlowControls c = config.flow;
        c.boundary_value = 1.0 + offset;
        const std::vector<double> initial(bg.grid.size(), 1.0 + offset);
        finish(name, run(bg, config.t_end, c, initial), {{"background", "base"}, {"scale", 1.0}});
      } else if (name == "rho" || name == "v") {
        // run_rho integrates both; keep only the one asked for unless both are.
        const bool both = contains(flows, "rho") && contains(flows, "v");
        if (name == "v" && both) continue;
        RhoFlow rf = run_rho(bg, *rho, config.t_end, config.flow);
        if (name == "rho" || both) finish("rho", rf.u_rho, {{"background", "rho"}, {"scale", 1.0}});
        if (name == "v" || both) finish("v", rf.v, {{"background", "rho"}, {"scale", 1.0}});
      } else {
        const auto [lo, hi] = std::minmax_element(rho->values.begin(), rho->values.end());
        const double c = name == "v_low" ? 1.0 / *hi : 1.0 / *lo;
        finish(name, run_for_scaling(*rho_bg, c, config.t_end, config.flow),
               {{"background", "rho"}, {"scale", c}});
      }
    }
  });
}

std::vector<Verdict> run_verify_stage(const ScenarioConfig& config, const fs::path& out) {
  return in_stage("verify", [&] {
    write_run_json(config, out);
    const Background bg = scenario_background(config);

    std::map<std::string, EllipticSolution> solutions;
    auto solution = [&](const std::string& key) -> const EllipticSolution& {
      auto it = solutions.find(key);
      if (it == solutions.end()) it = solutions.emplace(key, load_solution(out / "elliptic", key, bg.grid)).first;
      return it->second;
    };
    std::optional<Background> rho_bg;
    std::map<std::string, Trajectory> trajectories;
    auto trajectory = [&](const std::string& name) -> const Trajectory& {
      auto it = trajectories.find(name);
      if (it != trajectories.end()) return it->second;
      const Background* base = &bg;
      if (uses_rho_background(name)) {
        if (!rho_bg) rho_bg = conformal_change(bg, solution("prescribe_rho").values);
        base = &*rho_bg;
      }
      return trajectories.emplace(name, load_trajectory(flow_dir(out, name), *base)).first->second;
    };
    auto scale_of = [&](const std::string& name) {
      return load_json(flow_dir(out, name) / "meta.json").at("scale").get<double>();
    };

    std::vector<Verdict> verdicts;
    for (const CheckSpec& c : config.checks) {
      const std::string& n = c.name;
      try {
        if (n == "stationarity") {
          verdicts.push_back(check_stationarity(trajectory("base"), dparam(c, "tol")));
        } else if (n == "curvature_lower") {
          verdicts.push_back(check_curvature_lower(trajectory("base"), dparam(c, "tol")));
        } else if (n == "rescaled_monotone") {
          verdicts.push_back(check_rescaled_monotone(trajectory("base"), dparam(c, "tol")));
        } else if (n == "comparison") {
          verdicts.push_back(check_comparison(trajectory("base"), trajectory("comparison_upper"), dparam(c, "tol")));
        } else if (n == "lower_envelope") {
          verdicts.push_back(check_lower_envelope(trajectory("base"), solution("steady_neg"), load_sign(out),
                                                  dparam(c, "tol"), dparam(c, "compare_radius")));
        } else if (n == "theoremA") {
          TheoremAOptions o;
          o.tol = dparam(c, "tol");
          o.rate_tolerance = dparam(c, "rate_tolerance");
          o.decay_tolerance = dparam(c, "decay_tolerance");
          o.rate_window = dparam(c, "rate_window");
          verdicts.push_back(check_theoremA(trajectory("base"), solution("steady_neg"), config.K_radius, o));
        } else if (n == "theoremB") {
          verdicts.push_back(check_theoremB(trajectory(param(c, "flow").get<std::string>()), dparam(c, "tol"),
                                            dparam(c, "min_max_u")));
        } else if (n == "theoremC") {
          verdicts.push_back(
              check_theoremC(trajectory("base"), solution("harmonic_decay"), config.K_radius, dparam(c, "tol")));
        } else if (n == "harmonic_uniqueness") {
          verdicts.push_back(check_harmonic_uniqueness(solution("harmonic_decay"),
                                                       solution("harmonic_decay_far_field"), dparam(c, "tol")));
        } else if (n == "harnack") {
          HarnackOptions o;
          o.r_lo = dparam(c, "r_lo");
          o.r_hi = dparam(c, "r_hi");
          o.C_cap = dparam(c, "C_cap");
          o.t_min = dparam(c, "t_min");
          o.slope_tol = dparam(c, "slope_tol");
          verdicts.push_back(check_harnack(trajectory(param(c, "flow").get<std::string>()), o));
        } else if (n == "curvature_sandwich") {
          verdicts.push_back(check_curvature_sandwich(trajectory("v"), dparam(c, "tol")));
        } else if (n == "sandwich") {
          const Trajectory& low = trajectory("v_low");
          const Trajectory& high = trajectory("v_high");
          verdicts.push_back(check_sandwich(trajectory("rho"), scale_solution(low, scale_of("v_low")),
                                            scale_solution(high, scale_of("v_high")), dparam(c, "tol")));
        } else if (n == "max_on_compact") {
          verdicts.push_back(check_max_on_compact(trajectory("v"), config.K_radius, dparam(c, "tol")));
        } else if (n == "rho_relation") {
          verdicts.push_back(check_rho_relation(trajectory("base"), trajectory("rho"),
                                                solution("prescribe_rho").values, dparam(c, "tol")));
        } else if (n == "scalar_evolution") {
          EvolutionOptions o;
          o.probe_time = dparam(c, "probe_time");
          o.min_order = dparam(c, "min_order");
          verdicts.push_back(check_scalar_evolution(trajectory("base"), o));
        } else if (n == "scalar_evolution_control") {
          EvolutionOptions o;
          o.probe_time = dparam(c, "probe_time");
          verdicts.push_back(check_scalar_evolution_control(trajectory("base"), o, dparam(c, "max_order")));
        }
      } catch (const std::exception& e) {
        throw std::runtime_error("check " + n + ": " + e.what());
      }
    }
    save_verdicts(out, verdicts, config.seed);
    return verdicts;
  });
}

json run_report_stage(const fs::path& out) {
  return in_stage("report", [&] {
    const json run_meta = load_json(out / "run.json");
    const std::vector<Verdict> verdicts = load_verdicts(out);

    json verdict_list = json::array();
    bool all_passed = true;
    for (const Verdict& v : verdicts) {
      all_passed = all_passed && v.passed;
      verdict_list.push_back(json{{"name", v.name}, {"passed", v.passed}, {"margin", num(v.margin)}});
    }

    json curves = json::object();
    auto add_curve = [&](const std::string& name, const std::string& xname, std::vector<double> x,
                         const std::string& yname, std::vector<double> y, const std::string& source) {
      write_csv(out / "curves" / (name + ".csv"), {xname, yname}, {x, y});
      json ys = json::array();
      for (double v : y) ys.push_back(num(v));
      curves[name] = json{{"file", "curves/" + name + ".csv"},
                          {"source", source},
                          {"columns", {xname, yname}},
                          {xname, x},
                          {yname, ys}};
    };

    const fs::path base = flow_dir(out, "base");
    const CsvTable summary = read_csv(base / "summary.csv");
    add_curve("max_u_tilde", "t", summary.column("t"), "max_u_tilde", summary.column("max_u_tilde"),
              "flows/base/summary.csv");

    const json meta = load_json(base / "meta.json");
    const std::string final_file = meta.at("checkpoints").back().at("file").get<std::string>();
    const CsvTable final_state = read_csv(base / final_file);
    add_curve("u_tilde_final", "r", final_state.column("r"), "u_tilde", final_state.column("u_tilde"),
              "flows/base/" + final_file);

    for (const auto& [key, name] : {std::pair<std::string, std::string>{"harmonic_decay", "w"},
                                    std::pair<std::string, std::string>{"steady_neg", "steady"}}) {
      const fs::path file = out / "elliptic" / (key + ".csv");
      if (!fs::exists(file)) continue;
      const CsvTable t = read_csv(file);
      add_curve(name, "r", t.column("r"), name, t.column("value"), "elliptic/" + key + ".csv");
    }

    const json report{{"scenario", run_meta.at("scenario").at("name")},
                      {"seed", run_meta.at("seed")},
                      {"all_passed", all_passed},
                      {"verdicts", verdict_list},
                      {"curves", curves}};
    write_json(out / "report.json", report);
    return report;
  });
}

bool run_scenario(const ScenarioConfig& config, const fs::path& out) {
  run_yamabe_stage(config, out);
  run_elliptic_stage(config, out);
  run_simulate_stage(config, out);
  const std::vector<Verdict> verdicts = run_verify_stage(config, out);
  run_report_stage(out);
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

}  // namespace yflow
