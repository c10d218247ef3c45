#include "yflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {
namespace {

using nlohmann::json;

double rescale_factor(double t, int n) { return std::pow(t, -(n - 2) / 4.0); }

double max_on_radius(const RadialGrid& grid, std::span<const double> f, double radius) {
  const std::size_t k = grid.last_index_within(radius);
  return kernels::max_value(f.first(k + 1));
}

// JSON cannot carry inf/nan; store them as strings.
json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

Verdict make_verdict(std::string name, double margin, json details) {
  Verdict v;
  v.name = std::move(name);
  v.margin = margin;
  v.passed = margin >= 0.0;
  v.details = std::move(details);
  v.details["margin"] = number(margin);
  return v;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs >= 2 points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Verdict check_stationarity(const Trajectory& traj, double tol) {
  double dev = 0.0;
  for (const SummaryRow& row : traj.summary) {
    dev = std::max({dev, row.max_u - 1.0, 1.0 - row.min_u});
  }
  for (const FlowState& s : traj.checkpoints) {
    for (double x : s.u) dev = std::max(dev, std::fabs(x - 1.0));
  }
  return make_verdict("stationarity", (tol - dev) / tol, {{"max_deviation", dev}, {"tol", tol}});
}

Verdict check_curvature_lower(const Trajectory& traj, double tol) {
  double worst = std::numeric_limits<double>::infinity();
  double at = 0.0;
  for (const SummaryRow& row : traj.summary) {
    if (row.t < 1.0) continue;
    if (row.min_Rt < worst) {
      worst = row.min_Rt;
      at = row.t;
    }
  }
  if (!std::isfinite(worst)) throw PreconditionViolation("curvature_lower: no logged times t >= 1");
  return make_verdict("curvature_lower", (worst + 1.0 + tol) / (1.0 + tol),
                      {{"min_Rt", worst}, {"at_t", at}, {"tol", tol}});
}

Verdict check_rescaled_monotone(const Trajectory& traj, double tol) {
  const int n = traj.background.dimension();
  std::vector<const FlowState*> states;
  for (const FlowState& s : traj.checkpoints) {
    if (s.t >= 1.0) states.push_back(&s);
  }
  if (states.size() < 2) throw PreconditionViolation("rescaled_monotone: fewer than 2 checkpoints");
  double worst = -std::numeric_limits<double>::infinity();
  double at = 0.0;
  double r_at = 0.0;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    const double fa = rescale_factor(states[k]->t, n);
    const double fb = rescale_factor(states[k + 1]->t, n);
    for (std::size_t i = 0; i < states[k]->u.size(); ++i) {
      const double inc = fb * states[k + 1]->u[i] - fa * states[k]->u[i];
      if (inc > worst) {
        worst = inc;
        at = states[k + 1]->t;
        r_at = traj.background.grid.r(i);
      }
    }
  }
  return make_verdict("rescaled_monotone", (tol - worst) / tol,
                      {{"worst_increase", worst}, {"at_t", at}, {"at_r", r_at}, {"tol", tol}});
}

Verdict check_comparison(const Trajectory& lower, const Trajectory& upper, double tol) {
  if (lower.background.grid.size() != upper.background.grid.size()) {
    throw PreconditionViolation("comparison: trajectories live on different grids");
  }
  double worst = std::numeric_limits<double>::infinity();
  double at = 0.0;
  int matched = 0;
  for (const FlowState& a : lower.checkpoints) {
    const FlowState* b = upper.checkpoint_at(a.t);
    if (!b) continue;
    ++matched;
    for (std::size_t i = 0; i < a.u.size(); ++i) {
      const double gap = b->u[i] - a.u[i];
      if (gap < worst) {
        worst = gap;
        at = a.t;
      }
    }
  }
  if (matched == 0) throw PreconditionViolation("comparison: no matched checkpoint times");
  const double b1 = lower.controls.boundary_value;
  const double b2 = upper.controls.boundary_value;
  const double ordering = (worst + tol) / tol;
  const double boundary = (b2 - b1) / std::max(std::fabs(b1), std::fabs(b2));
  return make_verdict("comparison", std::min(ordering, boundary),
                      {{"min_gap", worst},
                       {"at_t", at},
                       {"matched_times", matched},
                       {"boundary_lower", b1},
                       {"boundary_upper", b2},
                       {"tol", tol}});
}

Verdict check_lower_envelope(const Trajectory& traj, const EllipticSolution& steady,
                             YamabeSign sign, double tol, double compare_radius) {
  if (sign != YamabeSign::negative) {
    throw PreconditionViolation("lower_envelope: requires a negative Yamabe sign");
  }
  const int n = traj.background.dimension();
  const RadialGrid& grid = traj.background.grid;
  double worst = std::numeric_limits<double>::infinity();
  double at = 0.0;
  for (const FlowState& s : traj.checkpoints) {
    if (s.t < 1.0) continue;
    const double f = rescale_factor(s.t, n);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double gap = f * s.u[i] - steady.values[i];
      if (gap < worst) {
        worst = gap;
        at = s.t;
      }
    }
  }
  if (!std::isfinite(worst)) throw PreconditionViolation("lower_envelope: no checkpoints with t >= 1");
  const FlowState& last = traj.final_state();
  const double f = rescale_factor(last.t, n);
  double final_gap = 0.0;
  for (std::size_t i = 0; i <= grid.last_index_within(compare_radius); ++i) {
    final_gap = std::max(final_gap, std::fabs(f * last.u[i] - steady.values[i]));
  }
  return make_verdict("lower_envelope", (worst + tol) / tol,
                      {{"min_gap", worst},
                       {"at_t", at},
                       {"final_sup_gap", final_gap},
                       {"compare_radius", compare_radius},
                       {"tol", tol}});
}

Verdict check_theoremA(const Trajectory& traj, const EllipticSolution& steady, double K_radius,
                       const TheoremAOptions& o) {
  const int n = traj.background.dimension();
  const RadialGrid& grid = traj.background.grid;
  const FlowState& last = traj.final_state();
  if (!(last.t > 0.0) || traj.summary.empty()) {
    throw PreconditionViolation("theoremA: trajectory has no time steps");
  }

  std::vector<double> ts, ms;
  const double start = last.t / o.rate_window;
  for (const SummaryRow& row : traj.summary) {
    if (row.t >= start * (1.0 - 1e-12)) {
      ts.push_back(row.t);
      ms.push_back(row.max_u_K);
    }
  }
  if (ts.size() < 2 || !(ms.back() > ms.front() * (1.0 + 1e-12))) {
    throw PreconditionViolation("theoremA: max_K u does not grow; no blow-up rate to fit");
  }
  const double rate = log_log_slope(ts, ms);
  const double rate_target = (n - 2) / 4.0;

  const double f = rescale_factor(last.t, n);
  double err = 0.0;
  for (std::size_t i = 0; i <= grid.last_index_within(K_radius); ++i) {
    err = std::max(err, std::fabs(f * last.u[i] - steady.values[i]));
  }
  const double decay_target = n - 2.0;
  const std::size_t mid = grid.last_index_within(0.5 * grid.r_max());

  const double m_profile = (o.tol - err) / o.tol;
  const double m_rate = (o.rate_tolerance * rate_target - std::fabs(rate - rate_target)) /
                        (o.rate_tolerance * rate_target);
  const double m_decay =
      (o.decay_tolerance * decay_target - std::fabs(steady.decay_exponent - decay_target)) /
      (o.decay_tolerance * decay_target);
  return make_verdict("theoremA", std::min({m_profile, m_rate, m_decay}),
                      {{"sup_error", err},
                       {"K_radius", K_radius},
                       {"rate", rate},
                       {"rate_target", rate_target},
                       {"rate_window", {ts.front(), ts.back()}},
                       {"decay_exponent", number(steady.decay_exponent)},
                       {"decay_target", decay_target},
                       {"u_tilde_at_half_rmax", f * last.u[mid]},
                       {"tol", o.tol}});
}

Verdict check_theoremB(const Trajectory& traj, double tol, double min_max_u) {
  const int n = traj.background.dimension();
  const FlowState& last = traj.final_state();
  if (!(last.t > 0.0)) throw PreconditionViolation("theoremB: trajectory has no time steps");
  const double max_u = kernels::max_value(last.u);
  const double final_tilde = rescale_factor(last.t, n) * max_u;
  double earlier = std::numeric_limits<double>::quiet_NaN();
  double earlier_t = 0.0;
  for (const SummaryRow& row : traj.summary) {
    if (row.t <= last.t / 10.0 * (1.0 + 1e-12)) {
      earlier = row.max_u_tilde;
      earlier_t = row.t;
    }
  }
  if (std::isnan(earlier)) throw PreconditionViolation("theoremB: no summary row a decade before t_end");
  double margin = std::min((tol - final_tilde) / tol, (0.5 * earlier - final_tilde) / (0.5 * earlier));
  json details = {{"max_u_tilde", final_tilde},
                  {"max_u_tilde_decade_earlier", earlier},
                  {"decade_earlier_t", earlier_t},
                  {"max_u", max_u},
                  {"tol", tol}};
  if (min_max_u > 0.0) {
    margin = std::min(margin, (max_u - min_max_u) / min_max_u);
    details["min_max_u"] = min_max_u;
  }
  return make_verdict("theoremB", margin, std::move(details));
}

Verdict check_theoremC(const Trajectory& traj, const EllipticSolution& w, double K_radius,
                       double tol) {
  const RadialGrid& grid = traj.background.grid;
  const FlowState& last = traj.final_state();
  const double scale = max_on_radius(grid, last.u, K_radius);
  std::vector<double> profile(last.u.size());
  for (std::size_t i = 0; i < profile.size(); ++i) profile[i] = last.u[i] / scale;
  double err = 0.0;
  double r_at = 0.0;
  for (std::size_t i = 0; i <= grid.last_index_within(2.0 * K_radius); ++i) {
    const double e = std::fabs(profile[i] - w.values[i]);
    if (e > err) {
      err = e;
      r_at = grid.r(i);
    }
  }
  return make_verdict("theoremC", (tol - err) / tol,
                      {{"sup_error", err},
                       {"at_r", r_at},
                       {"normalized_max_on_K", max_on_radius(grid, profile, K_radius)},
                       {"t", last.t},
                       {"tol", tol}});
}

Verdict check_harmonic_uniqueness(const EllipticSolution& a, const EllipticSolution& b,
                                  double tol) {
  if (a.values.size() != b.values.size()) {
    throw PreconditionViolation("harmonic_uniqueness: solutions on different grids");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double q = a.values[i] / b.values[i];
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  const double spread = (hi - lo) / lo;
  return make_verdict("harmonic_uniqueness", (tol - spread) / tol,
                      {{"ratio_min", lo}, {"ratio_max", hi}, {"spread", spread}, {"tol", tol}});
}

Verdict check_harnack(const Trajectory& traj, const HarnackOptions& o) {
  const RadialGrid& grid = traj.background.grid;
  std::vector<double> ts, ratios;
  double worst = 0.0;
  double at = 0.0;
  for (const FlowState& s : traj.checkpoints) {
    if (s.t < o.t_min) continue;
    double hi = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double r = grid.r(i);
      if (r < o.r_lo || r > o.r_hi) continue;
      hi = std::max(hi, s.u[i]);
      lo = std::min(lo, s.u[i]);
    }
    const double ratio = hi / lo;
    ts.push_back(s.t);
    ratios.push_back(ratio);
    if (ratio > worst) {
      worst = ratio;
      at = s.t;
    }
  }
  if (ts.empty()) throw PreconditionViolation("harnack: no checkpoints after t_min");
  double margin = (o.C_cap - worst) / o.C_cap;
  json details = {{"worst_ratio", worst},
                  {"at_t", at},
                  {"C_cap", o.C_cap},
                  {"ball", {o.r_lo, o.r_hi}},
                  {"final_ratio", ratios.back()}};
  if (o.slope_tol > 0.0) {
    std::vector<double> tx, ry;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (ts[k] >= ts.back() / 10.0 * (1.0 - 1e-12)) {
        tx.push_back(ts[k]);
        ry.push_back(ratios[k]);
      }
    }
    if (tx.size() < 2) throw PreconditionViolation("harnack: last decade holds fewer than 2 checkpoints");
    const double slope = log_log_slope(tx, ry);
    margin = std::min(margin, (o.slope_tol - std::fabs(slope)) / o.slope_tol);
    details["last_decade_slope"] = slope;
    details["slope_tol"] = o.slope_tol;
  }
  return make_verdict("harnack", margin, std::move(details));
}

Verdict check_curvature_sandwich(const Trajectory& traj_v, double tol) {
  if (traj_v.summary.empty()) throw PreconditionViolation("curvature_sandwich: empty log");
  double min_rt = std::numeric_limits<double>::infinity();
  double max_r = -min_rt;
  for (const SummaryRow& row : traj_v.summary) {
    min_rt = std::min(min_rt, row.min_Rt);
    max_r = std::max(max_r, row.max_R);
  }
  const std::vector<double> r0 =
      conformal_scalar_curvature(traj_v.background, traj_v.checkpoints.front().u);
  const double initial_max = kernels::max_value(r0);
  const double m_lower = (min_rt + 1.0 + tol) / (1.0 + tol);
  const double m_upper = (tol - std::max(max_r, initial_max)) / tol;
  return make_verdict("curvature_sandwich", std::min(m_lower, m_upper),
                      {{"min_Rt", min_rt},
                       {"max_R", max_r},
                       {"initial_max_R", initial_max},
                       {"tol", tol}});
}

Verdict check_sandwich(const Trajectory& u, const ScaledTrajectory& v_low,
                       const ScaledTrajectory& v_high, double tol) {
  double worst = -std::numeric_limits<double>::infinity();
  double at = 0.0;
  int compared = 0;
  for (const FlowState& s : u.checkpoints) {
    if (s.t > v_low.horizon() * (1.0 + 1e-12) || s.t > v_high.horizon() * (1.0 + 1e-12)) continue;
    const std::vector<double> lo = v_low.at(s.t);
    const std::vector<double> hi = v_high.at(s.t);
    ++compared;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      const double violation = std::max(lo[i] - s.u[i], s.u[i] - hi[i]);
      if (violation > worst) {
        worst = violation;
        at = s.t;
      }
    }
  }
  if (compared == 0) throw PreconditionViolation("sandwich: no comparable checkpoints");
  return make_verdict("sandwich", (tol - worst) / tol,
                      {{"worst_violation", worst},
                       {"at_t", at},
                       {"b", v_low.factor()},
                       {"B", v_high.factor()},
                       {"checkpoints", compared},
                       {"tol", tol}});
}

Verdict check_max_on_compact(const Trajectory& v, double K_radius, double tol) {
  const RadialGrid& grid = v.background.grid;
  double worst = 0.0;
  double at = 0.0;
  double argmax_r = 0.0;
  for (const FlowState& s : v.checkpoints) {
    const auto it = std::max_element(s.u.begin(), s.u.end());
    const double gap = *it - max_on_radius(grid, s.u, K_radius);
    if (gap > worst) {
      worst = gap;
      at = s.t;
      argmax_r = grid.r(static_cast<std::size_t>(it - s.u.begin()));
    }
  }
  return make_verdict("max_on_compact", (tol - worst) / tol,
                      {{"worst_gap", worst}, {"at_t", at}, {"argmax_r", argmax_r},
                       {"K_radius", K_radius}, {"tol", tol}});
}

Verdict check_rho_relation(const Trajectory& u, const Trajectory& u_rho, std::span<const double> rho,
                           double tol) {
  double worst = 0.0;
  int matched = 0;
  for (const FlowState& s : u.checkpoints) {
    const FlowState* r = u_rho.checkpoint_at(s.t);
    if (!r) continue;
    ++matched;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
      worst = std::max(worst, std::fabs(r->u[i] * rho[i] - s.u[i]) / std::max(1.0, s.u[i]));
    }
  }
  if (matched == 0) throw PreconditionViolation("rho_relation: no matched checkpoint times");
  return make_verdict("rho_relation", (tol - worst) / tol,
                      {{"max_relative_error", worst}, {"matched_times", matched}, {"tol", tol}});
}

EvolutionStudy scalar_evolution_study(const Trajectory& traj, const EvolutionOptions& o) {
  const FlowState* state = traj.checkpoint_at(o.probe_time);
  if (!state) throw PreconditionViolation("scalar_evolution: no checkpoint at the probe time");
  const Background& bg = traj.background;
  const int n = bg.dimension();
  const std::size_t size = state->u.size();
  const std::vector<double> R = conformal_scalar_curvature(bg, state->u);
  std::vector<double> W(size);
  if (o.wrong_metric) {
    W = bg.U0;
  } else {
    kernels::multiply(bg.U0, state->u, W);
  }
  const std::vector<double> lap = laplace_beltrami(bg.grid, W, R);
  std::vector<double> rhs(size);
  for (std::size_t i = 0; i < size; ++i) rhs[i] = (n - 1) * lap[i] + R[i] * R[i];

  EvolutionStudy study;
  for (double dt : o.dt_probes) {
    const FlowState next = step(bg, *state, dt, traj.controls);
    const std::vector<double> R1 = conformal_scalar_curvature(bg, next.u);
    double err = 0.0;
    for (std::size_t i = 1; i + 3 < size; ++i) {
      err = std::max(err, std::fabs((R1[i] - R[i]) / dt - rhs[i]));
    }
    study.dt.push_back(dt);
    study.error.push_back(err);
  }
  const bool exact = kernels::max_value(study.error) == 0.0;
  study.order = exact ? std::numeric_limits<double>::infinity() : log_log_slope(study.dt, study.error);
  return study;
}

Verdict check_scalar_evolution(const Trajectory& traj, const EvolutionOptions& o) {
  const EvolutionStudy s = scalar_evolution_study(traj, o);
  const double margin = std::isinf(s.order) ? 1.0 : (s.order - o.min_order) / o.min_order;
  return make_verdict("scalar_evolution", margin,
                      {{"order", number(s.order)},
                       {"dt", s.dt},
                       {"error", s.error},
                       {"probe_time", o.probe_time},
                       {"min_order", o.min_order}});
}

Verdict check_scalar_evolution_control(const Trajectory& traj, EvolutionOptions o,
                                       double max_order) {
  o.wrong_metric = true;
  const EvolutionStudy s = scalar_evolution_study(traj, o);
  const double margin = std::isinf(s.order) ? -1.0 : (max_order - s.order) / max_order;
  return make_verdict("scalar_evolution_control", margin,
                      {{"order", number(s.order)},
                       {"dt", s.dt},
                       {"error", s.error},
                       {"probe_time", o.probe_time},
                       {"max_order", max_order}});
}

}  // namespace yflow
