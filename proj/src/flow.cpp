#include "yflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {
namespace {

constexpr double kTimeMatch = 1e-12;

bool same_time(double a, double b) {
  return std::fabs(a - b) <= kTimeMatch * std::max(std::fabs(a), std::fabs(b));
}

// Scaled componentwise residual of one backward-Euler system.
struct StepSystem {
  const Tridiagonal& op;
  std::span<const double> u_pow;  // u^N at the old time
  double N;
  double rate;  // dt (n+2)/4
  double boundary;

  double residual(std::span<const double> w, std::vector<double>& f) const {
    const std::size_t m = w.size() - 1;
    op.apply(w, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double wn = std::pow(w[i], N);
      double size = std::fabs(op.diag[i] * w[i]) + std::fabs(op.upper[i] * w[i + 1]);
      if (i > 0) size += std::fabs(op.lower[i] * w[i - 1]);
      size = rate * size + wn + u_pow[i];
      f[i] = wn - u_pow[i] + rate * f[i];
      worst = std::max(worst, std::fabs(f[i]) / size);
    }
    f[m] = w[m] - boundary;
    worst = std::max(worst, std::fabs(f[m]) / std::max(1.0, std::fabs(boundary)));
    return worst;
  }
};

FlowState step_with(const Tridiagonal& op, const Background& bg, const FlowState& state, double dt,
                    const FlowControls& controls, long* newton_count) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  const std::size_t size = state.u.size();
  const std::size_t m = size - 1;
  const double N = bg.N;
  const double rate = dt * (bg.dimension() + 2) / 4.0;
  std::vector<double> u_pow(size);
  kernels::power(state.u, N, u_pow);
  StepSystem sys{op, u_pow, N, rate, controls.boundary_value};

  std::vector<double> w = state.u;
  w[m] = controls.boundary_value;
  std::vector<double> f(size), trial(size), ft(size);
  double res = sys.residual(w, f);
  int it = 0;
  while (res > controls.newton_tol) {
    if (it >= controls.max_newton) throw StepRejected("step: Newton iteration limit reached");
    ++it;
    Tridiagonal jac(size);
    for (std::size_t i = 0; i < m; ++i) {
      jac.lower[i] = rate * op.lower[i];
      jac.upper[i] = rate * op.upper[i];
      jac.diag[i] = N * std::pow(w[i], N - 1.0) + rate * op.diag[i];
    }
    jac.diag[m] = 1.0;
    for (double& x : f) x = -x;
    const std::vector<double> dw = solve(jac, f);
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k <= controls.max_halvings; ++k) {
      kernels::add_scaled(w, lambda, dw, trial);
      if (kernels::min_value(trial) > 0.0) {
        const double rt = sys.residual(trial, ft);
        if (rt < res) {
          w.swap(trial);
          f.swap(ft);
          res = rt;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      throw StepRejected("step: damping exhausted at residual " + std::to_string(res));
    }
  }
  if (newton_count) *newton_count += it;
  if (!(kernels::min_value(w) > 0.0)) throw StepRejected("step: non-positive conformal factor");
  return FlowState{state.t + dt, std::move(w), state.step_index + 1};
}

std::vector<double> checkpoint_times(double t_end, const FlowControls& c) {
  std::vector<double> times;
  for (double t = c.time_scale; t < t_end && !same_time(t, t_end); t *= 2.0) times.push_back(t);
  for (double e : c.extra_checkpoints) {
    const double t = e * c.time_scale;
    if (t > 0.0 && t < t_end && !same_time(t, t_end)) times.push_back(t);
  }
  times.push_back(t_end);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(), same_time), times.end());
  return times;
}

}  // namespace

const FlowState* Trajectory::checkpoint_at(double t) const {
  for (const FlowState& s : checkpoints) {
    if (s.t == t || same_time(s.t, t)) return &s;
  }
  return nullptr;
}

FlowState step(const Background& bg, const FlowState& state, double dt,
               const FlowControls& controls) {
  const Tridiagonal op = assemble_conformal_laplacian(bg, Closure::zero_flux);
  return step_with(op, bg, state, dt, controls, nullptr);
}

std::vector<double> rescaled(const FlowState& state, int n) {
  if (!(state.t > 0.0)) throw std::invalid_argument("rescaling needs t > 0");
  const double f = std::pow(state.t, -(n - 2) / 4.0);
  std::vector<double> out(state.u.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f * state.u[i];
  return out;
}

SummaryRow summarize(const Background& bg, const FlowState& state) {
  const std::vector<double> R = conformal_scalar_curvature(bg, state.u);
  const auto& u = state.u;
  SummaryRow row{};
  row.t = state.t;
  const auto max_it = std::max_element(u.begin(), u.end());
  row.max_u = *max_it;
  row.argmax_r = bg.grid.r(static_cast<std::size_t>(max_it - u.begin()));
  row.min_u = kernels::min_value(u);
  row.max_u_tilde = std::pow(state.t, -(bg.dimension() - 2) / 4.0) * row.max_u;
  row.min_Rt = kernels::min_value(R) * state.t;
  row.max_R = kernels::max_value(R);
  const std::size_t k = bg.grid.last_index_within(bg.K_radius);
  const std::span<const double> core(u.data(), k + 1);
  row.max_u_K = kernels::max_value(core);
  row.harnack_K = row.max_u_K / kernels::min_value(core);
  return row;
}

Trajectory run(const Background& bg, double t_end, const FlowControls& controls,
               std::span<const double> initial) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be positive");
  if (!(controls.time_scale > 0.0) || !(controls.eta > 0.0) || !(controls.dt_warmup > 0.0)) {
    throw std::invalid_argument("flow schedule parameters must be positive");
  }
  if (!(controls.boundary_value > 0.0)) throw std::invalid_argument("boundary value must be positive");
  const std::size_t size = bg.grid.size();
  Trajectory traj{bg, controls, t_end, {}, {}, 0, 0, 0, false, {}};

  FlowState state;
  state.u = initial.empty() ? std::vector<double>(size, 1.0)
                            : std::vector<double>(initial.begin(), initial.end());
  if (state.u.size() != size) throw std::invalid_argument("initial data does not match grid");
  if (!(kernels::min_value(state.u) > 0.0)) {
    throw std::invalid_argument("initial data must be positive");
  }
  traj.checkpoints.push_back(state);

  const Tridiagonal op = assemble_conformal_laplacian(bg, Closure::zero_flux);
  const double s = controls.time_scale;
  const double warm_end = s * controls.t_warmup;
  const std::vector<double> targets = checkpoint_times(t_end, controls);
  std::size_t next = 0;
  double retry_dt = 0.0;

  while (next < targets.size()) {
    const double target = targets[next];
    double dt = retry_dt > 0.0 ? retry_dt
                : state.t < warm_end && !same_time(state.t, warm_end) ? s * controls.dt_warmup
                                                                      : controls.eta * state.t;
    bool lands = false;
    if (state.t + dt >= target - 0.5 * dt) {
      dt = target - state.t;
      lands = true;
    }
    try {
      FlowState nextstate = step_with(op, bg, state, dt, controls, &traj.newton_iterations);
      if (lands) nextstate.t = target;
      state = std::move(nextstate);
      retry_dt = 0.0;
    } catch (const StepRejected& e) {
      ++traj.rejected_steps;
      retry_dt = 0.5 * dt;
      if (retry_dt < controls.dt_min * s) {
        traj.aborted = true;
        traj.abort_reason = std::string(e.what()) + " at t = " + std::to_string(state.t);
        break;
      }
      continue;
    }
    ++traj.steps;
    traj.summary.push_back(summarize(bg, state));
    if (lands) {
      traj.checkpoints.push_back(state);
      ++next;
    }
  }
  return traj;
}

RhoFlow run_rho(const Background& bg, const EllipticSolution& rho, double t_end,
                const FlowControls& controls) {
  if (rho.values.size() != bg.grid.size()) {
    throw std::invalid_argument("rho does not match the background grid");
  }
  Background changed = conformal_change(bg, rho.values);
  std::vector<double> inv(rho.values.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / rho.values[i];

  FlowControls uc = controls;
  uc.boundary_value = controls.boundary_value * inv.back();
  Trajectory u_rho = run(changed, t_end, uc, inv);

  FlowControls vc = controls;
  vc.boundary_value = 1.0;
  Trajectory v = run(changed, t_end, vc);
  return RhoFlow{std::move(changed), std::move(u_rho), std::move(v)};
}

Trajectory run_for_scaling(const Background& bg, double c, double t_end,
                           const FlowControls& controls) {
  if (!(c > 0.0)) throw std::invalid_argument("scaling factor must be positive");
  const double s = std::pow(c, -4.0 / (bg.dimension() - 2));
  FlowControls vc = controls;
  vc.time_scale = controls.time_scale * s;
  vc.boundary_value = 1.0;
  return run(bg, s * t_end, vc);
}

ScaledTrajectory::ScaledTrajectory(const Trajectory& traj, double c)
    : traj_(&traj), c_(c), time_factor_(0.0) {
  if (!(c > 0.0)) throw std::invalid_argument("scaling factor must be positive");
  if (traj.checkpoints.empty()) throw std::invalid_argument("trajectory has no checkpoints");
  time_factor_ = std::pow(c, -4.0 / (traj.background.dimension() - 2));
}

double ScaledTrajectory::horizon() const { return traj_->checkpoints.back().t / time_factor_; }

std::vector<double> ScaledTrajectory::at(double t) const {
  const double tau = time_factor_ * t;
  const auto& cps = traj_->checkpoints;
  std::vector<double> out;
  if (const FlowState* exact = traj_->checkpoint_at(tau)) {
    out = exact->u;
  } else {
    if (tau < 0.0 || tau > cps.back().t) {
      throw std::out_of_range("scaled trajectory queried beyond its horizon");
    }
    std::size_t b = 1;
    while (cps[b].t < tau) ++b;
    const FlowState& lo = cps[b - 1];
    const FlowState& hi = cps[b];
    const double theta = lo.t > 0.0 ? std::log(tau / lo.t) / std::log(hi.t / lo.t)
                                    : tau / hi.t;
    out.resize(lo.u.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (1.0 - theta) * lo.u[i] + theta * hi.u[i];
    }
  }
  for (double& x : out) x *= c_;
  return out;
}

ScaledTrajectory scale_solution(const Trajectory& traj, double c) {
  return ScaledTrajectory(traj, c);
}

}  // namespace yflow
