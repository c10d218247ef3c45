#pragma once

#include <span>
#include <string>
#include <vector>

#include "yflow/background.hpp"
#include "yflow/elliptic.hpp"

namespace yflow {

struct FlowState {
  double t = 0.0;
  std::vector<double> u;
  long step_index = 0;
};

struct FlowControls {
  double dt_warmup = 1e-3;
  double t_warmup = 1.0;
  double eta = 0.05;
  // Newton stops when |F|_inf <= newton_tol * max(1, max u^N).
  double newton_tol = 1e-12;
  int max_newton = 200;
  int max_halvings = 50;
  double dt_min = 1e-10;
  // Multiplies every time in the schedule (warmup, dyadic checkpoints).
  double time_scale = 1.0;
  double boundary_value = 1.0;
  // Additional checkpoint times (unscaled).
  std::vector<double> extra_checkpoints;
};

struct SummaryRow {
  double t;
  double max_u;
  double max_u_tilde;
  double min_Rt;
  double harnack_K;  // max / min of u on r <= K_radius
  double max_R;
  double min_u;
  double argmax_r;
  double max_u_K;
};

struct Trajectory {
  Background background;
  FlowControls controls;
  double t_end = 0.0;
  // t = 0, then scaled dyadic times, extra times and t_end in increasing order.
  std::vector<FlowState> checkpoints;
  // One row per accepted step.
  std::vector<SummaryRow> summary;
  long steps = 0;
  long newton_iterations = 0;
  long rejected_steps = 0;
  bool aborted = false;
  std::string abort_reason;

  const FlowState& final_state() const { return checkpoints.back(); }
  // Checkpoint whose time matches t to relative 1e-12, or nullptr.
  const FlowState* checkpoint_at(double t) const;
};

// One backward-Euler step of
//   d/dt u^N = (n+2)/4 (a_n Lap_{g0} u - R0 u),  u(R_max) = boundary.
// Throws StepRejected when Newton fails or u+ loses positivity.
FlowState step(const Background& bg, const FlowState& state, double dt,
               const FlowControls& controls = {});

// Integrates from u = initial (default: 1) over [0, t_end]. A step that is
// rejected is retried with half the step; below dt_min the run stops and the
// partial trajectory is returned with aborted = true.
Trajectory run(const Background& bg, double t_end, const FlowControls& controls = {},
               std::span<const double> initial = {});

// t^{-(n-2)/4} u
std::vector<double> rescaled(const FlowState& state, int n);

// Summary row of a state (t > 0).
SummaryRow summarize(const Background& bg, const FlowState& state);

struct RhoFlow {
  Background background;  // rho^{4/(n-2)} g0
  Trajectory u_rho;       // initial value 1/rho
  Trajectory v;           // initial value 1
};

// Flow in the conformally changed background.
RhoFlow run_rho(const Background& bg, const EllipticSolution& rho, double t_end,
                const FlowControls& controls = {});

// Runs the v-flow with its schedule stretched by c^{-4/(n-2)} so that
// scale_solution(result, c) reads checkpoints directly.
Trajectory run_for_scaling(const Background& bg, double c, double t_end,
                           const FlowControls& controls = {});

// View of v_c(x, t) = c v(x, c^{-4/(n-2)} t).
class ScaledTrajectory {
 public:
  ScaledTrajectory(const Trajectory& traj, double c);
  double factor() const { return c_; }
  double horizon() const;
  // Exact at checkpoint times; otherwise linear in log t between the
  // bracketing checkpoints. Throws std::out_of_range beyond the horizon.
  std::vector<double> at(double t) const;

 private:
  const Trajectory* traj_;
  double c_;
  double time_factor_;
};

ScaledTrajectory scale_solution(const Trajectory& traj, double c);

}  // namespace yflow
