#pragma once

#include <span>
#include <string>
#include <vector>

#include "yflow/elliptic.hpp"
#include "yflow/flow.hpp"
#include "yflow/yamabe.hpp"

#include <json.hpp>

namespace yflow {

// Outcome of one check. margin is the smallest normalized distance to a
// threshold over all parts of the check; passed == (margin >= 0).
struct Verdict {
  std::string name;
  bool passed = false;
  double margin = 0.0;
  nlohmann::json details = nlohmann::json::object();
};

Verdict make_verdict(std::string name, double margin, nlohmann::json details = nlohmann::json::object());

// max over all logged states of |u - 1| below tol.
Verdict check_stationarity(const Trajectory& traj, double tol);

// min over logged t >= 1 of t min_x R >= -(1 + tol).
Verdict check_curvature_lower(const Trajectory& traj, double tol);

// t^{-(n-2)/4} u is nodewise nonincreasing across checkpoints with t >= 1.
Verdict check_rescaled_monotone(const Trajectory& traj, double tol);

// lower <= upper nodewise at every matched checkpoint; boundary values must
// be ordered as well.
Verdict check_comparison(const Trajectory& lower, const Trajectory& upper, double tol);

// Steady solution <= t^{-(n-2)/4} u + tol at all checkpoints with t >= 1.
// Throws PreconditionViolation unless sign is negative.
Verdict check_lower_envelope(const Trajectory& traj, const EllipticSolution& steady,
                             YamabeSign sign, double tol, double compare_radius = 10.0);

struct TheoremAOptions {
  double tol = 1e-2;
  double rate_tolerance = 0.10;   // relative, around (n-2)/4
  double decay_tolerance = 0.15;  // relative, around n-2
  // Rate fit over [t_end / rate_window, t_end].
  double rate_window = 10.0;
};

// sup_{r <= K} |u~(t_end) - steady| <= tol, blow-up rate of max_K u and the
// decay exponent of the steady solution. Throws PreconditionViolation if
// max_K u does not grow over the rate window.
Verdict check_theoremA(const Trajectory& traj, const EllipticSolution& steady, double K_radius,
                       const TheoremAOptions& options = {});

// max u~(t_end) <= tol and max u~ at t_end is below half its value a decade
// earlier. min_max_u > 0 also requires max u(t_end) >= min_max_u.
Verdict check_theoremB(const Trajectory& traj, double tol, double min_max_u = 0.0);

// sup_{r <= 2K} |u(t_end) / max_K u(t_end) - w| <= tol.
Verdict check_theoremC(const Trajectory& traj, const EllipticSolution& w, double K_radius,
                       double tol);

// Two harmonic solutions are proportional: relative spread of their ratio.
Verdict check_harmonic_uniqueness(const EllipticSolution& a, const EllipticSolution& b,
                                  double tol);

struct HarnackOptions {
  double r_lo = 0.0;
  double r_hi = 5.0;
  double C_cap = 25.0;  // empirical, calibrated on the zero-Yamabe reference u_rho flow
  double t_min = 1.0;
  // |slope| of log ratio vs log t over the last decade; <= 0 disables.
  double slope_tol = 0.05;
};

Verdict check_harnack(const Trajectory& traj, const HarnackOptions& options = {});

// -1/t - tol <= R <= tol at every logged time and at t = 0 (upper bound).
Verdict check_curvature_sandwich(const Trajectory& traj_v, double tol);

// v_b <= u <= v_B at every checkpoint of u within tol.
Verdict check_sandwich(const Trajectory& u, const ScaledTrajectory& v_low,
                       const ScaledTrajectory& v_high, double tol);

// max over all nodes of v equals max over r <= K within tol at every checkpoint.
Verdict check_max_on_compact(const Trajectory& v, double K_radius, double tol);

// u_rho * rho == u at every matched checkpoint.
Verdict check_rho_relation(const Trajectory& u, const Trajectory& u_rho,
                           std::span<const double> rho, double tol);

struct EvolutionOptions {
  double probe_time = 1.0;
  std::vector<double> dt_probes = {0.04, 0.02, 0.01, 0.005, 0.0025};
  double min_order = 0.9;
  // Evaluate the Laplacian of the initial metric instead of the evolved one.
  bool wrong_metric = false;
};

struct EvolutionStudy {
  std::vector<double> dt;
  std::vector<double> error;
  double order;
};

// Finite-difference dR/dt against (n-1) Lap_{g(t)} R + R^2 at the probe time.
EvolutionStudy scalar_evolution_study(const Trajectory& traj, const EvolutionOptions& options);
Verdict check_scalar_evolution(const Trajectory& traj, const EvolutionOptions& options = {});
// Negative control: with the Laplacian of the initial metric the fitted order
// must stay below max_order.
Verdict check_scalar_evolution_control(const Trajectory& traj, EvolutionOptions options = {},
                                       double max_order = 0.5);

// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace yflow
