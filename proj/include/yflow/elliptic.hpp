#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "yflow/background.hpp"
#include "yflow/yamabe.hpp"

namespace yflow {

enum class EllipticEquation { steady_neg, harmonic_decay, compactified_u0, prescribe_rho };

std::string_view to_string(EllipticEquation eq);
std::optional<EllipticEquation> parse_equation(std::string_view name);

struct EllipticSolution {
  std::vector<double> values;
  // Largest componentwise residual |F_i| / (sum_j |L_ij v_j| + |nonlinear_i|).
  double residual_sup = 0.0;
  // p in values ~ C r^{-p} fitted over [R_max/10, R_max]; for prescribe_rho
  // the fit is of |rho - 1|.
  double decay_exponent = 0.0;
  int newton_iters = 0;
  EllipticEquation equation = EllipticEquation::steady_neg;
};

struct NewtonControls {
  double tolerance = 1e-10;
  int max_iterations = 200;
  int max_halvings = 50;
};

// -a_n Lap u + R0 u = -u^N with the decaying-mode Robin closure.
// Throws SolverFailure when damping is exhausted or the iteration collapses
// onto u = 0.
EllipticSolution solve_steady_negative(const Background& bg, const NewtonControls& controls = {});

// How the homogeneous system is normalized. axis shoots outward from
// w_0 = 1; far_field fixes w_M = 1 and solves the remaining rows. In both
// cases the Robin row at r_max is checked afterwards.
enum class HarmonicAnchor { axis, far_field };

// Positive decaying solution of L w = 0 normalized to max_{r <= K} w = 1.
EllipticSolution solve_harmonic_decay(const Background& bg,
                                      HarmonicAnchor anchor = HarmonicAnchor::axis,
                                      double tolerance = 1e-8);

// Negative sign: the constant -1 curvature solution, rescaled to curvature Y
// when yamabe_value is supplied. Zero band: the harmonic solution.
EllipticSolution solve_compactified_u0(const Background& bg, YamabeSign sign,
                                       std::optional<double> yamabe_value = std::nullopt,
                                       const NewtonControls& controls = {});

// rho with R(rho^{4/(n-2)} g0) = R_target, rho - 1 decaying. R_target must be
// non-positive and vanish beyond K_radius.
EllipticSolution prescribe_scalar_curvature(const Background& bg,
                                            std::span<const double> R_target,
                                            const NewtonControls& controls = {});

// min(R0, 0) times a smooth cutoff equal to 1 on r <= K/2 and 0 for r >= K.
std::vector<double> compactly_supported_target(const Background& bg);

// Negated least-squares slope of log f against log r over nodes in [lo, hi].
double fit_decay_exponent(const RadialGrid& grid, std::span<const double> f, double lo, double hi);

// Residual evaluators independent of the solvers. They use the Robin closure
// and return componentwise-relative residuals.
std::vector<double> steady_residual(const Background& bg, std::span<const double> u,
                                    double curvature = -1.0);
std::vector<double> harmonic_residual(const Background& bg, std::span<const double> w);

}  // namespace yflow
