#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "yflow/background.hpp"

namespace yflow {

enum class YamabeSign { negative, zero_band, positive };

std::string_view to_string(YamabeSign sign);
std::optional<YamabeSign> parse_sign(std::string_view name);

struct YamabeEstimate {
  YamabeSign sign = YamabeSign::zero_band;
  double lower = 0.0;
  double upper = 0.0;
  // Minimizing radial test function on the largest ball, zero outside it,
  // scaled to unit maximum.
  std::vector<double> witness;
  std::vector<double> ball_radii;
  std::vector<double> ball_upper;
  // Smallest Dirichlet eigenvalue of L on the largest ball.
  double smallest_eigenvalue = 0.0;
  int iterations = 0;
};

struct YamabeControls {
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int max_iterations = 20000;
  // Relative change of the quotient below which descent stops.
  double convergence = 1e-12;
  // Empty: 5, 10, 20, ... up to 0.9 R_max.
  std::vector<double> ball_radii;
};

// Discrete Yamabe quotient
//   (sum w v L v) / (sum w |v|^{2n/(n-2)})^{(n-2)/n} * |S^{n-1}|^{2/n},
// w the g0 volume of each control volume per unit solid angle.
// Throws std::invalid_argument for v == 0.
double yamabe_quotient(const Background& bg, std::span<const double> v);

// Upper bound from multi-start preconditioned gradient descent on nested
// balls, lower bound certified from the smallest Dirichlet eigenvalue and a
// discrete Sobolev constant. Throws SolverFailure when descent does not
// settle within max_iterations.
YamabeEstimate estimate_yamabe(const Background& bg, const YamabeControls& controls = {});

// Smallest eigenvalue of L restricted to the first m nodes (zero Dirichlet
// data at node m).
double smallest_dirichlet_eigenvalue(const Background& bg, std::size_t m);

}  // namespace yflow
