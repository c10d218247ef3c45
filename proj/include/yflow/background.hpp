#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "yflow/grid.hpp"
#include "yflow/tridiag.hpp"

namespace yflow {

double conformal_constant(int n);  // 4(n-1)/(n-2)
double critical_exponent(int n);   // (n+2)/(n-2)

// How the last row of a radial operator treats the flux through r = R_max.
enum class Closure {
  // No flux through R_max. Used where the last row is overwritten or discarded.
  zero_flux,
  // Flux of the decaying mode: (r^{n-1} W')(R_max) = -(n-2) R_max^{n-2} W(R_max).
  robin,
};

// Radial base metric g0 = U0^{4/(n-2)} (flat) plus an optional potential V.
//
// The operator the flow and the elliptic solvers see is
//   L f = U0^{-N} (-a_n D (U0 f)) + V f,
// D the finite-volume flat radial Laplacian. With V = 0 this is the conformal
// Laplacian of g0 and R0 = L 1 is its scalar curvature. A non-zero V shifts
// the curvature term, R0 = R(g0) + V, which leaves every conformal
// transformation law intact and gives access to backgrounds that are not
// conformally flat in the radial class.
struct Background {
  RadialGrid grid;
  std::vector<double> U0;
  std::vector<double> V;
  std::vector<double> R0;
  double tau;  // fitted decay order of U0 - 1; +inf when U0 - 1 vanishes on the tail
  double a_n;
  double N;
  double K_radius;
  std::string kind;

  int dimension() const { return grid.dimension(); }
};

struct CatalogEntry {
  std::string kind;
  std::map<std::string, double> params;
};

// Catalog:
//   flat
//   harmonic_tail {c, core_radius = 1}
//   gaussian_well {amplitude, sigma}
//   potential_well {amplitude, radius, width}      U0 = 1, V = -A (1 - smoothstep)
//   zero_yamabe {lambda}                           U0 = 1, V with an exact decaying kernel
// Throws std::invalid_argument on unknown kinds, missing parameters or U0 <= 0.
Background make_background(const RadialGrid& grid, const CatalogEntry& entry, double K_radius);

// Assembles L with the given far-field closure.
Tridiagonal assemble_conformal_laplacian(const Background& bg, Closure closure = Closure::zero_flux);

// Scalar curvature of u^{4/(n-2)} g0, i.e. u^{-N} L u. The last node repeats
// the value of its neighbour. Throws PreconditionViolation if u <= 0 anywhere.
std::vector<double> conformal_scalar_curvature(const Background& bg, std::span<const double> u);

// Background for the metric rho^{4/(n-2)} g0: U0 -> U0 rho, V -> rho^{1-N} V.
Background conformal_change(const Background& bg, std::span<const double> rho);

// Laplace-Beltrami operator of W^{4/(n-2)} (flat) applied to f:
//   W^{-N} (D(W f) - f D W), zero-flux closure, last node copied.
std::vector<double> laplace_beltrami(const RadialGrid& grid, std::span<const double> W,
                                     std::span<const double> f);

// Flat finite-volume Laplacian D f.
std::vector<double> flat_laplacian(const RadialGrid& grid, std::span<const double> f,
                                   Closure closure = Closure::zero_flux);

// Least-squares decay order of |f - 1| over the tail window [R_max/10, R_max].
double fit_tail_order(const RadialGrid& grid, std::span<const double> f);

// x^3 (10 - 15x + 6x^2) clamped to [0, 1].
double smoothstep5(double x);

}  // namespace yflow
