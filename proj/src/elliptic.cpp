#include "yflow/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {
namespace {

// Residual of A w + g(w) + c, componentwise relative to the size of its terms.
struct SemilinearSystem {
  Tridiagonal A;
  std::function<double(std::size_t, double)> g;
  std::function<double(std::size_t, double)> dg;
  std::vector<double> c;

  std::vector<double> residual(std::span<const double> w, std::vector<double>* scaled) const {
    const std::size_t n = w.size();
    std::vector<double> f = A.apply(w);
    if (scaled) scaled->assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g(i, w[i]);
      double size = std::fabs(A.diag[i] * w[i]) + std::fabs(gi) + std::fabs(c[i]);
      if (i > 0) size += std::fabs(A.lower[i] * w[i - 1]);
      if (i + 1 < n) size += std::fabs(A.upper[i] * w[i + 1]);
      f[i] += gi + c[i];
      if (scaled) (*scaled)[i] = size > 0.0 ? std::fabs(f[i]) / size : std::fabs(f[i]);
    }
    return f;
  }
};

double sup(const std::vector<double>& v) { return kernels::max_abs(v); }

struct NewtonResult {
  std::vector<double> w;
  double residual;
  int iterations;
};

NewtonResult newton(const SemilinearSystem& sys, std::vector<double> w, const NewtonControls& c,
                    const char* what) {
  std::vector<double> scaled;
  std::vector<double> f = sys.residual(w, &scaled);
  double res = sup(scaled);
  int it = 0;
  while (res > c.tolerance) {
    if (it >= c.max_iterations) {
      throw SolverFailure(std::string(what) + ": Newton did not converge in " +
                          std::to_string(c.max_iterations) + " iterations (residual " +
                          std::to_string(res) + ")");
    }
    ++it;
    Tridiagonal jac = sys.A;
    for (std::size_t i = 0; i < w.size(); ++i) jac.diag[i] += sys.dg(i, w[i]);
    for (double& x : f) x = -x;
    const std::vector<double> dw = solve(jac, f);
    double lambda = 1.0;
    bool accepted = false;
    std::vector<double> trial(w.size()), trial_scaled;
    for (int k = 0; k <= c.max_halvings; ++k) {
      kernels::add_scaled(w, lambda, dw, trial);
      if (kernels::min_value(trial) > 0.0) {
        std::vector<double> ft = sys.residual(trial, &trial_scaled);
        const double rt = sup(trial_scaled);
        if (rt < res) {
          w.swap(trial);
          f = std::move(ft);
          res = rt;
          accepted = true;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      throw SolverFailure(std::string(what) + ": Newton damping exhausted at residual " +
                          std::to_string(res));
    }
  }
  return {std::move(w), res, it};
}

std::vector<double> smooth(std::vector<double> v, int passes) {
  for (int p = 0; p < passes; ++p) {
    std::vector<double> out(v);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) out[i] = 0.25 * v[i - 1] + 0.5 * v[i] + 0.25 * v[i + 1];
    v.swap(out);
  }
  return v;
}

double tail_exponent(const RadialGrid& grid, std::span<const double> f) {
  return fit_decay_exponent(grid, f, grid.r_max() / 10.0, grid.r_max());
}

double max_within(const RadialGrid& grid, std::span<const double> f, double radius) {
  const std::size_t k = grid.last_index_within(radius);
  return *std::max_element(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(k) + 1);
}

}  // namespace

std::string_view to_string(EllipticEquation eq) {
  switch (eq) {
    case EllipticEquation::steady_neg:
      return "steady_neg";
    case EllipticEquation::harmonic_decay:
      return "harmonic_decay";
    case EllipticEquation::compactified_u0:
      return "compactified_u0";
    case EllipticEquation::prescribe_rho:
      return "prescribe_rho";
  }
  return "steady_neg";
}

std::optional<EllipticEquation> parse_equation(std::string_view name) {
  for (auto eq : {EllipticEquation::steady_neg, EllipticEquation::harmonic_decay,
                  EllipticEquation::compactified_u0, EllipticEquation::prescribe_rho}) {
    if (to_string(eq) == name) return eq;
  }
  return std::nullopt;
}

double fit_decay_exponent(const RadialGrid& grid, std::span<const double> f, double lo, double hi) {
  if (f.size() != grid.size()) throw std::invalid_argument("sample count does not match grid");
  const double slack = 1e-12 * grid.r_max();
  if (!(lo < hi) || lo < grid.r_max() / 10.0 - slack || hi > grid.r_max() + slack) {
    throw std::invalid_argument("decay window must lie inside [R_max/10, R_max]");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = grid.r(i);
    if (r < lo || r > hi) continue;
    if (!(f[i] > 0.0)) throw std::invalid_argument("decay fit needs positive samples");
    const double x = std::log(r);
    const double y = std::log(f[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count <= 3) throw std::invalid_argument("decay window contains fewer than 4 nodes");
  return -(count * sxy - sx * sy) / (count * sxx - sx * sx);
}

std::vector<double> steady_residual(const Background& bg, std::span<const double> u,
                                    double curvature) {
  SemilinearSystem sys{assemble_conformal_laplacian(bg, Closure::robin),
                       [&](std::size_t, double x) { return -curvature * std::pow(x, bg.N); },
                       {},
                       std::vector<double>(u.size(), 0.0)};
  std::vector<double> scaled;
  sys.residual(u, &scaled);
  return scaled;
}

std::vector<double> harmonic_residual(const Background& bg, std::span<const double> w) {
  return steady_residual(bg, w, 0.0);
}

EllipticSolution solve_steady_negative(const Background& bg, const NewtonControls& controls) {
  const std::size_t size = bg.grid.size();
  const double N = bg.N;
  SemilinearSystem sys{assemble_conformal_laplacian(bg, Closure::robin),
                       [N](std::size_t, double x) { return std::pow(x, N); },
                       [N](std::size_t, double x) { return N * std::pow(x, N - 1.0); },
                       std::vector<double>(size, 0.0)};
  std::vector<double> guess(size);
  const double p = (bg.dimension() - 2) / 4.0;
  for (std::size_t i = 0; i < size; ++i) guess[i] = std::pow(std::max(-bg.R0[i], 0.0), p);
  guess = smooth(std::move(guess), 2);
  for (double& x : guess) x = std::max(x, 1e-6);

  NewtonResult r = newton(sys, std::move(guess), controls, "steady_neg");
  if (kernels::max_abs(r.w) < 1e-8) {
    throw SolverFailure("steady_neg: trivial solution; the background supports no positive solution");
  }
  EllipticSolution sol;
  sol.values = std::move(r.w);
  sol.residual_sup = r.residual;
  sol.newton_iters = r.iterations;
  sol.decay_exponent = tail_exponent(bg.grid, sol.values);
  sol.equation = EllipticEquation::steady_neg;
  return sol;
}

EllipticSolution solve_harmonic_decay(const Background& bg, HarmonicAnchor anchor,
                                      double tolerance) {
  const std::size_t size = bg.grid.size();
  const Tridiagonal l = assemble_conformal_laplacian(bg, Closure::robin);
  std::size_t row = 0;
  std::vector<double> w(size, 0.0);
  if (anchor == HarmonicAnchor::axis) {
    // Shoot outward from w_0 = 1 through rows 0..M-1; the Robin row is left over.
    row = size - 1;
    w[0] = 1.0;
    w[1] = -l.diag[0] * w[0] / l.upper[0];
    for (std::size_t i = 1; i + 1 < size; ++i) {
      w[i + 1] = -(l.lower[i] * w[i - 1] + l.diag[i] * w[i]) / l.upper[i];
    }
  } else {
    Tridiagonal a = l;
    std::vector<double> rhs(size, 0.0);
    row = size - 1;
    a.lower[row] = 0.0;
    a.upper[row] = 0.0;
    a.diag[row] = 1.0;
    rhs[row] = 1.0;
    w = solve(a, rhs);
  }
  for (double x : w) {
    if (!std::isfinite(x)) throw SolverFailure("harmonic_decay: singular system");
  }

  const std::vector<double> removed = harmonic_residual(bg, w);
  if (removed[row] > tolerance) {
    throw SolverFailure("harmonic_decay: no decaying L-harmonic function (relative residual " +
                        std::to_string(removed[row]) + " in the closing row)");
  }
  if (!(kernels::min_value(w) > 0.0)) {
    throw SolverFailure("harmonic_decay: solution changes sign; background not admissible");
  }
  const double scale = max_within(bg.grid, w, bg.K_radius);
  for (double& x : w) x /= scale;

  EllipticSolution sol;
  sol.values = std::move(w);
  const std::vector<double> res = harmonic_residual(bg, sol.values);
  sol.residual_sup = kernels::max_abs(res);
  sol.decay_exponent = tail_exponent(bg.grid, sol.values);
  sol.newton_iters = 0;
  sol.equation = EllipticEquation::harmonic_decay;
  return sol;
}

EllipticSolution solve_compactified_u0(const Background& bg, YamabeSign sign,
                                       std::optional<double> yamabe_value,
                                       const NewtonControls& controls) {
  EllipticSolution sol;
  if (sign == YamabeSign::negative) {
    sol = solve_steady_negative(bg, controls);
    if (yamabe_value) {
      if (!(*yamabe_value < 0.0)) {
        throw PreconditionViolation("compactified_u0: Yamabe value must be negative");
      }
      const double c = std::pow(-*yamabe_value, -(bg.dimension() - 2) / 4.0);
      for (double& x : sol.values) x *= c;
      sol.residual_sup = kernels::max_abs(steady_residual(bg, sol.values, *yamabe_value));
    }
  } else if (sign == YamabeSign::zero_band) {
    sol = solve_harmonic_decay(bg);
  } else {
    throw PreconditionViolation("compactified_u0: requires a negative or zero Yamabe sign");
  }
  sol.equation = EllipticEquation::compactified_u0;
  return sol;
}

std::vector<double> compactly_supported_target(const Background& bg) {
  std::vector<double> target(bg.grid.size());
  const double half = 0.5 * bg.K_radius;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double cutoff = 1.0 - smoothstep5((bg.grid.r(i) - half) / half);
    target[i] = std::min(bg.R0[i], 0.0) * cutoff;
  }
  return target;
}

EllipticSolution prescribe_scalar_curvature(const Background& bg,
                                            std::span<const double> R_target,
                                            const NewtonControls& controls) {
  const std::size_t size = bg.grid.size();
  if (R_target.size() != size) throw std::invalid_argument("sample count does not match grid");
  for (std::size_t i = 0; i < size; ++i) {
    if (!(R_target[i] <= 0.0)) {
      throw PreconditionViolation("prescribe_rho: target curvature must be non-positive");
    }
    if (bg.grid.r(i) > bg.K_radius && R_target[i] != 0.0) {
      throw PreconditionViolation("prescribe_rho: target curvature must vanish beyond K_radius");
    }
  }
  const Tridiagonal robin = assemble_conformal_laplacian(bg, Closure::robin);
  const Tridiagonal open = assemble_conformal_laplacian(bg, Closure::zero_flux);
  // Robin closure applied to rho - 1.
  std::vector<double> c(size, 0.0);
  c.back() = -(robin.diag.back() - open.diag.back());
  const double N = bg.N;
  std::vector<double> target(R_target.begin(), R_target.end());
  SemilinearSystem sys{robin,
                       [&target, N](std::size_t i, double x) { return -target[i] * std::pow(x, N); },
                       [&target, N](std::size_t i, double x) {
                         return -N * target[i] * std::pow(x, N - 1.0);
                       },
                       std::move(c)};
  NewtonResult r = newton(sys, std::vector<double>(size, 1.0), controls, "prescribe_rho");

  EllipticSolution sol;
  sol.values = std::move(r.w);
  sol.residual_sup = r.residual;
  sol.newton_iters = r.iterations;
  std::vector<double> deviation(size);
  bool trivial = false;
  for (std::size_t i = 0; i < size; ++i) {
    deviation[i] = std::fabs(sol.values[i] - 1.0);
    if (bg.grid.r(i) >= bg.grid.r_max() / 10.0 && deviation[i] == 0.0) trivial = true;
  }
  sol.decay_exponent = trivial ? std::numeric_limits<double>::infinity()
                               : tail_exponent(bg.grid, deviation);
  sol.equation = EllipticEquation::prescribe_rho;
  return sol;
}

}  // namespace yflow
