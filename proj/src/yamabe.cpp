#include "yflow/yamabe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {
namespace {

double sphere_area(int n) {
  // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

struct BallProblem {
  Tridiagonal op;        // L on the ball
  Tridiagonal precond;   // kinetic part of L plus a shift
  std::vector<double> weight;
  double exponent;       // 2n/(n-2)
  double area_factor;    // |S^{n-1}|^{2/n}
};

struct QuotientParts {
  double quotient;
  double num;
  double den;
};

QuotientParts evaluate(const BallProblem& p, std::span<const double> v, std::span<double> lv,
                       std::span<double> work) {
  p.op.apply(v, lv);
  const double num = kernels::weighted_dot(p.weight, v, lv);
  for (std::size_t i = 0; i < v.size(); ++i) work[i] = std::fabs(v[i]);
  kernels::power(work, p.exponent, work);
  const double den = kernels::dot(p.weight, work);
  if (!(den > 0.0)) throw std::invalid_argument("yamabe quotient of the zero function");
  return {p.area_factor * num / std::pow(den, 2.0 / p.exponent), num, den};
}

struct DescentResult {
  std::vector<double> v;
  double quotient;
  int iterations;
};

DescentResult descend(const BallProblem& p, std::vector<double> v, const YamabeControls& c) {
  const std::size_t m = v.size();
  std::vector<double> lv(m), work(m), grad(m), dir(m), trial(m), trial_lv(m);
  const double scale0 = kernels::max_abs(v);
  for (double& x : v) x /= scale0;
  QuotientParts cur = evaluate(p, v, lv, work);
  double step = 1.0;
  int quiet = 0;
  for (int it = 1; it <= c.max_iterations; ++it) {
    const double ratio = cur.num / cur.den;
    for (std::size_t i = 0; i < m; ++i) {
      grad[i] = lv[i] - ratio * std::pow(std::fabs(v[i]), p.exponent - 2.0) * v[i];
    }
    std::vector<double> d = solve(p.precond, grad);
    for (std::size_t i = 0; i < m; ++i) dir[i] = -d[i];
    const double slope = 2.0 * p.area_factor / std::pow(cur.den, 2.0 / p.exponent) *
                         kernels::weighted_dot(p.weight, grad, dir);
    if (!(slope < 0.0)) return {std::move(v), cur.quotient, it};

    step = std::min(step * 2.0, 1e8);
    bool accepted = false;
    QuotientParts next{};
    for (int k = 0; k < 80; ++k) {
      kernels::add_scaled(v, step, dir, trial);
      if (kernels::max_abs(trial) > 0.0) {
        next = evaluate(p, trial, trial_lv, work);
        if (next.quotient <= cur.quotient + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) return {std::move(v), cur.quotient, it};

    const double change = cur.quotient - next.quotient;
    const double scale = kernels::max_abs(trial);
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = trial[i] / scale;
      lv[i] = trial_lv[i] / scale;
    }
    const double s2 = scale * scale;
    next.num /= s2;
    next.den /= std::pow(scale, p.exponent);
    cur = next;
    if (change <= c.convergence * std::max(std::fabs(cur.quotient), c.tol)) {
      if (++quiet >= 3) return {std::move(v), cur.quotient, it};
    } else {
      quiet = 0;
    }
  }
  throw SolverFailure("yamabe: descent did not converge within " +
                      std::to_string(c.max_iterations) + " iterations");
}

BallProblem make_problem(const Background& bg, const Tridiagonal& full, std::size_t m,
                         double radius) {
  const int n = bg.dimension();
  BallProblem p;
  p.op = full.leading(m);
  p.precond = p.op;
  const double shift = bg.a_n / (radius * radius);
  for (std::size_t i = 0; i < m; ++i) p.precond.diag[i] += shift - bg.V[i];
  p.weight.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    p.weight[i] = bg.grid.volumes()[i] * std::pow(bg.U0[i], bg.N + 1.0);
  }
  p.exponent = 2.0 * n / (n - 2.0);
  p.area_factor = std::pow(sphere_area(n), 2.0 / n);
  return p;
}

std::size_t nodes_inside(const RadialGrid& grid, double radius) {
  std::size_t m = 0;
  while (m < grid.size() && grid.r(m) < radius) ++m;
  return m;
}

std::vector<double> default_radii(double r_max) {
  std::vector<double> radii;
  for (double r = 5.0; r <= 0.9 * r_max; r *= 2.0) radii.push_back(r);
  if (radii.empty()) radii.push_back(0.9 * r_max);
  return radii;
}

}  // namespace

std::string_view to_string(YamabeSign sign) {
  switch (sign) {
    case YamabeSign::negative:
      return "negative";
    case YamabeSign::zero_band:
      return "zero_band";
    case YamabeSign::positive:
      return "positive";
  }
  return "zero_band";
}

std::optional<YamabeSign> parse_sign(std::string_view name) {
  if (name == "negative") return YamabeSign::negative;
  if (name == "zero_band") return YamabeSign::zero_band;
  if (name == "positive") return YamabeSign::positive;
  return std::nullopt;
}

double yamabe_quotient(const Background& bg, std::span<const double> v) {
  if (v.size() != bg.grid.size()) throw std::invalid_argument("sample count does not match grid");
  const Tridiagonal l = assemble_conformal_laplacian(bg, Closure::zero_flux);
  const BallProblem p = make_problem(bg, l, v.size(), bg.grid.r_max());
  std::vector<double> lv(v.size()), work(v.size());
  return evaluate(p, v, lv, work).quotient;
}

double smallest_dirichlet_eigenvalue(const Background& bg, std::size_t m) {
  const Tridiagonal l = assemble_conformal_laplacian(bg, Closure::zero_flux).leading(m);
  return eigenvalue_bisect(symmetrize(l), 0);
}

YamabeEstimate estimate_yamabe(const Background& bg, const YamabeControls& controls) {
  if (!(controls.tol > 0.0)) throw std::invalid_argument("yamabe tolerance must be positive");
  const int n = bg.dimension();
  const RadialGrid& grid = bg.grid;
  const Tridiagonal full = assemble_conformal_laplacian(bg, Closure::zero_flux);

  YamabeEstimate est;
  est.ball_radii = controls.ball_radii.empty() ? default_radii(grid.r_max()) : controls.ball_radii;
  if (!std::is_sorted(est.ball_radii.begin(), est.ball_radii.end())) {
    throw std::invalid_argument("ball radii must be increasing");
  }

  std::mt19937_64 rng(controls.seed);
  std::vector<double> previous;
  double best_q = std::numeric_limits<double>::infinity();
  BallProblem last_problem;
  for (double radius : est.ball_radii) {
    const std::size_t m = nodes_inside(grid, radius);
    if (m < 3 || m >= grid.size()) throw std::invalid_argument("ball radius outside the grid");
    BallProblem p = make_problem(bg, full, m, radius);

    std::vector<std::vector<double>> seeds;
    for (double frac : {0.125, 0.25, 0.5}) {
      const double width = frac * radius;
      std::vector<double> s(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double x = grid.r(i) / radius;
        s[i] = std::exp(-(grid.r(i) / width) * (grid.r(i) / width)) * (1.0 - x * x);
      }
      seeds.push_back(std::move(s));
    }
    std::shuffle(seeds.begin(), seeds.end(), rng);
    if (!previous.empty()) {
      previous.resize(m, 0.0);
      seeds.push_back(previous);
    }

    double ball_best = std::numeric_limits<double>::infinity();
    std::vector<double> ball_witness;
    for (auto& seed : seeds) {
      DescentResult r = descend(p, std::move(seed), controls);
      est.iterations += r.iterations;
      if (r.quotient < ball_best) {
        ball_best = r.quotient;
        ball_witness = std::move(r.v);
      }
    }
    // The previous witness is one of the seeds, so this never increases.
    if (ball_best <= best_q) {
      best_q = ball_best;
      previous = std::move(ball_witness);
    }
    est.ball_upper.push_back(best_q);
    last_problem = std::move(p);
  }

  est.upper = best_q;
  est.witness.assign(grid.size(), 0.0);
  std::copy(previous.begin(), previous.end(), est.witness.begin());

  const std::size_t m = last_problem.op.size();
  est.smallest_eigenvalue = eigenvalue_bisect(symmetrize(last_problem.op), 0);
  if (est.smallest_eigenvalue < 0.0) {
    est.lower = est.upper;
  } else if (est.smallest_eigenvalue == 0.0) {
    est.lower = 0.0;
  } else {
    // max_i v_i^2 <= g * (v, L v)_w with g the largest diagonal entry of
    // (W L)^{-1}; combined with (v, v)_w <= (v, L v)_w / lambda_1.
    std::vector<double> bdiag(m), boff(m > 0 ? m - 1 : 0);
    for (std::size_t i = 0; i < m; ++i) {
      bdiag[i] = last_problem.weight[i] * last_problem.op.diag[i];
      if (i + 1 < m) boff[i] = last_problem.weight[i] * last_problem.op.upper[i];
    }
    const std::vector<double> inv = inverse_diagonal(bdiag, boff);
    const double g = *std::max_element(inv.begin(), inv.end());
    est.lower = last_problem.area_factor * std::pow(est.smallest_eigenvalue, (n - 2.0) / n) *
                std::pow(g, -2.0 / n);
  }

  if (est.upper < -controls.tol) {
    est.sign = YamabeSign::negative;
  } else if (est.lower > controls.tol) {
    est.sign = YamabeSign::positive;
  } else {
    est.sign = YamabeSign::zero_band;
  }
  return est;
}

}  // namespace yflow
