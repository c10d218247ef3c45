#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "helpers.hpp"
#include "yflow/background.hpp"
#include "yflow/elliptic.hpp"
#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

using namespace yflow;

namespace {

// Negative curvature supported in r < 5.
Background small_well() {
  return make_background(build_grid(3, 1024, 200.0, 1.05),
                         {"potential_well", {{"amplitude", 0.5}, {"radius", 3.0}, {"width", 2.0}}}, 10.0);
}

}  // namespace

TEST_SUITE("elliptic") {
  TEST_CASE("equation names round-trip") {
    for (EllipticEquation e : {EllipticEquation::steady_neg, EllipticEquation::harmonic_decay,
                               EllipticEquation::compactified_u0, EllipticEquation::prescribe_rho}) {
      CHECK(parse_equation(to_string(e)) == e);
    }
    CHECK_FALSE(parse_equation("heat").has_value());
  }

  TEST_CASE("steady negative solution has curvature -1") {
    const Background bg = testing::well(2048, 400.0);
    const EllipticSolution s = solve_steady_negative(bg);
    CHECK(s.equation == EllipticEquation::steady_neg);
    CHECK(s.residual_sup <= NewtonControls{}.tolerance);
    CHECK(kernels::min_value(s.values) > 0.0);
    const std::vector<double> res = steady_residual(bg, s.values);
    CHECK(kernels::max_abs(res) <= 1e-10);
    const std::vector<double> R = conformal_scalar_curvature(bg, s.values);
    for (std::size_t i = 0; i <= bg.grid.last_index_within(2.0 * bg.K_radius); ++i) {
      CHECK(R[i] == doctest::Approx(-1.0).epsilon(1e-9));
    }
    CHECK(s.decay_exponent >= 0.85);
    CHECK(s.decay_exponent <= 1.15);
  }

  TEST_CASE("constant negative core gives u close to 1 inside the core") {
    const Background bg = make_background(build_grid(3, 2048, 400.0, 1.05),
                                          {"potential_well", {{"amplitude", 1.0}, {"radius", 40.0}, {"width", 5.0}}},
                                          10.0);
    const EllipticSolution s = solve_steady_negative(bg);
    const std::vector<double> res = steady_residual(bg, s.values);
    for (std::size_t i = 0; i <= bg.grid.last_index_within(10.0); ++i) {
      CHECK(s.values[i] == doctest::Approx(1.0).epsilon(1e-3));
      CHECK(std::fabs(res[i]) <= 1e-10);
    }
  }

  TEST_CASE("flat background has no positive steady or harmonic solution") {
    const Background bg = testing::flat(3, 512, 100.0);
    CHECK_THROWS_AS(solve_steady_negative(bg), SolverFailure);
    CHECK_THROWS_AS(solve_harmonic_decay(bg), SolverFailure);
    CHECK_THROWS_AS(solve_harmonic_decay(bg, HarmonicAnchor::far_field), SolverFailure);
  }

  TEST_CASE("harmonic solution on the zero-Yamabe background") {
    const Background bg = testing::zero_yamabe();
    const EllipticSolution w = solve_harmonic_decay(bg);
    const EllipticSolution w2 = solve_harmonic_decay(bg, HarmonicAnchor::far_field);
    CHECK(w.equation == EllipticEquation::harmonic_decay);
    // The kernel is known in closed form.
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      const double phi = std::pow(1.0 + std::pow(bg.grid.r(i) / 15.0, 2), -2.0);
      CHECK(w.values[i] == doctest::Approx(phi).epsilon(1e-8));
    }
    CHECK(w.values[0] == 1.0);
    CHECK(w.decay_exponent == doctest::Approx(4.0).epsilon(0.15));
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      lo = std::min(lo, w.values[i] / w2.values[i]);
      hi = std::max(hi, w.values[i] / w2.values[i]);
    }
    CHECK((hi - lo) / lo < 1e-4);
    CHECK(kernels::max_abs(harmonic_residual(bg, w.values)) <= 1e-8);
  }

  TEST_CASE("harmonic solutions on refined grids agree after interpolation") {
    const Background coarse = testing::zero_yamabe(1024, 400.0);
    const Background fine = testing::zero_yamabe(2048, 400.0);
    const EllipticSolution a = solve_harmonic_decay(coarse);
    const EllipticSolution b = solve_harmonic_decay(fine);
    double lo = INFINITY, hi = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < coarse.grid.size(); ++i) {
      const double r = coarse.grid.r(i);
      if (r > 40.0) break;
      while (fine.grid.r(j + 1) < r) ++j;
      const double t = (r - fine.grid.r(j)) / (fine.grid.r(j + 1) - fine.grid.r(j));
      const double bi = (1.0 - t) * b.values[j] + t * b.values[j + 1];
      lo = std::min(lo, a.values[i] / bi);
      hi = std::max(hi, a.values[i] / bi);
    }
    CHECK((hi - lo) / lo < 1e-4);
  }

  TEST_CASE("compactified u0") {
    const Background neg = testing::well(1024, 400.0);
    const EllipticSolution s = solve_steady_negative(neg);
    const EllipticSolution u0 = solve_compactified_u0(neg, YamabeSign::negative);
    CHECK(u0.equation == EllipticEquation::compactified_u0);
    CHECK(u0.values == s.values);

    const double Y = -3.0;
    const EllipticSolution scaled = solve_compactified_u0(neg, YamabeSign::negative, Y);
    CHECK(kernels::max_abs(steady_residual(neg, scaled.values, Y)) <= 1e-10);
    const std::vector<double> R = conformal_scalar_curvature(neg, scaled.values);
    for (std::size_t i = 0; i <= neg.grid.last_index_within(2.0 * neg.K_radius); ++i) {
      CHECK(R[i] == doctest::Approx(Y).epsilon(1e-9));
    }
    // u0 r^{n-2} levels off over the last decade.
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < neg.grid.size(); ++i) {
      if (neg.grid.r(i) < neg.grid.r_max() / 10.0) continue;
      const double q = u0.values[i] * neg.grid.r(i);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    CHECK((hi - lo) / hi < 0.10);

    const Background zero = testing::zero_yamabe(1024, 200.0);
    const EllipticSolution z = solve_compactified_u0(zero, YamabeSign::zero_band);
    CHECK(kernels::max_abs(harmonic_residual(zero, z.values)) <= 1e-8);

    CHECK_THROWS_AS(solve_compactified_u0(neg, YamabeSign::positive), PreconditionViolation);
    CHECK_THROWS_AS(solve_compactified_u0(neg, YamabeSign::negative, 1.0), PreconditionViolation);
  }

  TEST_CASE("prescribed curvature: identity cases") {
    const Background flat = testing::flat(3, 512, 100.0);
    const EllipticSolution rho = prescribe_scalar_curvature(flat, std::vector<double>(flat.grid.size(), 0.0));
    for (double x : rho.values) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::isinf(rho.decay_exponent));

    // R0 <= 0 already supported in K.
    const Background well = small_well();
    const std::vector<double> target(well.V);
    const EllipticSolution same = prescribe_scalar_curvature(well, target);
    for (double x : same.values) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("cutoff target") {
    const Background bg = testing::zero_yamabe(1024, 200.0);
    const std::vector<double> cut = compactly_supported_target(bg);
    for (std::size_t i = 0; i < cut.size(); ++i) {
      CHECK(cut[i] <= 0.0);
      if (bg.grid.r(i) >= bg.K_radius) CHECK(cut[i] == 0.0);
      if (bg.grid.r(i) <= 0.5 * bg.K_radius) CHECK(cut[i] == std::min(bg.R0[i], 0.0));
    }
  }

  TEST_CASE("prescribed curvature matches its target") {
    const Background small = small_well();
    std::vector<double> doubled(small.V);
    for (double& x : doubled) x *= 2.0;
    const Background zero = testing::zero_yamabe();
    for (const auto& [bg, target] : {std::pair{small, doubled}, std::pair{zero, compactly_supported_target(zero)}}) {
      NewtonControls tight;
      tight.tolerance = 1e-13;
      const EllipticSolution rho = prescribe_scalar_curvature(bg, target, tight);
      CHECK(rho.equation == EllipticEquation::prescribe_rho);
      CHECK(kernels::min_value(rho.values) > 0.0);
      CHECK(rho.residual_sup <= 1e-13);
      const Background changed = conformal_change(bg, rho.values);
      for (std::size_t i = 0; i <= bg.grid.last_index_within(2.0 * bg.K_radius); ++i) {
        CHECK(std::fabs(changed.R0[i] - target[i]) <= 1e-7);
      }
    }
    // rho - 1 decays like the Green's function in dimension 3.
    const EllipticSolution rho = prescribe_scalar_curvature(small, doubled);
    CHECK(rho.decay_exponent == doctest::Approx(1.0).epsilon(0.15));
  }

  TEST_CASE("prescribed curvature preconditions") {
    const Background bg = testing::well(512, 100.0);
    std::vector<double> positive(bg.grid.size(), 0.0);
    positive[3] = 0.1;
    CHECK_THROWS_AS(prescribe_scalar_curvature(bg, positive), PreconditionViolation);
    std::vector<double> wide(bg.grid.size(), -0.1);
    CHECK_THROWS_AS(prescribe_scalar_curvature(bg, wide), PreconditionViolation);
    CHECK_THROWS_AS(prescribe_scalar_curvature(bg, std::vector<double>(5, 0.0)), std::invalid_argument);
  }

  TEST_CASE("decay exponent fits") {
    const RadialGrid g = build_grid(3, 1024, 200.0, 1.05);
    std::vector<double> f(g.size()), h(g.size()), one(g.size(), 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = std::max(g.r(i), 1e-3);
      f[i] = 1.0 / r;
      h[i] = (1.0 / r) * (1.0 + 1.0 / r);
    }
    CHECK(fit_decay_exponent(g, f, 20.0, 200.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit_decay_exponent(g, h, 50.0, 200.0) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::fabs(fit_decay_exponent(g, one, 20.0, 200.0)) <= 1e-12);
    CHECK_THROWS(fit_decay_exponent(g, f, 199.9, 200.0));
    CHECK_THROWS(fit_decay_exponent(g, f, 1.0, 200.0));
  }
}
