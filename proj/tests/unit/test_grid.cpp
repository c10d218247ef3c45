#include <doctest.h>

#include <cmath>
#include <cstring>
#include <optional>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "yflow/grid.hpp"

using namespace yflow;

TEST_SUITE("grid") {
  TEST_CASE("uniform 64-node grid on [0, 100] violates core density") {
    CHECK_THROWS_AS(build_grid(3, 64, 100.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("graded grid on [0, 100]") {
    const RadialGrid g = build_grid(3, 1024, 100.0, 1.05);
    CHECK(g.size() == 1024);
    CHECK(g.r(0) == 0.0);
    CHECK(g.r_max() == 100.0);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
      CHECK(g.r(i + 1) - g.r(i) >= (g.r(i) - g.r(i - 1)) * (1.0 - 1e-9));
    }
    CHECK(g.max_spacing_ratio() <= 1.05 + 1e-12);
  }

  TEST_CASE("n=4 grid on [0, 1000] with grading 1.03") {
    const RadialGrid g = build_grid(4, 2048, 1000.0, 1.03);
    double smallest = INFINITY, largest = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      const double h = g.r(i + 1) - g.r(i);
      smallest = std::min(smallest, h);
      largest = std::max(largest, h);
    }
    CHECK(smallest <= 0.05);
    CHECK(largest <= 1000.0 * (1.0 - 1.0 / 1.03));
  }

  TEST_CASE("spacing on [0, 2] never exceeds 0.05") {
    for (double q : {1.0, 1.01, 1.05, 1.2}) {
      for (double r_max : {10.0, 100.0, 1000.0}) {
        std::optional<RadialGrid> g;
        try {
          g.emplace(build_grid(3, 4096, r_max, q));
        } catch (const std::invalid_argument&) {
          continue;
        }
        for (std::size_t i = 0; i + 1 < g->size() && g->r(i) < 2.0; ++i) {
          CHECK(g->r(i + 1) - g->r(i) <= 0.05);
        }
      }
    }
  }

  TEST_CASE("grading 1 gives a uniform grid") {
    const RadialGrid g = build_grid(3, 401, 10.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.r(i) == doctest::Approx(0.025 * i).epsilon(1e-12));
  }

  TEST_CASE("control volumes tile the ball") {
    for (int n : {3, 4, 6}) {
      const RadialGrid g = build_grid(n, 512, 50.0, 1.05);
      double sum = 0.0;
      for (double v : g.volumes()) sum += v;
      CHECK(sum == doctest::Approx(std::pow(50.0, n) / n).epsilon(1e-12));
      for (double v : g.volumes()) CHECK(v > 0.0);
    }
  }

  TEST_CASE("face coefficients") {
    const RadialGrid g = build_grid(3, 256, 20.0, 1.05);
    for (std::size_t i = 0; i < g.last(); ++i) {
      const double rh = 0.5 * (g.r(i) + g.r(i + 1));
      CHECK(g.face_radii()[i] == rh);
      CHECK(g.face_coefficients()[i] == doctest::Approx(rh * rh / (g.r(i + 1) - g.r(i))).epsilon(1e-14));
    }
  }

  TEST_CASE("construction is deterministic") {
    const RadialGrid a = build_grid(5, 777, 321.0, 1.04);
    const RadialGrid b = build_grid(5, 777, 321.0, 1.04);
    CHECK(std::memcmp(a.nodes().data(), b.nodes().data(), a.size() * sizeof(double)) == 0);
  }

  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(build_grid(2, 1024, 100.0, 1.05), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 63, 100.0, 1.05), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 1024, 1.0, 1.05), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 1024, NAN, 1.05), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 1024, 100.0, 0.99), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, 1024, INFINITY, 1.05), std::invalid_argument);
    std::vector<double> bad(64);
    for (std::size_t i = 0; i < bad.size(); ++i) bad[i] = 0.1 * i;
    bad[10] = bad[9];
    CHECK_THROWS_AS(RadialGrid(3, bad, 1.0), std::invalid_argument);
  }

  TEST_CASE("last_index_within") {
    const RadialGrid g = build_grid(3, 401, 10.0, 1.0);
    CHECK(g.last_index_within(0.0) == 0);
    CHECK(g.last_index_within(1.0) == 40);
    CHECK(g.last_index_within(1.01) == 40);
    CHECK(g.last_index_within(100.0) == 400);
  }

  TEST_CASE("weighted sup norm examples") {
    const RadialGrid g = build_grid(3, 1024, 100.0, 1.05);
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = 1.0 / std::max(g.r(i), 1.0);
    CHECK(weighted_sup_norm(g, f, -1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(weighted_sup_norm(g, std::vector<double>(g.size(), 0.0), 2.5) == 0.0);

    std::vector<double> tail(g.size(), 0.0);
    double oracle = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.r(i) >= 1.0) {
        tail[i] = 1.0 / g.r(i);
        oracle = std::max(oracle, g.r(i) * tail[i]);
      }
    }
    CHECK(weighted_sup_norm(g, tail, -1.0) == doctest::Approx(oracle).epsilon(1e-15));
    CHECK(oracle == doctest::Approx(1.0).epsilon(1e-15));

    f[5] = NAN;
    CHECK_THROWS_AS(weighted_sup_norm(g, f, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(weighted_sup_norm(g, std::vector<double>(3, 0.0), 0.0), std::invalid_argument);
  }

  TEST_CASE("property: weighted sup norm is nonincreasing in beta for tails") {
    std::mt19937_64 rng(5);
    const RadialGrid g = build_grid(3, 512, 100.0, 1.05);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> f = testing::random_vector(rng, g.size(), -2.0, 2.0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.r(i) < 1.0) f[i] = 0.0;
      }
      std::uniform_real_distribution<double> beta(-3.0, 3.0);
      double b1 = beta(rng), b2 = beta(rng);
      if (b1 < b2) std::swap(b1, b2);
      CHECK(weighted_sup_norm(g, f, b1) <= weighted_sup_norm(g, f, b2));
    }
  }
}
