#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "helpers.hpp"
#include "yflow/errors.hpp"
#include "yflow/flow.hpp"
#include "yflow/verify.hpp"

using namespace yflow;

namespace {

Trajectory synthetic(const Background& bg, std::vector<FlowState> checkpoints,
                     std::vector<SummaryRow> summary = {}, double boundary = 1.0) {
  FlowControls c;
  c.boundary_value = boundary;
  const double t_end = checkpoints.back().t;
  return Trajectory{bg, c, t_end, std::move(checkpoints), std::move(summary), 0, 0, 0, false, {}};
}

SummaryRow row(double t) {
  SummaryRow r{};
  r.t = t;
  return r;
}

std::vector<double> constant(const Background& bg, double x) { return std::vector<double>(bg.grid.size(), x); }

EllipticSolution solution(std::vector<double> v, double decay = 0.0) {
  EllipticSolution s;
  s.values = std::move(v);
  s.decay_exponent = decay;
  return s;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("verdict margin decides pass") {
    CHECK(make_verdict("x", 0.0).passed);
    CHECK(make_verdict("x", 0.3).passed);
    CHECK_FALSE(make_verdict("x", -1e-300).passed);
    const Verdict v = make_verdict("x", -INFINITY);
    CHECK_FALSE(v.passed);
    CHECK(v.details["margin"] == "-inf");
  }

  TEST_CASE("log-log slope") {
    const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
    CHECK(log_log_slope(x, y) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(log_log_slope(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  }

  TEST_CASE("stationarity") {
    const Background bg = testing::flat(3, 256, 50.0);
    const Trajectory traj = run(bg, 16.0);
    const Verdict ok = check_stationarity(traj, 1e-8);
    CHECK(ok.passed);
    CHECK(ok.margin > 0.99);
    Trajectory bad = traj;
    bad.checkpoints[2].u[3] = 1.0 + 2e-8;
    const Verdict v = check_stationarity(bad, 1e-8);
    CHECK_FALSE(v.passed);
    CHECK(v.margin == doctest::Approx(-1.0).epsilon(1e-6));
  }

  TEST_CASE("curvature lower bound") {
    const Background bg = testing::flat(3, 256, 50.0);
    std::vector<SummaryRow> rows{row(0.5), row(1.0), row(2.0)};
    rows[0].min_Rt = -5.0;
    rows[1].min_Rt = -0.5;
    rows[2].min_Rt = -1.005;
    const FlowState s{2.0, constant(bg, 1.0), 3};
    CHECK(check_curvature_lower(synthetic(bg, {s}, rows), 1e-2).passed);
    rows[2].min_Rt = -1.02;
    const Verdict v = check_curvature_lower(synthetic(bg, {s}, rows), 1e-2);
    CHECK_FALSE(v.passed);
    CHECK(v.details["at_t"] == 2.0);
    CHECK_THROWS_AS(check_curvature_lower(synthetic(bg, {s}, {row(0.5)}), 1e-2), PreconditionViolation);
  }

  TEST_CASE("rescaled monotonicity") {
    const Background bg = testing::flat(3, 256, 50.0);
    const FlowState a{1.0, constant(bg, 1.0), 1};
    // t^{-1/4} u is unchanged from t = 1 to t = 16 when u doubles.
    CHECK(check_rescaled_monotone(synthetic(bg, {a, {16.0, constant(bg, 2.0), 2}}), 1e-10).passed);
    CHECK_FALSE(check_rescaled_monotone(synthetic(bg, {a, {16.0, constant(bg, 2.1), 2}}), 1e-10).passed);
    CHECK_THROWS_AS(check_rescaled_monotone(synthetic(bg, {a}), 1e-10), PreconditionViolation);
  }

  TEST_CASE("comparison") {
    const Background bg = testing::well(512, 100.0);
    FlowControls hi;
    hi.boundary_value = 1.1;
    const Trajectory lower = run(bg, 8.0);
    const Trajectory upper = run(bg, 8.0, hi);
    const Verdict ok = check_comparison(lower, upper, 1e-10);
    CHECK(ok.passed);
    CHECK(ok.details["matched_times"] == 5);
    CHECK_FALSE(check_comparison(upper, lower, 1e-10).passed);
    // Equal trajectories sit exactly on the boundary of the criterion.
    CHECK(check_comparison(lower, lower, 1e-10).margin == 0.0);
    Trajectory crossed = upper;
    crossed.checkpoints[3].u[10] = lower.checkpoints[3].u[10] - 1e-9;
    CHECK_FALSE(check_comparison(lower, crossed, 1e-10).passed);
  }

  TEST_CASE("lower envelope") {
    const Background bg = testing::flat(3, 256, 50.0);
    const EllipticSolution steady = solution(constant(bg, 0.4));
    // f = 16^{-1/4} = 1/2
    const FlowState s{16.0, constant(bg, 0.8), 4};
    CHECK(check_lower_envelope(synthetic(bg, {s}), steady, YamabeSign::negative, 1e-10).passed);
    FlowState low = s;
    low.u[5] = 0.79;
    CHECK_FALSE(check_lower_envelope(synthetic(bg, {low}), steady, YamabeSign::negative, 1e-10).passed);
    CHECK_THROWS_AS(check_lower_envelope(synthetic(bg, {s}), steady, YamabeSign::zero_band, 1e-10),
                    PreconditionViolation);
    CHECK_THROWS_AS(check_lower_envelope(synthetic(bg, {{0.5, constant(bg, 1.0), 1}}), steady,
                                         YamabeSign::negative, 1e-10),
                    PreconditionViolation);
  }

  TEST_CASE("blow-up profile and rate") {
    const Background bg = testing::flat(3, 256, 50.0);
    auto build = [&](double rate, double profile_error) {
      std::vector<SummaryRow> rows;
      for (double t = 100.0; t <= 1000.0 * (1 + 1e-12); t *= 1.1) {
        SummaryRow r = row(t);
        r.max_u_K = std::pow(t, rate);
        rows.push_back(r);
      }
      const double t_end = rows.back().t;
      FlowState last{t_end, constant(bg, 0.3 * std::pow(t_end, 0.25) + profile_error), 40};
      return synthetic(bg, {FlowState{0.0, constant(bg, 1.0), 0}, last}, rows);
    };
    const EllipticSolution steady = solution(constant(bg, 0.3), 1.0);
    CHECK(check_theoremA(build(0.25, 0.0), steady, 10.0).passed);
    CHECK_FALSE(check_theoremA(build(0.4, 0.0), steady, 10.0).passed);
    CHECK_FALSE(check_theoremA(build(0.25, 0.2), steady, 10.0).passed);
    CHECK_FALSE(check_theoremA(build(0.25, 0.0), solution(constant(bg, 0.3), 2.0), 10.0).passed);
    CHECK_THROWS_AS(check_theoremA(build(0.0, 0.0), steady, 10.0), PreconditionViolation);
  }

  TEST_CASE("decay of the rescaled maximum") {
    const Background bg = testing::flat(3, 256, 50.0);
    auto build = [&](double final_tilde) {
      SummaryRow r = row(1000.0);
      r.max_u_tilde = 0.1;
      // 10000^{-1/4} = 0.1
      FlowState last{1e4, constant(bg, 10.0 * final_tilde), 20};
      return synthetic(bg, {last}, {r});
    };
    CHECK(check_theoremB(build(0.01), 0.05).passed);
    CHECK_FALSE(check_theoremB(build(0.06), 0.05).passed);
    CHECK_FALSE(check_theoremB(build(0.01), 0.05, 1e6).passed);
    CHECK(check_theoremB(build(0.01), 0.05, 0.05).passed);
    CHECK_THROWS_AS(check_theoremB(synthetic(bg, {FlowState{1e4, constant(bg, 1.0), 1}}, {row(5e3)}), 0.05),
                    PreconditionViolation);
  }

  TEST_CASE("normalized profile") {
    const Background bg = testing::flat(3, 512, 100.0);
    std::vector<double> w(bg.grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (1.0 + bg.grid.r(i));
    std::vector<double> u(w.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 3.0 * w[i];
    u.back() *= 2.0;  // outside 2K
    const FlowState last{100.0, u, 10};
    CHECK(check_theoremC(synthetic(bg, {last}), solution(w), 5.0, 0.02).passed);
    FlowState off = last;
    off.u[bg.grid.last_index_within(8.0)] *= 1.5;
    const Verdict v = check_theoremC(synthetic(bg, {off}), solution(w), 5.0, 0.02);
    CHECK_FALSE(v.passed);
    CHECK(v.details["at_r"].get<double>() <= 10.0);
  }

  TEST_CASE("harmonic uniqueness") {
    const std::vector<double> a{1.0, 0.5, 0.25};
    CHECK(check_harmonic_uniqueness(solution(a), solution({3.0, 1.5, 0.75}), 1e-4).passed);
    CHECK_FALSE(check_harmonic_uniqueness(solution(a), solution({3.0, 1.5, 0.76}), 1e-4).passed);
    CHECK_THROWS_AS(check_harmonic_uniqueness(solution(a), solution({1.0}), 1e-4), PreconditionViolation);
  }

  TEST_CASE("Harnack ratio") {
    const Background bg = testing::flat(3, 256, 50.0);
    auto build = [&](auto ratio_at) {
      std::vector<FlowState> cps{{0.0, constant(bg, 1.0), 0}};
      for (double t = 1.0; t <= 1024.0; t *= 2.0) {
        FlowState s{t, constant(bg, 1.0), 0};
        s.u[0] = ratio_at(t);
        cps.push_back(s);
      }
      return synthetic(bg, cps);
    };
    CHECK(check_harnack(build([](double) { return 2.0; })).passed);
    CHECK_FALSE(check_harnack(build([](double) { return 30.0; })).passed);
    CHECK_FALSE(check_harnack(build([](double t) { return 1.0 + t / 100.0; })).passed);
    HarnackOptions no_slope;
    no_slope.slope_tol = 0.0;
    CHECK(check_harnack(build([](double t) { return 1.0 + t / 100.0; }), no_slope).passed);
    HarnackOptions late;
    late.t_min = 1e6;
    CHECK_THROWS_AS(check_harnack(build([](double) { return 2.0; }), late), PreconditionViolation);
  }

  TEST_CASE("curvature sandwich") {
    const Background flat = testing::flat(3, 256, 50.0);
    const Verdict ok = check_curvature_sandwich(run(flat, 4.0), 1e-2);
    CHECK(ok.passed);
    CHECK(ok.margin > 0.99);
    const Background bump = make_background(build_grid(3, 512, 100.0, 1.05),
                                            {"potential_well", {{"amplitude", -1.0}, {"radius", 3.0}, {"width", 2.0}}},
                                            10.0);
    const Verdict bad = check_curvature_sandwich(run(bump, 2.0), 1e-2);
    CHECK_FALSE(bad.passed);
    CHECK(bad.details["initial_max_R"].get<double>() > 0.5);
  }

  TEST_CASE("sandwich between scaled solutions") {
    const Background bg = testing::well(512, 100.0);
    const Trajectory u = run(bg, 8.0);
    const Trajectory low = run_for_scaling(bg, 0.5, 8.0);
    const Trajectory high = run_for_scaling(bg, 2.0, 8.0);
    CHECK(check_sandwich(u, scale_solution(low, 0.5), scale_solution(high, 2.0), 1e-11).passed);
    CHECK_FALSE(check_sandwich(u, scale_solution(high, 2.0), scale_solution(low, 0.5), 1e-11).passed);
  }

  TEST_CASE("maximum on the compact set") {
    const Background bg = testing::flat(3, 256, 50.0);
    std::vector<double> u(bg.grid.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 2.0 - bg.grid.r(i) / 50.0;
    const FlowState s{1.0, u, 1};
    CHECK(check_max_on_compact(synthetic(bg, {s}), 10.0, 1e-10).passed);
    FlowState far = s;
    far.u[bg.grid.last_index_within(30.0)] = 3.0;
    const Verdict v = check_max_on_compact(synthetic(bg, {far}), 10.0, 1e-10);
    CHECK_FALSE(v.passed);
    CHECK(v.details["argmax_r"].get<double>() > 10.0);
  }

  TEST_CASE("rho relation") {
    const Background bg = testing::flat(3, 256, 50.0);
    std::vector<double> rho(bg.grid.size()), u(bg.grid.size()), ur(bg.grid.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
      rho[i] = 1.0 + 1.0 / (1.0 + bg.grid.r(i));
      u[i] = 2.0 + std::sin(bg.grid.r(i));
      ur[i] = u[i] / rho[i];
    }
    const Trajectory a = synthetic(bg, {{1.0, u, 1}, {2.0, u, 2}});
    const Trajectory b = synthetic(bg, {{1.0, ur, 1}, {2.0, ur, 2}});
    const Verdict ok = check_rho_relation(a, b, rho, 1e-11);
    CHECK(ok.passed);
    CHECK(ok.details["matched_times"] == 2);
    Trajectory off = b;
    off.checkpoints[1].u[4] *= 1.0 + 1e-9;
    CHECK_FALSE(check_rho_relation(a, off, rho, 1e-11).passed);
    CHECK_THROWS_AS(check_rho_relation(a, synthetic(bg, {{3.0, ur, 1}}), rho, 1e-11), PreconditionViolation);
  }

  TEST_CASE("scalar curvature evolution and its control") {
    const Background bg = testing::well(1024, 200.0);
    const Trajectory traj = run(bg, 1.0);
    const Verdict v = check_scalar_evolution(traj);
    CHECK(v.passed);
    const Verdict control = check_scalar_evolution_control(traj);
    CHECK(control.passed);
    EvolutionOptions strict;
    strict.min_order = 2.0;
    CHECK_FALSE(check_scalar_evolution(traj, strict).passed);
    EvolutionOptions missing;
    missing.probe_time = 0.7;
    CHECK_THROWS_AS(check_scalar_evolution(traj, missing), PreconditionViolation);
  }
}
