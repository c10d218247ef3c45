#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "yflow/background.hpp"
#include "yflow/grid.hpp"

namespace testing {

inline yflow::Background flat(int n = 3, int nodes = 512, double r_max = 100.0) {
  return yflow::make_background(yflow::build_grid(n, nodes, r_max, 1.05), {"flat", {}}, 10.0);
}

inline yflow::Background well(int nodes = 1024, double r_max = 200.0) {
  return yflow::make_background(yflow::build_grid(3, nodes, r_max, 1.05),
                                {"potential_well", {{"amplitude", 5.0}, {"radius", 12.0}, {"width", 4.0}}},
                                10.0);
}

inline yflow::Background zero_yamabe(int nodes = 2048, double r_max = 400.0) {
  return yflow::make_background(yflow::build_grid(6, nodes, r_max, 1.05),
                                {"zero_yamabe", {{"lambda", 15.0}}}, 5.0);
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace testing
