#include "yflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace yflow {
namespace {

constexpr double kCoreRadius = 2.0;
constexpr double kCoreSpacing = 0.05;
constexpr double kRatioSlack = 1e-12;

std::vector<double> sinh_nodes(std::size_t m, double r_max, double beta) {
  std::vector<double> r(m + 1);
  if (beta == 0.0) {
    for (std::size_t i = 0; i <= m; ++i) r[i] = r_max * static_cast<double>(i) / m;
  } else {
    const double c = r_max / std::sinh(beta);
    for (std::size_t i = 0; i <= m; ++i) r[i] = c * std::sinh(beta * static_cast<double>(i) / m);
  }
  r[m] = r_max;
  return r;
}

double spacing_ratio(const std::vector<double>& r) {
  double worst = 1.0;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    worst = std::max(worst, (r[i + 1] - r[i]) / (r[i] - r[i - 1]));
  }
  return worst;
}

}  // namespace

RadialGrid::RadialGrid(int dimension, std::vector<double> nodes, double grading)
    : dimension_(dimension), grading_(grading), nodes_(std::move(nodes)) {
  if (dimension_ < 3) throw std::invalid_argument("grid dimension must be at least 3");
  if (nodes_.size() < 64) throw std::invalid_argument("grid needs at least 64 nodes");
  if (nodes_.front() != 0.0) throw std::invalid_argument("grid must start at r = 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i]) || !(nodes_[i] > nodes_[i - 1])) {
      throw std::invalid_argument("grid nodes must be finite and strictly increasing");
    }
  }
  if (!(nodes_.back() > 1.0)) throw std::invalid_argument("grid must extend beyond r = 1");

  const std::size_t m = nodes_.size() - 1;
  const double n = dimension_;
  face_coeff_.resize(m);
  face_radius_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    face_radius_[i] = 0.5 * (nodes_[i] + nodes_[i + 1]);
    face_coeff_[i] = std::pow(face_radius_[i], n - 1.0) / (nodes_[i + 1] - nodes_[i]);
  }
  volumes_.resize(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    const double inner = i == 0 ? 0.0 : face_radius_[i - 1];
    const double outer = i == m ? nodes_[m] : face_radius_[i];
    volumes_[i] = (std::pow(outer, n) - std::pow(inner, n)) / n;
  }
}

double RadialGrid::max_spacing_ratio() const { return spacing_ratio(nodes_); }

std::size_t RadialGrid::last_index_within(double radius) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), radius);
  return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

RadialGrid build_grid(int dimension, int num_nodes, double r_max, double grading) {
  if (dimension < 3) throw std::invalid_argument("dimension must be >= 3");
  if (num_nodes < 64) throw std::invalid_argument("num_nodes must be >= 64");
  if (!std::isfinite(r_max) || !(r_max > 1.0)) {
    throw std::invalid_argument("r_max must be finite and > 1");
  }
  if (!std::isfinite(grading) || !(grading >= 1.0)) {
    throw std::invalid_argument("grading must be finite and >= 1");
  }

  const std::size_t m = static_cast<std::size_t>(num_nodes) - 1;
  double beta = grading == 1.0 ? 0.0 : std::asinh(r_max);
  std::vector<double> r = sinh_nodes(m, r_max, beta);
  if (spacing_ratio(r) > grading + kRatioSlack) {
    double lo = 0.0;
    double hi = beta;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * beta; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (spacing_ratio(sinh_nodes(m, r_max, mid)) > grading) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    beta = lo;
    r = sinh_nodes(m, r_max, beta);
  }

  for (std::size_t i = 0; i < m && r[i] < kCoreRadius; ++i) {
    if (r[i + 1] - r[i] > kCoreSpacing) {
      throw std::invalid_argument("grid spacing " + std::to_string(r[i + 1] - r[i]) +
                                  " on [0, 2] exceeds 0.05; add nodes or increase grading");
    }
  }
  return RadialGrid(dimension, std::move(r), grading);
}

double weighted_sup_norm(const RadialGrid& grid, std::span<const double> f, double beta) {
  if (f.size() != grid.size()) throw std::invalid_argument("sample count does not match grid");
  double best = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) throw std::invalid_argument("non-finite sample");
    const double w = std::pow(std::max(grid.r(i), 1.0), -beta);
    best = std::max(best, w * std::fabs(f[i]));
  }
  return best;
}

}  // namespace yflow
