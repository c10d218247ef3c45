#pragma once

#include <span>
#include <vector>

namespace yflow {

// Radial mesh 0 = r_0 < r_1 < ... < r_M = R_max in dimension n, together with
// the finite-volume geometry used by every discrete operator: control volumes
// around each node (bounded by the midpoints between nodes) and the face
// coefficients r_{i+1/2}^{n-1} / (r_{i+1} - r_i).
class RadialGrid {
 public:
  // Validates the node array; throws std::invalid_argument if it is not a
  // strictly increasing array starting at 0 with r_M > 1 and at least 64
  // intervals' worth of nodes.
  RadialGrid(int dimension, std::vector<double> nodes, double grading);

  int dimension() const { return dimension_; }
  double grading() const { return grading_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t last() const { return nodes_.size() - 1; }
  double r_max() const { return nodes_.back(); }
  double r(std::size_t i) const { return nodes_[i]; }

  std::span<const double> nodes() const { return nodes_; }
  // Control volume of node i per unit solid angle.
  std::span<const double> volumes() const { return volumes_; }
  // One entry per interval [r_i, r_{i+1}].
  std::span<const double> face_coefficients() const { return face_coeff_; }
  std::span<const double> face_radii() const { return face_radius_; }

  // Largest ratio of consecutive spacings.
  double max_spacing_ratio() const;
  // Index of the last node with r <= radius.
  std::size_t last_index_within(double radius) const;

 private:
  int dimension_;
  double grading_;
  std::vector<double> nodes_;
  std::vector<double> volumes_;
  std::vector<double> face_coeff_;
  std::vector<double> face_radius_;
};

// Mesh of num_nodes points following r = c sinh(beta i / M): nearly uniform
// near the origin and geometric in the far field. Throws std::invalid_argument
// on bad parameters or when spacings on [0, 2] exceed 0.05.
RadialGrid build_grid(int dimension, int num_nodes, double r_max, double grading);

// max_i max(r_i, 1)^{-beta} |f_i|
double weighted_sup_norm(const RadialGrid& grid, std::span<const double> f, double beta);

}  // namespace yflow
