#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace yflow {

// Square tridiagonal matrix stored by diagonals. lower[0] and upper[n-1] are
// unused and kept at zero.
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const { return diag.size(); }

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  // Leading principal block of size m.
  Tridiagonal leading(std::size_t m) const;
};

// Thomas algorithm. Throws SolverFailure on a vanishing pivot.
std::vector<double> solve(const Tridiagonal& a, std::span<const double> rhs);

// Symmetric tridiagonal given by its diagonal and the squares of its
// off-diagonal entries (offdiag_sq[i] couples rows i and i+1).
struct SymmetricTridiagonal {
  std::vector<double> diag;
  std::vector<double> offdiag_sq;
};

// Symmetric form of a matrix whose products lower[i+1]*upper[i] are all
// positive (a diagonal similarity transform).
SymmetricTridiagonal symmetrize(const Tridiagonal& a);

// Number of eigenvalues strictly less than x.
std::size_t sturm_count(const SymmetricTridiagonal& s, double x);

// k-th smallest eigenvalue (0-based) by bisection to absolute width tol.
double eigenvalue_bisect(const SymmetricTridiagonal& s, std::size_t k, double tol = 0.0);

// Diagonal of the inverse of a symmetric positive definite tridiagonal matrix
// given by diag and off-diagonal entries (not squared).
std::vector<double> inverse_diagonal(std::span<const double> diag,
                                     std::span<const double> offdiag);

}  // namespace yflow
