#include "yflow/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "yflow/errors.hpp"
#include "yflow/kernels.hpp"

namespace yflow {

void Tridiagonal::apply(std::span<const double> x, std::span<double> y) const {
  kernels::tridiag_matvec(lower, diag, upper, x, y);
}

std::vector<double> Tridiagonal::apply(std::span<const double> x) const {
  std::vector<double> y(size());
  apply(x, y);
  return y;
}

Tridiagonal Tridiagonal::leading(std::size_t m) const {
  Tridiagonal t(m);
  std::copy_n(lower.begin(), m, t.lower.begin());
  std::copy_n(diag.begin(), m, t.diag.begin());
  std::copy_n(upper.begin(), m, t.upper.begin());
  if (m > 0) t.upper[m - 1] = 0.0;
  return t;
}

std::vector<double> solve(const Tridiagonal& a, std::span<const double> rhs) {
  const std::size_t n = a.size();
  std::vector<double> c(n), x(n);
  double pivot = a.diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverFailure("tridiagonal solve: zero pivot");
  c[0] = n > 1 ? a.upper[0] / pivot : 0.0;
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = a.diag[i] - a.lower[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SolverFailure("tridiagonal solve: zero pivot");
    }
    c[i] = i + 1 < n ? a.upper[i] / pivot : 0.0;
    x[i] = (rhs[i] - a.lower[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

SymmetricTridiagonal symmetrize(const Tridiagonal& a) {
  const std::size_t n = a.size();
  SymmetricTridiagonal s;
  s.diag = a.diag;
  s.offdiag_sq.resize(n > 0 ? n - 1 : 0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double p = a.upper[i] * a.lower[i + 1];
    if (!(p >= 0.0)) throw PreconditionViolation("symmetrize: off-diagonal product is negative");
    s.offdiag_sq[i] = p;
  }
  return s;
}

std::size_t sturm_count(const SymmetricTridiagonal& s, double x) {
  const std::size_t n = s.diag.size();
  constexpr double tiny = std::numeric_limits<double>::min();
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    q = s.diag[i] - x - (i > 0 ? s.offdiag_sq[i - 1] / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

double eigenvalue_bisect(const SymmetricTridiagonal& s, std::size_t k, double tol) {
  const std::size_t n = s.diag.size();
  if (k >= n) throw PreconditionViolation("eigenvalue_bisect: index out of range");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::sqrt(s.offdiag_sq[i - 1]);
    if (i + 1 < n) radius += std::sqrt(s.offdiag_sq[i]);
    lo = std::min(lo, s.diag[i] - radius);
    hi = std::max(hi, s.diag[i] + radius);
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= tol) break;
    if (sturm_count(s, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> inverse_diagonal(std::span<const double> diag,
                                     std::span<const double> offdiag) {
  const std::size_t n = diag.size();
  std::vector<double> fwd(n), bwd(n), out(n);
  fwd[0] = diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    fwd[i] = diag[i] - offdiag[i - 1] * offdiag[i - 1] / fwd[i - 1];
  }
  bwd[n - 1] = diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    bwd[i] = diag[i] - offdiag[i] * offdiag[i] / bwd[i + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d = fwd[i] + bwd[i] - diag[i];
    if (!(d > 0.0)) throw SolverFailure("inverse_diagonal: matrix is not positive definite");
    out[i] = 1.0 / d;
  }
  return out;
}

}  // namespace yflow
