#pragma once

// Data-parallel inner loops shared by the solvers.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2 on x86-64, NEON on aarch64) are selected once at startup from the
// CPU's capabilities; YFLOW_KERNELS=scalar|avx2|neon overrides the choice.
// Element-wise kernels evaluate the same operations in the same order as
// the scalar code and are therefore bitwise identical to it. Reductions
// that sum (dot products) reassociate and agree to a few ulps.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace yflow::kernels {

struct KernelTable {
  const char* name;

  // y[i] = lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1]
  // (lower[0] and upper[n-1] are ignored).
  void (*tridiag_matvec)(const double* lower, const double* diag, const double* upper,
                         const double* x, double* y, std::size_t n);

  // y[i] = a*x[i] + b*y[i]
  void (*axpby)(double a, const double* x, double b, double* y, std::size_t n);

  // out[i] = x[i] + step*dx[i]
  void (*add_scaled)(const double* x, double step, const double* dx, double* out,
                     std::size_t n);

  // out[i] = x[i]^k for integer k >= 1 (repeated squaring).
  void (*int_pow)(const double* x, unsigned k, double* out, std::size_t n);

  // out[i] = x[i]*y[i]
  void (*multiply)(const double* x, const double* y, double* out, std::size_t n);

  double (*max_abs)(const double* x, std::size_t n);
  double (*max_abs_diff)(const double* x, const double* y, std::size_t n);
  double (*min_value)(const double* x, std::size_t n);
  double (*max_value)(const double* x, std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i]*x[i]*y[i]
  double (*weighted_dot)(const double* w, const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(YFLOW_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(YFLOW_HAVE_NEON)
const KernelTable& neon_table();
#endif

// Tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

// The table selected for this process.
const KernelTable& active();

// Force a specific backend ("scalar", "avx2", "neon" or "auto"). Returns false
// when the backend is not compiled in or not supported by the CPU.
bool select(std::string_view name);

// Convenience wrappers over the active table.
inline void tridiag_matvec(std::span<const double> lower, std::span<const double> diag,
                           std::span<const double> upper, std::span<const double> x,
                           std::span<double> y) {
  active().tridiag_matvec(lower.data(), diag.data(), upper.data(), x.data(), y.data(),
                          diag.size());
}
inline void axpby(double a, std::span<const double> x, double b, std::span<double> y) {
  active().axpby(a, x.data(), b, y.data(), y.size());
}
inline void add_scaled(std::span<const double> x, double step, std::span<const double> dx,
                       std::span<double> out) {
  active().add_scaled(x.data(), step, dx.data(), out.data(), out.size());
}
inline void multiply(std::span<const double> x, std::span<const double> y,
                     std::span<double> out) {
  active().multiply(x.data(), y.data(), out.data(), out.size());
}
inline double max_abs(std::span<const double> x) { return active().max_abs(x.data(), x.size()); }
inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  return active().max_abs_diff(x.data(), y.data(), x.size());
}
inline double min_value(std::span<const double> x) {
  return active().min_value(x.data(), x.size());
}
inline double max_value(std::span<const double> x) {
  return active().max_value(x.data(), x.size());
}
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline double weighted_dot(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
  return active().weighted_dot(w.data(), x.data(), y.data(), x.size());
}

// out[i] = x[i]^p. Integer exponents go through int_pow (vectorized and
// exact up to rounding of the products); everything else uses std::pow.
void power(std::span<const double> x, double p, std::span<double> out);

}  // namespace yflow::kernels
