#include "yflow/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace yflow::kernels {
namespace {

void tridiag_matvec(const double* lower, const double* diag, const double* upper,
                    const double* x, double* y, std::size_t n) {
  if (n == 0) return;
  if (n == 1) {
    y[0] = diag[0] * x[0];
    return;
  }
  y[0] = diag[0] * x[0] + upper[0] * x[1];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    y[i] = (lower[i] * x[i - 1] + diag[i] * x[i]) + upper[i] * x[i + 1];
  }
  y[n - 1] = lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void add_scaled(const double* x, double step, const double* dx, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + step * dx[i];
}

void int_pow(const double* x, unsigned k, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double result = 1.0;
    double base = x[i];
    unsigned e = k;
    while (e != 0) {
      if (e & 1u) result *= base;
      e >>= 1u;
      if (e != 0) base *= base;
    }
    out[i] = result;
  }
}

void multiply(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

double min_value(const double* x, std::size_t n) {
  double m = INFINITY;
  for (std::size_t i = 0; i < n; ++i) m = std::min(m, x[i]);
  return m;
}

double max_value(const double* x, std::size_t n) {
  double m = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar", tridiag_matvec, axpby,     add_scaled, int_pow,      multiply, max_abs,
      max_abs_diff, min_value,  max_value, dot,        weighted_dot,
  };
  return table;
}

}  // namespace yflow::kernels
