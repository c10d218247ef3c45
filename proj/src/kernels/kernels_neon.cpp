#include "yflow/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace yflow::kernels {
namespace {

void tridiag_matvec(const double* lower, const double* diag, const double* upper,
                    const double* x, double* y, std::size_t n) {
  if (n < 2) {
    if (n == 1) y[0] = diag[0] * x[0];
    return;
  }
  y[0] = diag[0] * x[0] + upper[0] * x[1];
  std::size_t i = 1;
  for (; i + 2 < n; i += 2) {
    float64x2_t a = vmulq_f64(vld1q_f64(lower + i), vld1q_f64(x + i - 1));
    float64x2_t b = vmulq_f64(vld1q_f64(diag + i), vld1q_f64(x + i));
    float64x2_t c = vmulq_f64(vld1q_f64(upper + i), vld1q_f64(x + i + 1));
    vst1q_f64(y + i, vaddq_f64(vaddq_f64(a, b), c));
  }
  for (; i + 1 < n; ++i) {
    y[i] = (lower[i] * x[i - 1] + diag[i] * x[i]) + upper[i] * x[i + 1];
  }
  y[n - 1] = lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t vb = vdupq_n_f64(b);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t ax = vmulq_f64(va, vld1q_f64(x + i));
    float64x2_t by = vmulq_f64(vb, vld1q_f64(y + i));
    vst1q_f64(y + i, vaddq_f64(ax, by));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void add_scaled(const double* x, double step, const double* dx, double* out, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(step);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vmulq_f64(vs, vld1q_f64(dx + i))));
  }
  for (; i < n; ++i) out[i] = x[i] + step * dx[i];
}

void int_pow(const double* x, unsigned k, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t result = vdupq_n_f64(1.0);
    float64x2_t base = vld1q_f64(x + i);
    unsigned e = k;
    while (e != 0) {
      if (e & 1u) result = vmulq_f64(result, base);
      e >>= 1u;
      if (e != 0) base = vmulq_f64(base, base);
    }
    vst1q_f64(out + i, result);
  }
  for (; i < n; ++i) {
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
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

double max_abs(const double* x, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(x + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
  return r;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  float64x2_t m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vabdq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i] - y[i]));
  return r;
}

double min_value(const double* x, std::size_t n) {
  float64x2_t m = vdupq_n_f64(INFINITY);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vminq_f64(m, vld1q_f64(x + i));
  double r = vminvq_f64(m);
  for (; i < n; ++i) r = std::min(r, x[i]);
  return r;
}

double max_value(const double* x, std::size_t n) {
  float64x2_t m = vdupq_n_f64(-INFINITY);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) m = vmaxq_f64(m, vld1q_f64(x + i));
  double r = vmaxvq_f64(m);
  for (; i < n; ++i) r = std::max(r, x[i]);
  return r;
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  double r = vaddvq_f64(s);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t wx = vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i));
    s = vaddq_f64(s, vmulq_f64(wx, vld1q_f64(y + i)));
  }
  double r = vaddvq_f64(s);
  for (; i < n; ++i) r += w[i] * x[i] * y[i];
  return r;
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      "neon",       tridiag_matvec, axpby,     add_scaled, int_pow,      multiply, max_abs,
      max_abs_diff, min_value,      max_value, dot,        weighted_dot,
  };
  return table;
}

}  // namespace yflow::kernels
