#include "yflow/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace yflow::kernels {
namespace {

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

inline double hmin(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::min(std::min(lanes[0], lanes[1]), std::min(lanes[2], lanes[3]));
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void tridiag_matvec(const double* lower, const double* diag, const double* upper,
                    const double* x, double* y, std::size_t n) {
  if (n < 2) {
    if (n == 1) y[0] = diag[0] * x[0];
    return;
  }
  y[0] = diag[0] * x[0] + upper[0] * x[1];
  std::size_t i = 1;
  for (; i + 4 < n; i += 4) {
    __m256d a = _mm256_mul_pd(_mm256_loadu_pd(lower + i), _mm256_loadu_pd(x + i - 1));
    __m256d b = _mm256_mul_pd(_mm256_loadu_pd(diag + i), _mm256_loadu_pd(x + i));
    __m256d c = _mm256_mul_pd(_mm256_loadu_pd(upper + i), _mm256_loadu_pd(x + i + 1));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_add_pd(a, b), c));
  }
  for (; i + 1 < n; ++i) {
    y[i] = (lower[i] * x[i - 1] + diag[i] * x[i]) + upper[i] * x[i + 1];
  }
  y[n - 1] = lower[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
}

void axpby(double a, const double* x, double b, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ax = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    __m256d by = _mm256_mul_pd(vb, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(ax, by));
  }
  for (; i < n; ++i) y[i] = a * x[i] + b * y[i];
}

void add_scaled(const double* x, double step, const double* dx, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(step);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d sdx = _mm256_mul_pd(vs, _mm256_loadu_pd(dx + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), sdx));
  }
  for (; i < n; ++i) out[i] = x[i] + step * dx[i];
}

void int_pow(const double* x, unsigned k, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d result = _mm256_set1_pd(1.0);
    __m256d base = _mm256_loadu_pd(x + i);
    unsigned e = k;
    while (e != 0) {
      if (e & 1u) result = _mm256_mul_pd(result, base);
      e >>= 1u;
      if (e != 0) base = _mm256_mul_pd(base, base);
    }
    _mm256_storeu_pd(out + i, result);
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
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

double max_abs(const double* x, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(x + i)));
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i]));
  return r;
}

double max_abs_diff(const double* x, const double* y, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    m = _mm256_max_pd(m, abs_pd(d));
  }
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, std::fabs(x[i] - y[i]));
  return r;
}

double min_value(const double* x, std::size_t n) {
  __m256d m = _mm256_set1_pd(INFINITY);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_min_pd(m, _mm256_loadu_pd(x + i));
  double r = hmin(m);
  for (; i < n; ++i) r = std::min(r, x[i]);
  return r;
}

double max_value(const double* x, std::size_t n) {
  __m256d m = _mm256_set1_pd(-INFINITY);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(x + i));
  double r = hmax(m);
  for (; i < n; ++i) r = std::max(r, x[i]);
  return r;
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s = _mm256_add_pd(s, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double r = hsum(s);
  for (; i < n; ++i) r += x[i] * y[i];
  return r;
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wx = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
    s = _mm256_add_pd(s, _mm256_mul_pd(wx, _mm256_loadu_pd(y + i)));
  }
  double r = hsum(s);
  for (; i < n; ++i) r += w[i] * x[i] * y[i];
  return r;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",       tridiag_matvec, axpby,     add_scaled, int_pow,      multiply, max_abs,
      max_abs_diff, min_value,      max_value, dot,        weighted_dot,
  };
  return table;
}

}  // namespace yflow::kernels
