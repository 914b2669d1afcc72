// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check.

#include <immintrin.h>

#include "hjr/kernels.hpp"

namespace hjr::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_scaled(double* out, const double* x, double alpha, const double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + alpha * y[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t i = 0;
  // Four output lanes at a time, walking down all columns.
  for (; i + 4 <= rows; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < cols; ++j) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + j * rows + i), _mm256_set1_pd(x[j]), acc);
    }
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += a[j * rows + i] * x[j];
    y[i] = s;
  }
}

void ger(double alpha, const double* u, const double* v, double* a, std::size_t rows,
         std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) axpy(alpha * v[j], u, a + j * rows, rows);
}

void quad_rows(const double* rows, std::size_t count, std::size_t n, const double* s, double* out,
               double* scratch) {
  for (std::size_t r = 0; r < count; ++r) {
    const double* row = rows + r * n;
    gemv(s, n, n, row, scratch);
    out[r] = dot(row, scratch, n);
  }
}

}  // namespace

const Table kTable{Isa::Avx2, &dot, &axpy, &add_scaled, &gemv, &ger, &quad_rows};

}  // namespace hjr::kernels::avx2
