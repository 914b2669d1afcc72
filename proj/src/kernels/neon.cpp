// AArch64 NEON kernels (two doubles per vector). Only built on ARM64.

#include <arm_neon.h>

#include "hjr/kernels.hpp"

namespace hjr::kernels::neon {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add_scaled(double* out, const double* x, double alpha, const double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(x + i), va, vld1q_f64(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + alpha * y[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  std::size_t i = 0;
  for (; i + 2 <= rows; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < cols; ++j) {
      acc = vfmaq_f64(acc, vld1q_f64(a + j * rows + i), vdupq_n_f64(x[j]));
    }
    vst1q_f64(y + i, acc);
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

const Table kTable{Isa::Neon, &dot, &axpy, &add_scaled, &gemv, &ger, &quad_rows};

}  // namespace hjr::kernels::neon
