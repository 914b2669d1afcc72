// Portable reference kernels. Every vectorized variant is tested for
// equivalence against these.

#include "hjr/kernels.hpp"

namespace hjr::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add_scaled(double* out, const double* x, double alpha, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + alpha * y[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    const double xj = x[j];
    const double* col = a + j * rows;
    for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xj;
  }
}

void ger(double alpha, const double* u, const double* v, double* a, std::size_t rows,
         std::size_t cols) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double s = alpha * v[j];
    double* col = a + j * rows;
    for (std::size_t i = 0; i < rows; ++i) col[i] += s * u[i];
  }
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

const Table kTable{Isa::Scalar, &dot, &axpy, &add_scaled, &gemv, &ger, &quad_rows};

}  // namespace hjr::kernels::scalar
