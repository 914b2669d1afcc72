#pragma once

// Dense double-precision kernels used by the Riccati integrator and the
// prediction code. Each kernel has a portable scalar reference version and
// vectorized variants (AVX2+FMA on x86-64, NEON on AArch64). The variant is
// picked once at startup from CPU features; HJR_ISA=scalar|avx2|neon in the
// environment forces a specific table (unavailable choices fall back to
// scalar).
//
// Matrix arguments are column-major, matching Eigen's default storage.

#include <cstddef>
#include <span>
#include <string_view>

namespace hjr::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct Table {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = x + alpha * y
  void (*add_scaled)(double* out, const double* x, double alpha, const double* y, std::size_t n);
  // y = A x, A is rows x cols column-major
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * u v^T, A is rows x cols column-major
  void (*ger)(double alpha, const double* u, const double* v, double* a, std::size_t rows,
              std::size_t cols);
  // out[i] = r_i^T S r_i for `count` rows r_i of length n stored row-major in
  // `rows`; S is n x n column-major; scratch must hold n doubles.
  void (*quad_rows)(const double* rows, std::size_t count, std::size_t n, const double* s,
                    double* out, double* scratch);
};

bool available(Isa isa);

/// Kernel table for a specific ISA. Throws hjr::Error if it is not
/// available on this machine or in this build.
const Table& table(Isa isa);

/// Table chosen at first use (CPU detection + HJR_ISA override).
const Table& active();

namespace scalar {
extern const Table kTable;
}
#if defined(HJR_HAVE_AVX2)
namespace avx2 {
extern const Table kTable;
}
#endif
#if defined(HJR_HAVE_NEON)
namespace neon {
extern const Table kTable;
}
#endif

// Span conveniences over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}

inline void add_scaled(std::span<double> out, std::span<const double> x, double alpha,
                       std::span<const double> y) {
  active().add_scaled(out.data(), x.data(), alpha, y.data(), out.size());
}

}  // namespace hjr::kernels
