#include <immintrin.h>

#include "pjmp/simd/kernels.hpp"

namespace pjmp::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), acc1);
  }
  if (k + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    k += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void spmv(const std::size_t* row_ptr, const std::uint32_t* cols, const double* values,
          std::size_t rows, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t k = row_ptr[r];
    const std::size_t end = row_ptr[r + 1];
    double s = 0.0;
    if (end - k >= 4) {
      __m256d acc = _mm256_setzero_pd();
      for (; k + 4 <= end; k += 4) {
        const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
        const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(values + k), xv, acc);
      }
      s = hsum(acc);
    }
    for (; k < end; ++k) s += values[k] * x[cols[k]];
    y[r] = s;
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::Avx2, &dot, &axpy, &spmv};
  return t;
}

}  // namespace pjmp::simd::avx2
