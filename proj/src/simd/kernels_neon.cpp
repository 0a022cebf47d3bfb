#include <arm_neon.h>

#include "pjmp/simd/kernels.hpp"

namespace pjmp::simd::neon {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + k), vld1q_f64(y + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + k + 2), vld1q_f64(y + k + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  for (; k < n; ++k) y[k] += a * x[k];
}

void spmv(const std::size_t* row_ptr, const std::uint32_t* cols, const double* values,
          std::size_t rows, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t k = row_ptr[r];
    const std::size_t end = row_ptr[r + 1];
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; k + 2 <= end; k += 2) {
      const double g[2] = {x[cols[k]], x[cols[k + 1]]};
      acc = vfmaq_f64(acc, vld1q_f64(values + k), vld1q_f64(g));
    }
    double s = vaddvq_f64(acc);
    for (; k < end; ++k) s += values[k] * x[cols[k]];
    y[r] = s;
  }
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::Neon, &dot, &axpy, &spmv};
  return t;
}

}  // namespace pjmp::simd::neon
