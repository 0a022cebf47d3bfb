#pragma once

// Data-parallel inner loops of the exact engine. Every kernel has a scalar
// reference implementation; vector variants are picked once at runtime from
// the CPU's capabilities (override with PJMP_SIMD=scalar|avx2|neon).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pjmp::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

/// Compressed sparse row matrix, column indices 32-bit so they can feed gathers.
struct CsrView {
  std::span<const std::size_t> row_ptr;  // rows + 1 entries
  std::span<const std::uint32_t> cols;
  std::span<const double> values;

  std::size_t rows() const noexcept { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = A x
  void (*spmv)(const std::size_t* row_ptr, const std::uint32_t* cols, const double* values,
               std::size_t rows, const double* x, double* y);
};

namespace scalar {
const KernelTable& table();
}
#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
const KernelTable& table();
}
#endif
#if defined(__aarch64__)
namespace neon {
const KernelTable& table();
}
#endif

/// Kernels for `isa`, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* table_for(Isa isa);
std::vector<Isa> available_isas();

/// The table selected for this process (resolved on first call).
const KernelTable& active();

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void spmv(const CsrView& a, std::span<const double> x, std::span<double> y);

}  // namespace pjmp::simd
