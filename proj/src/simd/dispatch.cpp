#include <cassert>
#include <cstdlib>
#include <string>

#include "pjmp/simd/kernels.hpp"

namespace pjmp::simd {

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &scalar::table();
    case Isa::Avx2:
#if defined(PJMP_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2::table();
#endif
      return nullptr;
    case Isa::Neon:
#if defined(PJMP_HAVE_NEON)
      return &neon::table();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (table_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

namespace {

const KernelTable& resolve() {
  const char* env = std::getenv("PJMP_SIMD");
  const std::string wanted = env != nullptr ? env : "auto";
  for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (wanted == to_string(isa)) {
      if (const KernelTable* t = table_for(isa)) return *t;
    }
  }
  // auto, or a request this machine cannot honour
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (const KernelTable* t = table_for(isa)) return *t;
  }
  return scalar::table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& t = resolve();
  return t;
}

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(a, x.data(), y.data(), x.size());
}

void spmv(const CsrView& a, std::span<const double> x, std::span<double> y) {
  assert(y.size() == a.rows());
  active().spmv(a.row_ptr.data(), a.cols.data(), a.values.data(), a.rows(), x.data(), y.data());
}

}  // namespace pjmp::simd
