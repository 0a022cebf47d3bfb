#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pjmp/simd/kernels.hpp"
#include "pjmp/statespace.hpp"

using namespace pjmp;

namespace {

void compare(const simd::KernelTable& ref, const simd::KernelTable& alt) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d;
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
    std::vector<double> x(n), y(n);
    for (double& v : x) v = d(gen);
    for (double& v : y) v = d(gen);
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) scale += std::abs(x[k] * y[k]);
    CHECK(std::abs(ref.dot(x.data(), y.data(), n) - alt.dot(x.data(), y.data(), n)) <= 1e-14 * (1.0 + scale));

    std::vector<double> a = y, b = y;
    ref.axpy(0.37, x.data(), a.data(), n);
    alt.axpy(0.37, x.data(), b.data(), n);
    for (std::size_t k = 0; k < n; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-15));
  }

  // spmv on a real generator (rows of varying length, including empty ones)
  const NeuronModel m = fixtures::ring();
  const StateSpace s = enumerate_reachable(m, fixtures::at(m, {0, 0, 0}));
  const RateMatrix q = build_rate_matrix(s);
  const auto x = fixtures::normal_vector(q.n, 3);
  std::vector<double> ya(q.n), yb(q.n);
  ref.spmv(q.row_ptr.data(), q.cols.data(), q.values.data(), q.n, x.data(), ya.data());
  alt.spmv(q.row_ptr.data(), q.cols.data(), q.values.data(), q.n, x.data(), yb.data());
  for (std::size_t k = 0; k < q.n; ++k) CHECK(ya[k] == doctest::Approx(yb[k]).epsilon(1e-14));
}

}  // namespace

TEST_CASE("every available ISA matches the scalar reference") {
  const simd::KernelTable& ref = simd::scalar::table();
  const auto isas = simd::available_isas();
  CHECK(std::find(isas.begin(), isas.end(), simd::Isa::Scalar) != isas.end());
  for (simd::Isa isa : isas) {
    CAPTURE(simd::to_string(isa));
    const simd::KernelTable* t = simd::table_for(isa);
    REQUIRE(t != nullptr);
    CHECK(t->isa == isa);
    compare(ref, *t);
  }
  MESSAGE("active kernels: " << simd::to_string(simd::active().isa));
}

TEST_CASE("span wrappers") {
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  CHECK(simd::dot(x, y) == 32.0);
  std::vector<double> z{1, 1, 1};
  simd::axpy(2.0, x, z);
  CHECK(z == std::vector<double>{3, 5, 7});
}
