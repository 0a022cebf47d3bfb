#pragma once

// Philox4x32-10 counter-based generator. A stream is (key, counter prefix):
// every Monte Carlo path gets its own stream, so draws never depend on which
// worker ran the path.

#include <array>
#include <cstdint>

namespace pjmp {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One block of the bijection: 10 rounds of Philox4x32.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

class PhiloxStream {
 public:
  /// Keyed by `seed`; `stream` fills the upper half of the counter.
  PhiloxStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  double exponential(double rate);

 private:
  void refill();

  PhiloxKey key_{};
  PhiloxCounter counter_{};
  PhiloxCounter block_{};
  unsigned used_ = 4;
};

}  // namespace pjmp
