#pragma once

#include <cstddef>
#include <vector>

namespace pjmp {

/// Truncated Poisson(lambda) weights for uniformization.
struct PoissonWeights {
  double lambda = 0.0;
  std::vector<double> pmf;         // k = 0..K
  std::vector<double> tail_above;  // Pr[N >= k + 1], k = 0..K
  double kept_mass = 0.0;          // sum of pmf

  std::size_t terms() const noexcept { return pmf.size(); }
};

/// K is the smallest index >= min_terms, > lambda, for which both the dropped
/// mass Pr[N > K] and E[(N - K)^+] are below `tol`.
PoissonWeights poisson_weights(double lambda, double tol, std::size_t min_terms = 0);

}  // namespace pjmp
