#include "pjmp/poisson.hpp"

#include <cmath>

namespace pjmp {

namespace {

double log_pmf(double lambda, std::size_t k) {
  const double kd = static_cast<double>(k);
  return -lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0);
}

}  // namespace

PoissonWeights poisson_weights(double lambda, double tol, std::size_t min_terms) {
  PoissonWeights w;
  w.lambda = lambda;
  if (lambda <= 0.0) {
    w.pmf.assign(min_terms + 1, 0.0);
    w.pmf[0] = 1.0;
    w.tail_above.assign(min_terms + 1, 0.0);
    w.kept_mass = 1.0;
    return w;
  }

  std::size_t k = 0;
  for (;; ++k) {
    w.pmf.push_back(std::exp(log_pmf(lambda, k)));
    const double kd = static_cast<double>(k);
    if (k < min_terms || kd <= lambda) continue;
    const double r = lambda / (kd + 2.0);
    if (r >= 1.0) continue;
    const double next = std::exp(log_pmf(lambda, k + 1));
    // E[(N - k)^+] <= pmf(k+1) / (1 - r)^2, which also bounds Pr[N > k].
    if (next / ((1.0 - r) * (1.0 - r)) <= tol) break;
  }

  // Extend past K so the tails carry the remainder, then sum downwards.
  std::vector<double> extra;
  for (std::size_t j = k + 1;; ++j) {
    const double p = std::exp(log_pmf(lambda, j));
    extra.push_back(p);
    if (p < 1e-300 || (static_cast<double>(j) > lambda && p < 1e-30 * tol)) break;
  }
  double tail = 0.0;
  for (auto it = extra.rbegin(); it != extra.rend(); ++it) tail += *it;
  w.tail_above.assign(w.pmf.size(), 0.0);
  for (std::size_t j = w.pmf.size(); j-- > 0;) {
    w.tail_above[j] = tail;
    tail += w.pmf[j];
  }
  w.kept_mass = 0.0;
  for (double p : w.pmf) w.kept_mass += p;
  return w;
}

}  // namespace pjmp
