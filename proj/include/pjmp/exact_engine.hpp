#pragma once

// Exact computations on an enumerated state space: uniformized transition
// probabilities, semigroup action and time integrals, invariant measure,
// variances, closed-form jump probabilities.

#include <cstddef>
#include <span>
#include <vector>

#include "pjmp/model.hpp"
#include "pjmp/statespace.hpp"

namespace pjmp {

/// Test function on an enumerated space: one value per state index.
using Observable = std::vector<double>;

struct DistributionVector {
  std::vector<double> probabilities;

  std::size_t size() const noexcept { return probabilities.size(); }
  double operator[](std::size_t u) const { return probabilities[u]; }
  /// Clamps entries above -1e-12 to 0 and rescales to unit mass.
  static DistributionVector normalized(std::vector<double> p);
  double expectation(std::span<const double> f) const;
};

constexpr double kDefaultExpmTol = 1e-12;
constexpr double kDefaultSolveTol = 1e-10;
constexpr std::size_t kDefaultDenseLimit = 2000;

struct EngineOptions {
  double expm_tol = kDefaultExpmTol;
  double solve_tol = kDefaultSolveTol;
  std::size_t dense_limit = kDefaultDenseLimit;
};

/// exp(tQ) by uniformization: P = I + Q / Lambda, e^{tQ} = sum_k Pois(Lambda t; k) P^k.
/// Lambda = max(max_u |Q_uu|, rate_bound), so it can be pinned to N phi(m).
class TransitionKernel {
 public:
  explicit TransitionKernel(const RateMatrix& q, double rate_bound = 0.0);

  std::size_t size() const noexcept { return n_; }
  double uniformization_rate() const noexcept { return lambda_; }

  /// Row of P_t starting from `start`. `min_terms` forces at least that many
  /// Poisson terms so that small entries far from `start` keep their
  /// relative accuracy.
  DistributionVector distribution(std::size_t start, double t, double tol = kDefaultExpmTol,
                                  std::size_t min_terms = 0) const;
  /// mu P_t.
  DistributionVector propagate(std::span<const double> mu, double t, double tol = kDefaultExpmTol,
                               std::size_t min_terms = 0) const;
  /// (P_t g)(x) for every x.
  Observable apply(double t, std::span<const double> g, double tol = kDefaultExpmTol) const;
  /// (int_0^t P_s g ds)(x) for every x.
  Observable integrate(double t, std::span<const double> g, double tol = kDefaultExpmTol) const;
  /// Dense row-major P_t.
  std::vector<double> matrix(double t, double tol = kDefaultExpmTol, std::size_t min_terms = 0) const;

 private:
  simd::CsrView forward() const { return {row_ptr_, cols_, vals_}; }
  simd::CsrView backward() const { return {t_row_ptr_, t_cols_, t_vals_}; }

  std::size_t n_ = 0;
  double lambda_ = 0.0;
  // P and its transpose, diagonal included
  std::vector<std::size_t> row_ptr_, t_row_ptr_;
  std::vector<std::uint32_t> cols_, t_cols_;
  std::vector<double> vals_, t_vals_;
};

/// Dense row-major P_t = exp(tQ).
std::vector<double> transition_probabilities(const TransitionKernel& kernel, double t,
                                             double tol = kDefaultExpmTol);
/// P_t f(x).
double semigroup_apply(const TransitionKernel& kernel, double t, std::span<const double> f, std::size_t x,
                       double tol = kDefaultExpmTol);
/// int_0^t P_s g(x) ds.
double semigroup_time_integral(const TransitionKernel& kernel, double t, std::span<const double> g,
                               std::size_t x, double tol = kDefaultExpmTol);

/// Stationary law of one closed class (zero elsewhere): pi Q = 0, sum pi = 1.
DistributionVector invariant_measure(const RateMatrix& q, std::span<const std::size_t> closed_class,
                                     const EngineOptions& options = {});
/// pi Q, for residual checks.
std::vector<double> left_apply(const RateMatrix& q, std::span<const double> mu);

/// P_t f^2(x) - (P_t f(x))^2, clamped at 0 above -1e-12.
double variance_semigroup(const TransitionKernel& kernel, double t, std::span<const double> f, std::size_t x,
                          double tol = kDefaultExpmTol);
/// Same for every start state at once.
Observable variance_semigroup_all(const TransitionKernel& kernel, double t, std::span<const double> f,
                                  double tol = kDefaultExpmTol);
double variance_invariant(const DistributionVector& pi, std::span<const double> f);

/// L f on every state.
Observable apply_generator(const StateSpace& space, std::span<const double> f);
/// Gamma(f, f) on every state.
Observable carre_du_champ(const StateSpace& space, std::span<const double> f);

/// Rates that determine the no-jump / one-jump probabilities of a pair (x, i).
struct JumpRates {
  double spiking = 0.0;  // phi(x_i)
  double before = 0.0;   // phi-bar(x)
  double after = 0.0;    // phi-bar(Delta_i x)

  bool equal_branch() const noexcept;
};

JumpRates jump_rates(const NeuronModel& model, const State& x, std::size_t i);
JumpRates jump_rates(const StateSpace& space, std::size_t u, std::size_t i);

/// p_s(x) = exp(-s phi-bar(x)).
double no_jump_probability(const NeuronModel& model, double s, const State& x);
/// p_s^i(x): exactly one jump in [0, s], by neuron i.
double one_jump_probability(const JumpRates& rates, double s);
double one_jump_probability(const NeuronModel& model, double s, const State& x, std::size_t i);
/// Maximiser of s -> p_s^i(x).
double peak_time_t0(const JumpRates& rates);
double peak_time_t0(const NeuronModel& model, const State& x, std::size_t i);

/// Throws NonFiniteTime / InvalidTolerance.
void check_time(double t);
void check_tolerance(double tol);

}  // namespace pjmp
