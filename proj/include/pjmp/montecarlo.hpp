#pragma once

// Embedded-chain simulation of the jump process and Monte Carlo estimators.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pjmp/exact_engine.hpp"
#include "pjmp/model.hpp"
#include "pjmp/philox.hpp"
#include "pjmp/statespace.hpp"

namespace pjmp {

struct PathSample {
  State initial_state;
  std::vector<double> jump_times;
  std::vector<std::size_t> spiking_neuron;
  std::vector<State> states;  // state right after each jump

  /// State at time t (the last jump at or before t).
  const State& state_at(double t) const;
};

/// Exponential(phi-bar(x)) holding times, spiking neuron i with probability
/// phi(x_i) / phi-bar(x), next state apply_jump(x, i). Jumps past `horizon` are dropped.
PathSample sample_path(const NeuronModel& model, const State& x0, double horizon, PhiloxStream& rng);

/// Same law on an enumerated space, returning only the index of X_t.
std::size_t sample_final_index(const StateSpace& space, std::size_t x0, double t, PhiloxStream& rng);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

struct MonteCarloOptions {
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// X_t index for every path, path k drawn from stream (seed, k).
std::vector<std::size_t> sample_final_indices(const StateSpace& space, std::size_t x0, double t,
                                              const MonteCarloOptions& options);

/// Sample mean of f(X_t) with its standard error.
Estimate estimate_expectation(const StateSpace& space, std::span<const double> f, double t, std::size_t x0,
                              const MonteCarloOptions& options);
/// Unbiased sample variance of f(X_t); the standard error uses the fourth central moment.
Estimate estimate_variance(const StateSpace& space, std::span<const double> f, double t, std::size_t x0,
                           const MonteCarloOptions& options);

/// Model-level variants that simulate from scratch without an enumerated space.
Estimate estimate_expectation(const NeuronModel& model, const StateFunction& f, double t, const State& x0,
                              const MonteCarloOptions& options);
Estimate estimate_variance(const NeuronModel& model, const StateFunction& f, double t, const State& x0,
                           const MonteCarloOptions& options);

Estimate mean_estimate(std::span<const double> values, std::uint64_t seed);
Estimate variance_estimate(std::span<const double> values, std::uint64_t seed);

std::vector<std::size_t> histogram(std::span<const std::size_t> indices, std::size_t n_states);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;  // after pooling cells with expected count < 5
};

/// Pearson goodness-of-fit of observed counts against `expected` probabilities.
ChiSquareResult chi_square_test(std::span<const std::size_t> counts, std::span<const double> expected);

/// time,neuron,x_0,...,x_{N-1} rows; the first row is the initial state with neuron -1.
std::string path_to_csv(const NeuronModel& model, const PathSample& path);

}  // namespace pjmp
