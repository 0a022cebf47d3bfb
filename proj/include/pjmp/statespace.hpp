#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pjmp/model.hpp"
#include "pjmp/simd/kernels.hpp"

namespace pjmp {

/// Closed communicating classes of the jump digraph; their union is D-hat.
struct RecurrentClasses {
  std::vector<std::vector<std::size_t>> closed;  // ordered by smallest member
  std::vector<bool> mask;

  bool single() const noexcept { return closed.size() == 1; }
  /// The unique closed class; throws MultipleClosedClasses otherwise.
  const std::vector<std::size_t>& only() const;
};

/// Finite set of states reachable from x0 together with its jump graph.
class StateSpace {
 public:
  std::size_t size() const noexcept { return states_.size(); }
  std::size_t n_neurons() const noexcept { return n_neurons_; }

  const State& state(std::size_t u) const { return states_[u]; }
  std::span<const State> states() const noexcept { return states_; }
  std::optional<std::size_t> index_of(const State& x) const;

  /// Index of Delta_i(state u).
  std::size_t target(std::size_t u, std::size_t i) const { return targets_[u * n_neurons_ + i]; }
  /// phi(u_i), the rate at which neuron i spikes from state u.
  double rate(std::size_t u, std::size_t i) const { return rates_[u * n_neurons_ + i]; }
  double total_rate(std::size_t u) const { return total_rates_[u]; }

  const RecurrentClasses& recurrent() const noexcept { return recurrent_; }
  bool is_recurrent(std::size_t u) const { return recurrent_.mask[u]; }

 private:
  friend StateSpace enumerate_reachable(const NeuronModel&, const State&, std::size_t);

  std::size_t n_neurons_ = 0;
  std::vector<State> states_;
  std::unordered_map<State, std::size_t, StateHash> index_;
  std::vector<std::uint32_t> targets_;
  std::vector<double> rates_;
  std::vector<double> total_rates_;
  RecurrentClasses recurrent_;
};

constexpr std::size_t kDefaultMaxStates = 200000;

/// Breadth-first closure of {x0} under the jump maps (neuron index breaks
/// ties); index 0 is x0. Throws StateSpaceTooLarge past `max_states`.
StateSpace enumerate_reachable(const NeuronModel& model, const State& x0,
                               std::size_t max_states = kDefaultMaxStates);

/// Union of closed strongly connected components of a jump digraph given as
/// a flat (states x neurons) target table.
RecurrentClasses recurrent_class(std::span<const std::uint32_t> targets, std::size_t n_neurons);
RecurrentClasses recurrent_class(const StateSpace& space);

/// Jump-count distances from `source` (SIZE_MAX when unreachable).
std::vector<std::size_t> jump_distances(const StateSpace& space, std::size_t source);

/// Sparse CTMC generator. Off-diagonal entries in CSR form, diagonal separate.
struct RateMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> cols;
  std::vector<double> values;
  std::vector<double> diagonal;

  simd::CsrView off_diagonal() const { return {row_ptr, cols, values}; }
  double at(std::size_t u, std::size_t v) const;
  double max_exit_rate() const;
};

/// Q[u][v] = sum over i with Delta_i(u) = v != u of phi(u_i); self-jumps drop out.
RateMatrix build_rate_matrix(const StateSpace& space);

}  // namespace pjmp
