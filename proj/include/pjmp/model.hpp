#pragma once

// Network of N neurons with degenerate jumps: when neuron i spikes its
// potential resets to 0 and every other neuron j receives W[i][j], unless the
// increment would carry it above the ceiling m.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pjmp {

/// Which coordinate the ceiling test looks at when neuron i spikes.
/// Receiver: x[j] + W[i][j] <= m (keeps the process in [0, m]^N).
/// Sender:   x[i] + W[i][j] <= m (the literal printed condition).
enum class ClipRule { Receiver, Sender };

struct IntensitySpec {
  enum class Family { Affine, Table };

  Family family = Family::Affine;
  // affine: phi(x) = floor + slope * x
  double floor = 1.0;
  double slope = 0.0;
  // table: piecewise linear through (breakpoints[k], values[k]); extrapolated
  // beyond the last breakpoint with the last segment's slope
  std::vector<double> breakpoints;
  std::vector<double> values;
  // phi >= declared_delta and phi(x) > declared_c * x on [0, m]
  double declared_delta = 1.0;
  double declared_c = 1.0;

  double operator()(double x) const;
};

/// Unvalidated model description, as read from a config file.
struct ModelConfig {
  std::size_t n_neurons = 0;
  std::vector<std::vector<double>> weights;
  IntensitySpec intensity;
  double ceiling = 1.0;
  ClipRule clip_rule = ClipRule::Receiver;
  // potentials and weights live on the integer grid quantum * Z
  double potential_quantum = 1e-9;
};

/// Membrane potentials in grid ticks. Exact equality makes state identity
/// under enumeration bit-exact.
struct State {
  std::vector<std::int64_t> ticks;

  std::size_t size() const noexcept { return ticks.size(); }
  bool operator==(const State&) const = default;
};

struct StateHash {
  std::size_t operator()(const State& s) const noexcept;
};

class NeuronModel {
 public:
  std::size_t size() const noexcept { return n_; }
  double weight(std::size_t from, std::size_t to) const { return config_.weights[from][to]; }
  std::int64_t weight_ticks(std::size_t from, std::size_t to) const { return weight_ticks_[from * n_ + to]; }
  const IntensitySpec& intensity() const noexcept { return config_.intensity; }
  double ceiling() const noexcept { return config_.ceiling; }
  std::int64_t ceiling_ticks() const noexcept { return ceiling_ticks_; }
  ClipRule clip_rule() const noexcept { return config_.clip_rule; }
  double quantum() const noexcept { return config_.potential_quantum; }
  double delta() const noexcept { return config_.intensity.declared_delta; }
  const ModelConfig& config() const noexcept { return config_; }

  double phi(double potential) const { return config_.intensity(potential); }
  /// phi(m), the largest single-neuron rate on [0, m].
  double phi_max() const { return phi(config_.ceiling); }

  double potential(const State& x, std::size_t i) const { return static_cast<double>(x.ticks[i]) * quantum(); }
  std::vector<double> potentials(const State& x) const;

  /// Quantises potentials onto the grid; throws InvalidState when a value lies
  /// outside [0, m] or the length is not N.
  State make_state(std::span<const double> potentials) const;

 private:
  friend NeuronModel validate_model(const ModelConfig& raw);

  ModelConfig config_;
  std::size_t n_ = 0;
  std::vector<std::int64_t> weight_ticks_;
  std::int64_t ceiling_ticks_ = 0;
};

NeuronModel validate_model(const ModelConfig& raw);

/// Delta_i(x). Throws IndexOutOfRange for i >= N.
State apply_jump(const NeuronModel& model, const State& x, std::size_t i);

std::vector<double> intensities(const NeuronModel& model, const State& x);
/// phi-bar(x) = sum_j phi(x_j).
double total_intensity(const NeuronModel& model, const State& x);

/// A test function on states. May throw Error{ObservableUndefined}.
using StateFunction = std::function<double(const State&)>;

/// L f(x) = sum_i phi(x_i) (f(Delta_i x) - f(x)).
double generator_apply(const NeuronModel& model, const StateFunction& f, const State& x);
/// Gamma(f, f)(x) = 1/2 sum_i phi(x_i) (f(Delta_i x) - f(x))^2.
double carre_du_champ(const NeuronModel& model, const StateFunction& f, const State& x);

std::string to_string(ClipRule rule);

}  // namespace pjmp
