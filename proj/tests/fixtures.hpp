#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "pjmp/error.hpp"
#include "pjmp/model.hpp"

namespace fixtures {

inline pjmp::IntensitySpec affine(double a, double b, double delta, double c) {
  pjmp::IntensitySpec s;
  s.family = pjmp::IntensitySpec::Family::Affine;
  s.floor = a;
  s.slope = b;
  s.declared_delta = delta;
  s.declared_c = c;
  return s;
}

inline pjmp::ModelConfig single_neuron_config(double slope = 0.0) {
  pjmp::ModelConfig m;
  m.n_neurons = 1;
  m.weights = {{0.0}};
  m.intensity = affine(1.0, slope, 1.0, 0.5);
  m.ceiling = 1.0;
  return m;
}

// N=2, W = 0.5 both ways, phi(x) = 1 + x, m = 1
inline pjmp::ModelConfig pair_config() {
  pjmp::ModelConfig m;
  m.n_neurons = 2;
  m.weights = {{0.0, 0.5}, {0.5, 0.0}};
  m.intensity = affine(1.0, 1.0, 1.0, 0.5);
  m.ceiling = 1.0;
  return m;
}

inline pjmp::ModelConfig triple_config() {
  pjmp::ModelConfig m;
  m.n_neurons = 3;
  m.weights = {{0.0, 0.4, 0.0}, {0.0, 0.0, 0.3}, {0.0, 0.0, 0.0}};
  m.intensity = affine(0.5, 1.5, 0.5, 1.0);
  m.ceiling = 1.0;
  return m;
}

// N=3 ring with unequal weights, phi(x) = 0.8 + 2x on [0, 1].
inline pjmp::ModelConfig ring_config() {
  pjmp::ModelConfig m;
  m.n_neurons = 3;
  m.weights = {{0.0, 0.25, 0.5}, {0.5, 0.0, 0.25}, {0.25, 0.5, 0.0}};
  m.intensity = affine(0.8, 2.0, 0.8, 1.0);
  m.ceiling = 1.0;
  return m;
}

inline pjmp::NeuronModel pair() { return pjmp::validate_model(pair_config()); }
inline pjmp::NeuronModel single_neuron(double slope = 0.0) { return pjmp::validate_model(single_neuron_config(slope)); }
inline pjmp::NeuronModel triple() { return pjmp::validate_model(triple_config()); }
inline pjmp::NeuronModel ring() { return pjmp::validate_model(ring_config()); }

inline pjmp::State at(const pjmp::NeuronModel& m, std::vector<double> v) { return m.make_state(v); }

inline std::vector<double> normal_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  std::vector<double> out(n);
  for (double& v : out) v = d(gen);
  return out;
}

// Error code thrown by `fn`, or nullopt when it returns normally.
template <class Fn>
std::optional<pjmp::ErrorCode> code_of(Fn&& fn) {
  try {
    fn();
  } catch (const pjmp::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace fixtures
