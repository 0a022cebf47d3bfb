#include "pjmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pjmp/error.hpp"

namespace pjmp {

double IntensitySpec::operator()(double x) const {
  if (family == Family::Affine) return floor + slope * x;
  const std::size_t k = breakpoints.size();
  if (x <= breakpoints.front()) return values.front();
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - breakpoints.begin());
  if (hi >= k) hi = k - 1;  // extrapolate along the last segment
  const std::size_t lo = hi - 1;
  const double w = (x - breakpoints[lo]) / (breakpoints[hi] - breakpoints[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

std::size_t StateHash::operator()(const State& s) const noexcept {
  // FNV-1a over the tick words
  std::uint64_t h = 1469598103934665603ULL;
  for (std::int64_t v : s.ticks) {
    auto u = static_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (u >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return static_cast<std::size_t>(h);
}

std::vector<double> NeuronModel::potentials(const State& x) const {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = potential(x, i);
  return out;
}

State NeuronModel::make_state(std::span<const double> potentials) const {
  if (potentials.size() != n_) {
    throw Error(ErrorCode::InvalidState, "expected " + std::to_string(n_) + " potentials, got " +
                                             std::to_string(potentials.size()));
  }
  State s;
  s.ticks.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double v = potentials[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::InvalidState, "potential " + std::to_string(i) + " is negative or not finite");
    }
    const auto t = static_cast<std::int64_t>(std::llround(v / quantum()));
    if (t > ceiling_ticks_) {
      throw Error(ErrorCode::InvalidState, "potential " + std::to_string(i) + " exceeds the ceiling");
    }
    s.ticks.push_back(t);
  }
  return s;
}

namespace {

void check_intensity(const IntensitySpec& phi, double m) {
  if (!(phi.declared_c > 0.0) || !std::isfinite(phi.declared_c)) {
    throw Error(ErrorCode::InvalidIntensity, "declared c must be positive");
  }
  if (!(phi.declared_delta > 0.0)) {
    throw Error(ErrorCode::NonPositiveDelta, "declared delta must be positive");
  }

  // Points where phi(x) - c x can attain its minimum on [0, m].
  std::vector<double> probes{0.0, m};
  if (phi.family == IntensitySpec::Family::Affine) {
    if (!std::isfinite(phi.floor) || !std::isfinite(phi.slope) || phi.slope < 0.0) {
      throw Error(ErrorCode::InvalidIntensity, "affine slope must be finite and non-negative");
    }
    if (!(phi.floor > 0.0)) throw Error(ErrorCode::NonPositiveDelta, "affine floor a must be positive");
  } else {
    const auto& bp = phi.breakpoints;
    const auto& val = phi.values;
    if (bp.size() < 2 || bp.size() != val.size()) {
      throw Error(ErrorCode::InvalidIntensity, "table needs at least two (breakpoint, value) pairs");
    }
    if (bp.front() != 0.0) throw Error(ErrorCode::InvalidIntensity, "table must start at breakpoint 0");
    for (std::size_t k = 1; k < bp.size(); ++k) {
      if (!(bp[k] > bp[k - 1])) throw Error(ErrorCode::InvalidIntensity, "breakpoints must be strictly increasing");
      if (val[k] < val[k - 1]) throw Error(ErrorCode::InvalidIntensity, "table values must be increasing");
    }
    if (!(val.front() > 0.0)) throw Error(ErrorCode::NonPositiveDelta, "table values must be positive");
    for (double b : bp) {
      if (b < m) probes.push_back(b);
    }
  }

  // phi is increasing, so its minimum on [0, m] is phi(0).
  if (phi(0.0) < phi.declared_delta) {
    throw Error(ErrorCode::NonPositiveDelta,
                "phi(0) = " + std::to_string(phi(0.0)) + " is below the declared delta");
  }
  for (double x : probes) {
    if (!(phi(x) > phi.declared_c * x)) {
      throw Error(ErrorCode::IntensityBelowLinearBound,
                  "phi(" + std::to_string(x) + ") <= c * x with c = " + std::to_string(phi.declared_c));
    }
  }
}

}  // namespace

NeuronModel validate_model(const ModelConfig& raw) {
  if (!(raw.ceiling > 0.0) || !std::isfinite(raw.ceiling)) {
    throw Error(ErrorCode::NonPositiveCeiling, "ceiling m must be positive and finite");
  }
  if (raw.n_neurons == 0) throw Error(ErrorCode::InvalidModel, "network needs at least one neuron");
  if (!(raw.potential_quantum > 0.0) || raw.ceiling / raw.potential_quantum > 9.0e15) {
    throw Error(ErrorCode::InvalidModel, "potential_quantum must be positive and resolve m on a 53-bit grid");
  }
  const std::size_t n = raw.n_neurons;
  if (raw.weights.size() != n) {
    throw Error(ErrorCode::InvalidModel, "weights must have " + std::to_string(n) + " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (raw.weights[i].size() != n) {
      throw Error(ErrorCode::InvalidModel, "weights row " + std::to_string(i) + " must have " +
                                               std::to_string(n) + " entries");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double w = raw.weights[i][j];
      if (!std::isfinite(w) || w < 0.0) {
        throw Error(ErrorCode::NegativeWeight,
                    "weights[" + std::to_string(i) + "][" + std::to_string(j) + "] must be finite and >= 0");
      }
      if (i == j && w != 0.0) {
        throw Error(ErrorCode::NonzeroDiagonal, "weights[" + std::to_string(i) + "][" + std::to_string(i) + "] must be 0");
      }
    }
  }
  check_intensity(raw.intensity, raw.ceiling);

  NeuronModel model;
  model.config_ = raw;
  model.n_ = n;
  model.ceiling_ticks_ = std::llround(raw.ceiling / raw.potential_quantum);
  model.weight_ticks_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      model.weight_ticks_[i * n + j] = std::llround(raw.weights[i][j] / raw.potential_quantum);
    }
  }
  return model;
}

State apply_jump(const NeuronModel& model, const State& x, std::size_t i) {
  const std::size_t n = model.size();
  if (i >= n) {
    throw Error(ErrorCode::IndexOutOfRange, "neuron " + std::to_string(i) + " out of range for N = " + std::to_string(n));
  }
  State y = x;
  const std::int64_t m = model.ceiling_ticks();
  const bool receiver = model.clip_rule() == ClipRule::Receiver;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const std::int64_t w = model.weight_ticks(i, j);
    const std::int64_t probe = receiver ? x.ticks[j] : x.ticks[i];
    if (probe + w <= m) y.ticks[j] = x.ticks[j] + w;
  }
  y.ticks[i] = 0;
  return y;
}

std::vector<double> intensities(const NeuronModel& model, const State& x) {
  std::vector<double> rates(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) rates[i] = model.phi(model.potential(x, i));
  return rates;
}

double total_intensity(const NeuronModel& model, const State& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) s += model.phi(model.potential(x, i));
  return s;
}

double generator_apply(const NeuronModel& model, const StateFunction& f, const State& x) {
  const double fx = f(x);
  double s = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    s += model.phi(model.potential(x, i)) * (f(apply_jump(model, x, i)) - fx);
  }
  return s;
}

double carre_du_champ(const NeuronModel& model, const StateFunction& f, const State& x) {
  const double fx = f(x);
  double s = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const double d = f(apply_jump(model, x, i)) - fx;
    s += model.phi(model.potential(x, i)) * d * d;
  }
  return 0.5 * s;
}

std::string to_string(ClipRule rule) { return rule == ClipRule::Receiver ? "receiver" : "sender"; }

}  // namespace pjmp
