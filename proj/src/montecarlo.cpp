#include "pjmp/montecarlo.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "pjmp/error.hpp"
#include "pjmp/parallel.hpp"

namespace pjmp {

namespace {

// Neumaier summation, fed in path order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::size_t pick(std::span<const double> weights, double total, double u) {
  double target = u * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    if (target < weights[i]) return i;
    target -= weights[i];
  }
  return weights.size() - 1;
}

void check_paths(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidTolerance, "n_paths must be at least 2");
}

template <class PathValue>
std::vector<double> per_path(std::size_t n_paths, std::uint64_t seed, std::size_t workers, PathValue&& value) {
  std::vector<double> out(n_paths);
  parallel_for(n_paths, workers, [&](std::size_t k) {
    PhiloxStream rng(seed, k);
    out[k] = value(rng);
  });
  return out;
}

}  // namespace

const State& PathSample::state_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  if (it == jump_times.begin()) return initial_state;
  return states[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

PathSample sample_path(const NeuronModel& model, const State& x0, double horizon, PhiloxStream& rng) {
  check_time(horizon);
  PathSample path;
  path.initial_state = x0;
  State x = x0;
  double now = 0.0;
  std::vector<double> rates(model.size());
  while (true) {
    double total = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
      rates[i] = model.phi(model.potential(x, i));
      total += rates[i];
    }
    now += rng.exponential(total);
    if (now > horizon) break;
    const std::size_t i = pick(rates, total, rng.uniform());
    x = apply_jump(model, x, i);
    path.jump_times.push_back(now);
    path.spiking_neuron.push_back(i);
    path.states.push_back(x);
  }
  return path;
}

std::size_t sample_final_index(const StateSpace& space, std::size_t x0, double t, PhiloxStream& rng) {
  const std::size_t n = space.n_neurons();
  std::size_t u = x0;
  double now = 0.0;
  while (true) {
    const double total = space.total_rate(u);
    now += rng.exponential(total);
    if (now > t) return u;
    double target = rng.uniform() * total;
    std::size_t i = 0;
    for (; i + 1 < n; ++i) {
      const double r = space.rate(u, i);
      if (target < r) break;
      target -= r;
    }
    u = space.target(u, i);
  }
}

std::vector<std::size_t> sample_final_indices(const StateSpace& space, std::size_t x0, double t,
                                              const MonteCarloOptions& options) {
  check_time(t);
  std::vector<std::size_t> out(options.n_paths);
  parallel_for(options.n_paths, options.workers, [&](std::size_t k) {
    PhiloxStream rng(options.seed, k);
    out[k] = sample_final_index(space, x0, t, rng);
  });
  return out;
}

Estimate mean_estimate(std::span<const double> values, std::uint64_t seed) {
  check_paths(values.size());
  const double n = static_cast<double>(values.size());
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double mean = s.value() / n;
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  const double var = ss.value() / (n - 1.0);
  return {mean, std::sqrt(var / n), values.size(), seed};
}

Estimate variance_estimate(std::span<const double> values, std::uint64_t seed) {
  check_paths(values.size());
  const double n = static_cast<double>(values.size());
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double mean = s.value() / n;
  CompensatedSum m2, m4;
  for (double v : values) {
    const double d = (v - mean) * (v - mean);
    m2.add(d);
    m4.add(d * d);
  }
  const double var = m2.value() / (n - 1.0);
  const double mu2 = m2.value() / n;
  const double mu4 = m4.value() / n;
  const double spread = std::max(0.0, mu4 - (n - 3.0) / (n - 1.0) * mu2 * mu2);
  return {var, std::sqrt(spread / n), values.size(), seed};
}

Estimate estimate_expectation(const StateSpace& space, std::span<const double> f, double t, std::size_t x0,
                              const MonteCarloOptions& options) {
  check_paths(options.n_paths);
  const auto idx = sample_final_indices(space, x0, t, options);
  std::vector<double> values(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) values[k] = f[idx[k]];
  return mean_estimate(values, options.seed);
}

Estimate estimate_variance(const StateSpace& space, std::span<const double> f, double t, std::size_t x0,
                           const MonteCarloOptions& options) {
  check_paths(options.n_paths);
  const auto idx = sample_final_indices(space, x0, t, options);
  std::vector<double> values(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) values[k] = f[idx[k]];
  return variance_estimate(values, options.seed);
}

Estimate estimate_expectation(const NeuronModel& model, const StateFunction& f, double t, const State& x0,
                              const MonteCarloOptions& options) {
  check_paths(options.n_paths);
  const auto values = per_path(options.n_paths, options.seed, options.workers, [&](PhiloxStream& rng) {
    return f(sample_path(model, x0, t, rng).state_at(t));
  });
  return mean_estimate(values, options.seed);
}

Estimate estimate_variance(const NeuronModel& model, const StateFunction& f, double t, const State& x0,
                           const MonteCarloOptions& options) {
  check_paths(options.n_paths);
  const auto values = per_path(options.n_paths, options.seed, options.workers, [&](PhiloxStream& rng) {
    return f(sample_path(model, x0, t, rng).state_at(t));
  });
  return variance_estimate(values, options.seed);
}

std::vector<std::size_t> histogram(std::span<const std::size_t> indices, std::size_t n_states) {
  std::vector<std::size_t> counts(n_states, 0);
  for (std::size_t u : indices) {
    if (u >= n_states) throw Error(ErrorCode::IndexOutOfRange, "histogram index past the state count");
    ++counts[u];
  }
  return counts;
}

ChiSquareResult chi_square_test(std::span<const std::size_t> counts, std::span<const double> expected) {
  if (counts.size() != expected.size()) {
    throw Error(ErrorCode::InvalidState, "counts and expected probabilities differ in length");
  }
  double n = 0.0;
  for (std::size_t c : counts) n += static_cast<double>(c);

  // Pool low-expectation cells (in index order) until each bin expects >= 5.
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double obs = 0.0, exp = 0.0;
  for (std::size_t u = 0; u < counts.size(); ++u) {
    obs += static_cast<double>(counts[u]);
    exp += expected[u] * n;
    if (exp >= 5.0) {
      bins.emplace_back(obs, exp);
      obs = exp = 0.0;
    }
  }
  if (exp > 0.0 || obs > 0.0) {
    if (bins.empty()) {
      bins.emplace_back(obs, exp);
    } else {
      bins.back().first += obs;
      bins.back().second += exp;
    }
  }

  ChiSquareResult r;
  r.bins = bins.size();
  for (const auto& [o, e] : bins) {
    if (e > 0.0) r.statistic += (o - e) * (o - e) / e;
  }
  if (bins.size() < 2) return r;
  r.dof = bins.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(r.dof));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

std::string path_to_csv(const NeuronModel& model, const PathSample& path) {
  std::ostringstream out;
  out.precision(17);
  out << "time,neuron";
  for (std::size_t i = 0; i < model.size(); ++i) out << ",x" << i;
  out << '\n';
  auto row = [&](double t, long neuron, const State& x) {
    out << t << ',' << neuron;
    for (double v : model.potentials(x)) out << ',' << v;
    out << '\n';
  };
  row(0.0, -1, path.initial_state);
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    row(path.jump_times[k], static_cast<long>(path.spiking_neuron[k]), path.states[k]);
  }
  return out.str();
}

}  // namespace pjmp
