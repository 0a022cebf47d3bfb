#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "pjmp/montecarlo.hpp"

using namespace pjmp;

namespace {

struct Setup {
  NeuronModel model;
  StateSpace space;
  RateMatrix q;
  TransitionKernel kernel;
};

Setup setup(const ModelConfig& cfg, std::vector<double> x0) {
  NeuronModel m = validate_model(cfg);
  StateSpace s = enumerate_reachable(m, m.make_state(x0));
  RateMatrix q = build_rate_matrix(s);
  TransitionKernel k(q);
  return {std::move(m), std::move(s), std::move(q), std::move(k)};
}

// Independent sampler by thinning: candidate events at rate N phi(m), neuron
// drawn uniformly, accepted with probability phi(x_i) / phi(m).
std::size_t thinning_final(const StateSpace& s, double phi_max, std::size_t x0, double t, std::mt19937_64& gen) {
  const std::size_t n = s.n_neurons();
  std::exponential_distribution<double> hold(static_cast<double>(n) * phi_max);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t u = x0;
  double clock = hold(gen);
  while (clock <= t) {
    const std::size_t i = pick(gen);
    if (u01(gen) * phi_max < s.rate(u, i)) u = s.target(u, i);
    clock += hold(gen);
  }
  return u;
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox streams") {
  PhiloxStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int k = 0; k < 100; ++k) {
    const std::uint32_t va = a.next_u32();
    CHECK(va == b.next_u32());
    differs |= va != c.next_u32();
  }
  CHECK(differs);
  PhiloxStream s(1, 0);
  double sum = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));
  CHECK(s.exponential(2.0) > 0.0);
}

TEST_CASE("sample paths follow the jump maps") {
  const NeuronModel m = fixtures::ring();
  PhiloxStream rng(3, 0);
  const State x0 = fixtures::at(m, {0.0, 0.25, 0.5});
  const PathSample p = sample_path(m, x0, 5.0, rng);
  REQUIRE(!p.jump_times.empty());
  State cur = x0;
  double last = 0.0;
  for (std::size_t k = 0; k < p.jump_times.size(); ++k) {
    CHECK(p.jump_times[k] > last);
    CHECK(p.jump_times[k] <= 5.0);
    last = p.jump_times[k];
    cur = apply_jump(m, cur, p.spiking_neuron[k]);
    CHECK(cur == p.states[k]);
  }
  CHECK(p.state_at(0.0) == x0);
  CHECK(p.state_at(5.0) == p.states.back());
  CHECK(p.state_at(p.jump_times[0]) == p.states[0]);

  std::istringstream csv(path_to_csv(m, p));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == p.jump_times.size() + 2);  // header + initial row
}

TEST_CASE("estimates are reproducible and worker-independent") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  const std::vector<double> f{0.0, 1.0, -1.0, 2.0, 0.5};
  MonteCarloOptions one{5000, 17, 1};
  MonteCarloOptions many{5000, 17, 8};
  const Estimate a = estimate_expectation(p.space, f, 1.0, 0, one);
  const Estimate b = estimate_expectation(p.space, f, 1.0, 0, many);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(sample_final_indices(p.space, 0, 2.0, one) == sample_final_indices(p.space, 0, 2.0, many));
  const Estimate v1 = estimate_variance(p.space, f, 1.0, 0, one);
  const Estimate v8 = estimate_variance(p.space, f, 1.0, 0, many);
  CHECK(v1.mean == v8.mean);
  MonteCarloOptions other = one;
  other.seed = 18;
  CHECK(estimate_expectation(p.space, f, 1.0, 0, other).mean != a.mean);
}

TEST_CASE("constant observable") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  const std::vector<double> f(5, 3.5);
  MonteCarloOptions opts{1000, 1, 2};
  const Estimate e = estimate_expectation(p.space, f, 2.0, 0, opts);
  CHECK(e.mean == 3.5);
  CHECK(e.std_error == 0.0);
  const Estimate v = estimate_variance(p.space, f, 2.0, 0, opts);
  CHECK(v.mean == 0.0);
  CHECK(fixtures::code_of([&] { estimate_expectation(p.space, f, 2.0, 0, MonteCarloOptions{1, 1, 1}); }) ==
        ErrorCode::InvalidTolerance);
}

TEST_CASE("estimators on fixed samples") {
  const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
  const Estimate m = mean_estimate(x, 0);
  CHECK(m.mean == doctest::Approx(3.5));
  // sample sd = sqrt(7), se = sqrt(7 / 4)
  CHECK(m.std_error == doctest::Approx(std::sqrt(7.0 / 4.0)));
  const Estimate v = variance_estimate(x, 0);
  CHECK(v.mean == doctest::Approx(7.0));
  CHECK(v.std_error > 0.0);
}

TEST_CASE("embedded-chain and thinning samplers agree with the exact law") {
  const Setup p = setup(fixtures::ring_config(), {0, 0, 0});
  const double t = 1.3;
  const auto exact = p.kernel.distribution(0, t);
  MonteCarloOptions opts{40000, 99, 4};
  const auto idx = sample_final_indices(p.space, 0, t, opts);
  const auto counts = histogram(idx, p.space.size());
  const ChiSquareResult chi = chi_square_test(counts, exact.probabilities);
  CHECK(chi.p_value > 1e-3);
  CHECK(chi.bins >= 2);

  std::mt19937_64 gen(5);
  std::vector<std::size_t> thin(p.space.size(), 0);
  for (int k = 0; k < 40000; ++k) ++thin[thinning_final(p.space, p.model.phi_max(), 0, t, gen)];
  CHECK(chi_square_test(thin, exact.probabilities).p_value > 1e-3);

  // model-level estimator on the same observable
  const std::vector<double> f = fixtures::normal_vector(p.space.size(), 2);
  const StateFunction g = [&](const State& x) { return f[*p.space.index_of(x)]; };
  const Estimate e = estimate_expectation(p.model, g, t, p.space.state(0), MonteCarloOptions{20000, 4, 4});
  CHECK(std::abs(e.mean - exact.expectation(f)) <= 4.0 * e.std_error);
}

TEST_CASE("chi-square detects a wrong law") {
  std::vector<std::size_t> counts{500, 500, 0};
  const std::vector<double> expected{0.2, 0.4, 0.4};
  const ChiSquareResult r = chi_square_test(counts, expected);
  CHECK(r.p_value < 1e-6);
}
