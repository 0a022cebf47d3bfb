#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pjmp/error.hpp"
#include "pjmp/model.hpp"

using namespace pjmp;

namespace {

ErrorCode code_of(const ModelConfig& cfg) {
  try {
    validate_model(cfg);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("model was accepted");
  return ErrorCode::InvalidModel;
}

}  // namespace

TEST_CASE("validate_model accepts the symmetric pair") {
  const NeuronModel m = fixtures::pair();
  CHECK(m.size() == 2);
  CHECK(m.weight(0, 1) == 0.5);
  CHECK(m.phi_max() == doctest::Approx(2.0));
}

TEST_CASE("validate_model rejects assumption violations") {
  ModelConfig cfg = fixtures::pair_config();
  cfg.intensity.floor = 0.0;
  CHECK(code_of(cfg) == ErrorCode::NonPositiveDelta);

  cfg = fixtures::pair_config();
  cfg.intensity = fixtures::affine(0.1, 0.0, 0.1, 1.0);
  CHECK(code_of(cfg) == ErrorCode::IntensityBelowLinearBound);

  cfg = fixtures::pair_config();
  cfg.weights[0][1] = -0.1;
  CHECK(code_of(cfg) == ErrorCode::NegativeWeight);

  cfg = fixtures::pair_config();
  cfg.weights[1][1] = 0.2;
  CHECK(code_of(cfg) == ErrorCode::NonzeroDiagonal);

  cfg = fixtures::pair_config();
  cfg.ceiling = 0.0;
  CHECK(code_of(cfg) == ErrorCode::NonPositiveCeiling);

  cfg = fixtures::pair_config();
  cfg.intensity.declared_delta = 0.0;
  CHECK(code_of(cfg) == ErrorCode::NonPositiveDelta);
}

TEST_CASE("table intensities") {
  ModelConfig cfg = fixtures::pair_config();
  cfg.intensity.family = IntensitySpec::Family::Table;
  cfg.intensity.breakpoints = {0.0, 0.5, 1.0};
  cfg.intensity.values = {1.0, 1.2, 2.0};
  const NeuronModel m = validate_model(cfg);
  CHECK(m.phi(0.25) == doctest::Approx(1.1));
  CHECK(m.phi(0.75) == doctest::Approx(1.6));
  CHECK(m.phi_max() == doctest::Approx(2.0));

  cfg.intensity.values = {1.0, 0.9, 2.0};
  CHECK(code_of(cfg) == ErrorCode::InvalidIntensity);
}

TEST_CASE("apply_jump resets the spiking neuron and clips per receiver") {
  ModelConfig cfg = fixtures::pair_config();
  cfg.weights = {{0.0, 0.5}, {0.0, 0.0}};
  const NeuronModel m = validate_model(cfg);
  CHECK(apply_jump(m, fixtures::at(m, {0.3, 0.2}), 0) == fixtures::at(m, {0.0, 0.7}));
  CHECK(apply_jump(m, fixtures::at(m, {0.3, 0.8}), 0) == fixtures::at(m, {0.0, 0.8}));
  CHECK_THROWS_AS(apply_jump(m, fixtures::at(m, {0.3, 0.8}), 2), Error);

  const NeuronModel one = fixtures::single_neuron();
  CHECK(apply_jump(one, fixtures::at(one, {0.7}), 0) == fixtures::at(one, {0.0}));
}

TEST_CASE("sender clip rule tests the spiking coordinate") {
  ModelConfig cfg = fixtures::pair_config();
  cfg.clip_rule = ClipRule::Sender;
  const NeuronModel m = validate_model(cfg);
  // x_0 + W = 0.3 + 0.5 <= 1, so the receiver is incremented past the ceiling
  const State up = apply_jump(m, fixtures::at(m, {0.3, 0.8}), 0);
  CHECK(up.ticks[0] == 0);
  CHECK(m.potential(up, 1) == doctest::Approx(1.3));
  // x_0 + W = 0.9 + 0.5 > 1 blocks the increment
  CHECK(apply_jump(m, fixtures::at(m, {0.9, 0.1}), 0) == fixtures::at(m, {0.0, 0.1}));
}

TEST_CASE("apply_jump invariants on a random walk") {
  const NeuronModel m = fixtures::ring();
  State x = fixtures::at(m, {0.5, 0.25, 1.0});
  for (std::size_t step = 0; step < 200; ++step) {
    const std::size_t i = (step * 7 + 3) % 3;
    const State y = apply_jump(m, x, i);
    CHECK(y.ticks[i] == 0);
    CHECK(apply_jump(m, y, i).ticks[i] == 0);
    for (std::int64_t v : y.ticks) {
      CHECK(v >= 0);
      CHECK(v <= m.ceiling_ticks());
    }
    x = y;
  }
}

TEST_CASE("make_state validates and quantises") {
  const NeuronModel m = fixtures::pair();
  CHECK_THROWS_AS(m.make_state(std::vector<double>{0.0}), Error);
  CHECK_THROWS_AS(m.make_state(std::vector<double>{0.0, 1.5}), Error);
  CHECK_THROWS_AS(m.make_state(std::vector<double>{-0.1, 0.0}), Error);
  // 0.1 + 0.2 lands on the same tick as 0.3
  CHECK(m.make_state(std::vector<double>{0.1 + 0.2, 0.0}) == m.make_state(std::vector<double>{0.3, 0.0}));
}

TEST_CASE("intensities and total intensity") {
  const NeuronModel m = fixtures::pair();
  const State x = fixtures::at(m, {0.3, 0.2});
  const auto rates = intensities(m, x);
  CHECK(rates[0] == doctest::Approx(1.3));
  CHECK(rates[1] == doctest::Approx(1.2));
  CHECK(total_intensity(m, x) == doctest::Approx(2.5));
  CHECK(total_intensity(m, fixtures::at(m, {1.0, 1.0})) == doctest::Approx(2.0 * m.phi_max()));

  const NeuronModel one = fixtures::single_neuron();
  CHECK(total_intensity(one, fixtures::at(one, {0.4})) == 1.0);
}

TEST_CASE("generator and carre du champ") {
  const NeuronModel one = fixtures::single_neuron();
  const StateFunction coord = [&](const State& s) { return one.potential(s, 0); };
  CHECK(generator_apply(one, coord, fixtures::at(one, {0.7})) == doctest::Approx(-0.7));
  CHECK(generator_apply(one, [](const State&) { return 3.0; }, fixtures::at(one, {0.7})) == 0.0);

  const NeuronModel lin = fixtures::single_neuron(1.0);
  const StateFunction lin_coord = [&](const State& s) { return lin.potential(s, 0); };
  CHECK(carre_du_champ(lin, lin_coord, fixtures::at(lin, {1.0})) == doctest::Approx(1.0));

  // brute-force sum over the jump neighbours and the algebraic Gamma identity
  const NeuronModel m = fixtures::ring();
  const auto values = fixtures::normal_vector(64, 5);
  const StateFunction f = [&](const State& s) {
    std::uint64_t h = 0;
    for (auto t : s.ticks) h = h * 1000003u + static_cast<std::uint64_t>(t / 1000);
    return values[h % values.size()];
  };
  const StateFunction f2 = [&](const State& s) { return f(s) * f(s); };
  State x = fixtures::at(m, {0.5, 0.25, 0.75});
  for (int step = 0; step < 20; ++step) {
    double brute = 0.0;
    for (std::size_t i = 0; i < 3; ++i) brute += m.phi(m.potential(x, i)) * (f(apply_jump(m, x, i)) - f(x));
    CHECK(generator_apply(m, f, x) == doctest::Approx(brute).epsilon(1e-14));
    const double gamma = carre_du_champ(m, f, x);
    CHECK(gamma >= 0.0);
    const double identity = 0.5 * (generator_apply(m, f2, x) - 2.0 * f(x) * generator_apply(m, f, x));
    CHECK(std::abs(gamma - identity) <= 1e-12 * std::max(1.0, gamma));
    x = apply_jump(m, x, static_cast<std::size_t>(step) % 3);
  }
}
