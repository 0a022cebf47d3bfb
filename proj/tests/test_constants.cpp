#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "pjmp/constants.hpp"
#include "pjmp/spectral.hpp"

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
  TransitionKernel k(q, static_cast<double>(m.size()) * m.phi_max());
  return {std::move(m), std::move(s), std::move(q), std::move(k)};
}

}  // namespace

TEST_CASE("M and t0*") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  const MaxIntensity M = compute_M(p.model, p.space);
  CHECK(M.empirical == doctest::Approx(3.0));
  CHECK(M.coarse == doctest::Approx(4.0));
  // (0,0) -> (0,.5): total rates 2 then 2.5
  CHECK(compute_t0_star(p.space) == doctest::Approx(std::log(1.25) / 0.5).epsilon(1e-12));
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-3, 10.0, 8, {0.5, 0.5, -1.0, 2.0});
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g.back() == doctest::Approx(10.0));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] > g[k - 1]);
  CHECK(std::count(g.begin(), g.end(), 0.5) == 1);
  CHECK(std::count(g.begin(), g.end(), 2.0) == 1);
  CHECK(g.size() >= 33);
}

TEST_CASE("theta grid") {
  const auto g = theta_grid(1.0, 2.0, 5);
  CHECK(g == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0});
}

TEST_CASE("pair constants") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  ConstantsOptions opts;
  opts.extra_times = {0.5, 2.0};
  const ConstantsReport r = compute_constants(p.model, p.space, p.q, p.kernel, opts);
  CHECK(r.n_states == 5);
  CHECK(r.n_recurrent == 4);
  CHECK(r.min_pi == doctest::Approx(1.0 / 6.0));
  CHECK(r.C0 == doctest::Approx(12.0));
  CHECK(r.optimal_poincare == doctest::Approx(0.5));
  CHECK(r.spectral_gap == doctest::Approx(2.0));
  CHECK(r.theta.t1 == doctest::Approx(1.0 + r.t0_star));

  // the empirical values never exceed the constructive bounds
  CHECK(r.ratios.c1.empirical <= r.ratios.c1.paper_bound);
  CHECK(r.ratios.c2.empirical <= r.ratios.c2.paper_bound);
  CHECK(r.ratios.m_d.empirical <= r.ratios.m_d.paper_bound);
  CHECK(r.ratios.c2.paper_bound == doctest::Approx(std::exp(r.t0_star * 4.0)));
  CHECK_FALSE(r.ratios.grid_too_coarse);
  CHECK(r.warnings.empty());

  // extra times sit on the ratio grid
  CHECK(std::count(r.ratios.grid.begin(), r.ratios.grid.end(), 0.5) == 1);

  // theta certifies theta P_t(x, y) >= 1 on the grid it was built from
  CHECK(theta_grid_minimum(p.space, p.kernel, r.theta.theta, r.theta.t1, r.theta.window, opts.theta_points) >=
        1.0 - 1e-9);
  CHECK(r.theta.theta * r.min_pi >= 1.0 - 1e-12);

  CHECK(r.M_for(ConstantsVariant::Empirical) == doctest::Approx(3.0));
  CHECK(r.M_for(ConstantsVariant::Paper) == doctest::Approx(4.0));
  CHECK(r.C1_for(ConstantsVariant::Paper) == r.ratios.c1.paper_bound);
}

TEST_CASE("empirical C1 and C2 against direct evaluation") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  ConstantsOptions opts;
  const ConstantsReport r = compute_constants(p.model, p.space, p.q, p.kernel, opts);
  const auto& loc = r.ratios.c1_argmax;
  const std::size_t dx = p.space.target(loc.x, loc.neuron);
  const auto px = p.kernel.distribution(loc.x, loc.t, 1e-14, ratio_min_terms(p.space));
  const auto pd = p.kernel.distribution(dx, loc.t, 1e-14, ratio_min_terms(p.space));
  const double t0 = peak_time_t0(p.model, p.space.state(loc.x), loc.neuron);
  double sum = 0.0;
  for (std::size_t y = 0; y < p.space.size(); ++y) {
    if (loc.t <= t0 && y == dx) continue;
    if (pd[y] == 0.0) continue;
    sum += pd[y] * pd[y] / px[y];
  }
  CHECK(sum == doctest::Approx(r.ratios.c1.empirical).epsilon(1e-8));

  const auto& l2 = r.ratios.c2_argmax;
  const std::size_t d2 = p.space.target(l2.x, l2.neuron);
  const auto qx = p.kernel.distribution(l2.x, l2.t, 1e-14, ratio_min_terms(p.space));
  const auto qd = p.kernel.distribution(d2, l2.t, 1e-14, ratio_min_terms(p.space));
  CHECK(l2.t * qd[d2] / qx[d2] == doctest::Approx(r.ratios.c2.empirical).epsilon(1e-8));
}

TEST_CASE("constants are independent of worker count") {
  const Setup p = setup(fixtures::ring_config(), {0, 0, 0});
  ConstantsOptions one;
  ConstantsOptions many;
  many.workers = 6;
  const ConstantsReport a = compute_constants(p.model, p.space, p.q, p.kernel, one);
  const ConstantsReport b = compute_constants(p.model, p.space, p.q, p.kernel, many);
  CHECK(a.ratios.c1.empirical == b.ratios.c1.empirical);
  CHECK(a.ratios.c2.empirical == b.ratios.c2.empirical);
  CHECK(a.ratios.m_d.empirical == b.ratios.m_d.empirical);
  CHECK(a.theta.theta == b.theta.theta);
}

TEST_CASE("rate polynomials") {
  const Setup p = setup(fixtures::pair_config(), {0, 0});
  const ConstantsReport r = compute_constants(p.model, p.space, p.q, p.kernel);
  for (ConstantsVariant v : {ConstantsVariant::Empirical, ConstantsVariant::Paper}) {
    const RatePolynomials poly = assemble_rate_polynomials(r, v);
    const double M = poly.M(), C1 = poly.C1(), t0 = poly.t0(), th = poly.theta();
    for (double t : {0.1, 1.0, 7.0}) {
      const double c = 8 * t0 * M * (C1 + 1) + 2 * t * (1 + C1) * M;
      CHECK(poly.c(t) == doctest::Approx(c));
      CHECK(poly.alpha(t) == doctest::Approx(2 + 2 * M * t * c));
      CHECK(poly.gamma(t) == doctest::Approx(8 * th * th * M * M * 2 * t * t * t));
    }
    CHECK(poly.beta() == doctest::Approx(32 * t0 * t0 * M * M));
    CHECK(poly.C0() == doctest::Approx(12.0));
    CHECK(std::isnan(poly.zeta(0.0, 0.0)));
    CHECK(std::isnan(poly.xi(0.0, 0.0)));
    CHECK(poly.zeta(1.0, 1.0) == doctest::Approx(std::sqrt(6 * t0 / (1 + C1))));
    CHECK(poly.xi(2.0, 1.0) == doctest::Approx(std::cbrt(2.0 / (4 * th * th * M * M * 2))));
  }
}

TEST_CASE("single neuron constants") {
  const Setup p = setup(fixtures::single_neuron_config(), {1.0});
  const ConstantsReport r = compute_constants(p.model, p.space, p.q, p.kernel);
  CHECK(r.n_recurrent == 1);
  CHECK(r.min_pi == 1.0);
  CHECK(r.optimal_poincare == 0.0);
  CHECK(std::isfinite(r.ratios.c1.empirical));
  CHECK(std::isfinite(r.theta.theta));
}
