// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "pjmp/app.hpp"
#include "pjmp/config.hpp"
#include "pjmp/montecarlo.hpp"
#include "pjmp/verify.hpp"

using namespace pjmp;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void run(const char* id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_s > 0.0 && secs > budget_s) {
    out.ok = false;
    out.detail += " (over the " + std::to_string(static_cast<int>(budget_s)) + " s budget)";
  }
  if (!out.ok) ++failures;
  std::printf("%s %s: %s; %s [%.2f s]\n", out.ok ? "PASS" : "FAIL", id, title, out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string config_path(const std::string& name) { return std::string(PJMP_SOURCE_DIR) + "/configs/" + name + ".json"; }

RunConfig config(const std::string& name) { return load_config(config_path(name)); }

VerifyContext context(const RunConfig& c, std::vector<double> extra_times = {}) {
  NeuronModel m = validate_model(c.model);
  const State x0 = m.make_state(c.initial_state);
  VerifyOptions opts;
  opts.constants.points_per_decade = c.engine.points_per_decade;
  opts.constants.theta_points = c.engine.theta_points;
  opts.constants.extra_times = std::move(extra_times);
  opts.constants.workers = 8;
  return VerifyContext(std::move(m), x0, opts);
}

Outcome generator_soundness() {
  const VerifyContext ctx = context(config("pair_symmetric"));
  const RateMatrix& q = ctx.q();
  const std::size_t n = q.n;
  double row_sum = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    double s = q.diagonal[u];
    for (std::size_t k = q.row_ptr[u]; k < q.row_ptr[u + 1]; ++k) s += q.values[k];
    row_sum = std::max(row_sum, std::abs(s));
  }
  const std::vector<double> grid{0.05, 0.3, 1.0, 2.5, 7.0};
  double stochastic = 0.0, negative = 0.0, ck = 0.0;
  for (double s : grid) {
    const auto ps = transition_probabilities(ctx.kernel(), s);
    for (std::size_t u = 0; u < n; ++u) {
      double r = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        r += ps[u * n + v];
        negative = std::min(negative, ps[u * n + v]);
      }
      stochastic = std::max(stochastic, std::abs(r - 1.0));
    }
    for (double t : grid) {
      const auto pt = transition_probabilities(ctx.kernel(), t);
      const auto pst = transition_probabilities(ctx.kernel(), s + t);
      for (std::size_t u = 0; u < n; ++u) {
        double row = 0.0;  // infinity norm: max row sum of |entries|
        for (std::size_t v = 0; v < n; ++v) {
          double prod = 0.0;
          for (std::size_t w = 0; w < n; ++w) prod += ps[u * n + w] * pt[w * n + v];
          row += std::abs(pst[u * n + v] - prod);
        }
        ck = std::max(ck, row);
      }
    }
  }
  const bool ok = row_sum <= 1e-13 && stochastic <= 1e-10 && negative >= 0.0 && ck <= 1e-8;
  return {ok, "max |row sum of Q| " + fmt("%.2e", row_sum) + ", max |P_t 1 - 1| " + fmt("%.2e", stochastic) +
                  ", Chapman-Kolmogorov 5x5 " + fmt("%.2e", ck)};
}

Outcome closed_forms() {
  std::vector<StateSpace> spaces;
  std::vector<NeuronModel> models;
  for (const char* name : {"single_neuron", "pair_symmetric", "triple_chain"}) {
    const RunConfig c = config(name);
    models.push_back(validate_model(c.model));
    spaces.push_back(enumerate_reachable(models.back(), models.back().make_state(c.initial_state)));
  }
  // 50 (s, x, i) samples spread over the three spaces
  double worst = 0.0;
  std::size_t samples = 0;
  const std::vector<double> times{0.01, 0.2, 0.7, 1.5, 4.0};
  for (std::size_t m = 0; m < spaces.size() && samples < 50; ++m) {
    const StateSpace& s = spaces[m];
    for (std::size_t u = 0; u < s.size() && samples < 50; ++u)
      for (std::size_t i = 0; i < s.n_neurons() && samples < 50; ++i)
        for (double t : times) {
          if (samples == 50) break;
          const JumpRates r = jump_rates(s, u, i);
          auto integrand = [&](double v) { return r.spiking * std::exp(-v * r.before - (t - v) * r.after); };
          const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, t, 15, 1e-14);
          worst = std::max(worst, std::abs(one_jump_probability(r, t) - quad));
          ++samples;
        }
  }
  // unimodality and the argmax on a fine grid
  double argmax_err = 0.0;
  bool unimodal = true;
  const double h = 1e-4;
  for (std::size_t m = 0; m < spaces.size(); ++m)
    for (std::size_t u = 0; u < spaces[m].size(); ++u)
      for (std::size_t i = 0; i < spaces[m].n_neurons(); ++i) {
        const JumpRates r = jump_rates(spaces[m], u, i);
        const double t0 = peak_time_t0(r);
        double best = -1.0, best_t = 0.0, prev = 0.0;
        int turns = 0;
        bool rising = true;
        for (int k = 1; k <= 100000; ++k) {
          const double s = k * h;
          const double p = one_jump_probability(r, s);
          if (p > best) best = p, best_t = s;
          if (rising && p < prev) rising = false, ++turns;
          if (!rising && p > prev + 1e-15) ++turns;
          prev = p;
        }
        unimodal &= turns <= 1;
        argmax_err = std::max(argmax_err, std::abs(best_t - t0));
      }
  // equal-rates branch on N = 1, phi = 1: p_s = s e^{-s}
  const JumpRates single = jump_rates(spaces[0], 0, 0);
  double branch = 0.0;
  for (double s : times) branch = std::max(branch, std::abs(one_jump_probability(single, s) - s * std::exp(-s)));
  const bool ok = samples == 50 && worst <= 1e-10 && unimodal && argmax_err <= h && single.equal_branch() &&
                  branch <= 1e-15 && std::abs(peak_time_t0(single) - 1.0) <= 1e-15;
  return {ok, std::to_string(samples) + " samples, max |closed form - quadrature| " + fmt("%.2e", worst) +
                  ", unimodal " + (unimodal ? "yes" : "no") + ", max |grid argmax - t0| " + fmt("%.1e", argmax_err) +
                  ", equal-rates branch error " + fmt("%.1e", branch)};
}

Outcome identities() {
  double dynkin = 0.0, representation = 0.0;
  std::size_t instances = 0;
  bool ok = true;
  for (const char* name : {"pair_symmetric", "triple_chain"}) {
    const RunConfig c = config(name);
    const VerifyContext ctx = context(c);
    const auto fs = random_observables(ctx.space().size(), 50, 101);
    for (double t : c.times.values()) {
      for (const NamedObservable& f : fs) {
        const Observable pt = ctx.kernel().apply(t, f.values);
        const Observable lf = apply_generator(ctx.space(), f.values);
        const Observable ilf = ctx.kernel().integrate(t, lf);
        const Observable var = variance_semigroup_all(ctx.kernel(), t, f.values);
        const Observable rep = variance_representation(ctx, f.values, t, ctx.expm_tol());
        for (std::size_t x = 0; x < pt.size(); ++x) {
          const double d = std::abs(pt[x] - f.values[x] - ilf[x]);
          const double r = std::abs(var[x] - rep[x]);
          dynkin = std::max(dynkin, d);
          representation = std::max(representation, r);
          ok &= d <= 1e-7 && r <= 1e-7;
          ++instances;
        }
      }
    }
  }
  return {ok, std::to_string(instances) + " (f, x, t) instances, max Dynkin residual " + fmt("%.2e", dynkin) +
                  ", max variance-representation residual " + fmt("%.2e", representation)};
}

Outcome invariant_measure_check() {
  double lq = 0.0, moved = 0.0;
  for (const char* name : {"pair_symmetric", "triple_chain"}) {
    const VerifyContext ctx = context(config(name));
    for (double v : left_apply(ctx.q(), ctx.pi().probabilities)) lq = std::max(lq, std::abs(v));
    for (double t : {0.5, 1.0, 2.0}) {
      const auto p = ctx.kernel().propagate(ctx.pi().probabilities, t);
      double l1 = 0.0;
      for (std::size_t u = 0; u < p.size(); ++u) l1 += std::abs(p[u] - ctx.pi()[u]);
      moved = std::max(moved, l1);
    }
  }
  return {lq <= 1e-12 && moved <= 1e-9,
          "max |pi Q| " + fmt("%.2e", lq) + ", max ||pi P_t - pi||_1 " + fmt("%.2e", moved)};
}

Outcome theorem_general() {
  const RunConfig c = config("pair_symmetric");
  const auto times = c.times.values();
  const VerifyContext ctx = context(c, times);
  SweepOptions opts;
  opts.n_functions = 200;
  opts.seed = 11;
  opts.structured = false;
  opts.times = times;
  opts.checks = {CheckKind::TheoremGeneral};
  opts.workers = 8;
  opts.keep_reports = false;
  const SweepSummary s = random_observable_sweep(ctx, opts);
  std::string detail = std::to_string(times.size()) + " times x " + std::to_string(s.n_observables) + " f x " +
                       std::to_string(ctx.space().size()) + " states";
  for (const CheckSummary& cs : s.checks) {
    detail += "; " + (cs.variant ? to_string(*cs.variant) : std::string("-")) + ": " + std::to_string(cs.passed) +
              " pass, " + std::to_string(cs.failed) + " fail, min relative margin " +
              fmt("%.3g", cs.min_relative_margin);
  }
  return {s.all_passed() && times.size() == 8 && s.n_observables == 200, detail};
}

Outcome theorem_recurrent() {
  std::size_t passed = 0, failed = 0, skipped = 0;
  double worst = INFINITY;
  for (const char* name : {"pair_symmetric", "triple_chain"}) {
    const RunConfig c = config(name);
    const VerifyContext probe = context(c);
    const double t1 = probe.constants().theta.t1;
    const std::vector<double> times{1.1 * t1, 2.0 * t1, 5.0 * t1};
    const VerifyContext ctx = context(c, times);
    SweepOptions opts;
    opts.n_functions = 100;
    opts.seed = 23;
    opts.structured = false;
    opts.times = times;
    opts.checks = {CheckKind::TheoremRecurrent};
    opts.workers = 8;
    const SweepSummary s = random_observable_sweep(ctx, opts);
    for (const CheckSummary& cs : s.checks) {
      passed += cs.passed;
      failed += cs.failed;
      skipped += cs.skipped;
      worst = std::min(worst, cs.min_relative_margin);
    }
  }
  return {failed == 0 && skipped == 0 && passed > 0,
          std::to_string(passed) + " pass, " + std::to_string(failed) + " fail, " + std::to_string(skipped) +
              " skipped over x in D-hat, t in {1.1, 2, 5} t1; min relative margin " + fmt("%.3g", worst)};
}

Outcome invariant_poincare() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"pair_symmetric", "triple_chain"}) {
    const VerifyContext ctx = context(config(name));
    std::size_t fails = 0;
    double looseness = INFINITY;
    for (const NamedObservable& f : random_observables(ctx.space().size(), 1000, 77)) {
      const InequalityReport r = check_invariant_poincare(ctx, f.values, f.id);
      fails += !r.pass();
      if (r.lhs > 0.0) looseness = std::min(looseness, r.rhs / r.lhs);
    }
    const double c0 = ctx.constants().C0;
    const double opt = ctx.poincare().constant;
    const auto& e = ctx.poincare().eigenfunction;
    const double var = variance_invariant(ctx.pi(), e);
    const double form = ctx.pi().expectation(carre_du_champ(ctx.space(), e));
    const double ratio_err = std::abs(var / form - opt);
    ok &= fails == 0 && opt <= c0 && ratio_err <= 1e-6;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": 1000 f, " + std::to_string(fails) +
              " fail, C0 " + fmt("%.4g", c0) + ", optimal " + fmt("%.4g", opt) + ", eigenfunction ratio error " +
              fmt("%.1e", ratio_err) + ", min rhs/lhs " + fmt("%.3g", looseness);
  }
  return {ok, detail};
}

Outcome ratio_constants() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"pair_symmetric", "triple_chain"}) {
    const VerifyContext ctx = context(config(name));
    const RatioConstants& r = ctx.constants().ratios;
    const double d1 = std::abs(r.c1_refined - r.c1.empirical) / r.c1.empirical;
    const double d2 = std::abs(r.c2_refined - r.c2.empirical) / r.c2.empirical;
    double theta_min = INFINITY;
    for (std::size_t x : ctx.space().recurrent().only()) theta_min = std::min(theta_min, ctx.theta_check_min(x));
    ok &= std::isfinite(r.c1.empirical) && std::isfinite(r.c2.empirical) && d1 < 0.05 && d2 < 0.05 &&
          !r.grid_too_coarse && theta_min >= 1.0 - 1e-9;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": C1 " + fmt("%.5g", r.c1.empirical) + " (x2 grid " +
              fmt("%.2g", d1 * 100) + "%), C2 " + fmt("%.5g", r.c2.empirical) + " (x2 grid " + fmt("%.2g", d2 * 100) +
              "%), min theta P_t " + fmt("%.6g", theta_min);
  }
  return {ok, detail};
}

Outcome montecarlo() {
  const RunConfig c = config("pair_symmetric");
  const VerifyContext ctx = context(c);
  const StateSpace& s = ctx.space();
  std::vector<NamedObservable> fs = random_observables(s.size(), 3, 5);
  for (const NamedObservable& o : make_observables(ctx, 0, 0, true))
    if (o.id.rfind("coordinate", 0) == 0 || o.id == "eigenfunction") fs.push_back(o);
  MonteCarloOptions opts{100000, 7, 8};
  std::size_t comparisons = 0, misses = 0;
  double worst_z = 0.0, min_p = 1.0;
  for (double t : {0.5, 2.0}) {
    const auto idx = sample_final_indices(s, 0, t, opts);
    const auto exact = ctx.kernel().distribution(0, t);
    min_p = std::min(min_p, chi_square_test(histogram(idx, s.size()), exact.probabilities).p_value);
    for (const NamedObservable& f : fs) {
      std::vector<double> vals(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) vals[k] = f.values[idx[k]];
      const Estimate m = mean_estimate(vals, opts.seed);
      const Estimate v = variance_estimate(vals, opts.seed);
      const double em = exact.expectation(f.values);
      const double ev = variance_semigroup(ctx.kernel(), t, f.values, 0);
      for (const auto& [est, ex] : {std::pair{m, em}, std::pair{v, ev}}) {
        const double z = est.std_error > 0 ? std::abs(est.mean - ex) / est.std_error : (est.mean == ex ? 0 : INFINITY);
        worst_z = std::max(worst_z, z);
        misses += z > 4.0;
        ++comparisons;
      }
    }
  }
  return {misses == 0 && min_p > 1e-3, std::to_string(comparisons) + " comparisons at n_paths 1e5, max |MC - exact| / se " +
                                           fmt("%.2f", worst_z) + ", min chi-square p " + fmt("%.3g", min_p)};
}

Outcome determinism() {
  bool ok = true;
  std::size_t bytes = 0;
  for (const char* name : {"single_neuron", "pair_symmetric", "triple_chain"}) {
    RunConfig c = config(name);
    if (std::find(c.checks.begin(), c.checks.end(), "montecarlo_crosscheck") == c.checks.end())
      c.checks.push_back("montecarlo_crosscheck");
    c.mc.n_paths = 20000;
    for (const char* command : {"verify", "simulate"}) {
      const AppResult a = run_command(command, c, AppOptions{1});
      const AppResult again = run_command(command, c, AppOptions{1});
      const AppResult b = run_command(command, c, AppOptions{8});
      ok &= a.exit_code == 0 && a.files == again.files && a.files == b.files;
      for (const auto& f : a.files) bytes += f.second.size();
    }
  }
  return {ok, "verify + simulate on 3 configs, workers 1 (twice) vs 8, " + std::to_string(bytes) +
                  " bytes compared; byte-identical " + (ok ? "yes" : "no")};
}

}  // namespace

int main() {
  run("AC1", "generator and semigroup soundness", 5, generator_soundness);
  run("AC2", "one-jump closed forms", 5, closed_forms);
  run("AC3", "Dynkin formula and variance representation", 30, identities);
  run("AC4", "invariant measure", 0, invariant_measure_check);
  run("AC5", "general variance bound", 120, theorem_general);
  run("AC6", "recurrent-domain variance bound", 0, theorem_recurrent);
  run("AC7", "invariant Poincare inequality", 0, invariant_poincare);
  run("AC8", "ratio constants and theta", 0, ratio_constants);
  run("AC9", "Monte Carlo cross-check", 60, montecarlo);
  run("AC10", "determinism across worker counts", 0, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
