#include "pjmp/app.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pjmp/exact_engine.hpp"
#include "pjmp/montecarlo.hpp"
#include "pjmp/serialize.hpp"
#include "pjmp/spectral.hpp"
#include "pjmp/verify.hpp"

namespace pjmp {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::StateSpaceTooLarge:
      return exit_code::kCapacity;
    case ErrorCode::SingularSystem:
    case ErrorCode::NonPositiveProbability:
      return exit_code::kNumeric;
    default:
      return exit_code::kConfig;
  }
}

namespace {

struct Run {
  const RunConfig& config;
  const AppOptions& options;
  NeuronModel model;
  State x0;

  Run(const RunConfig& c, const AppOptions& o) : config(c), options(o), model(load_model(c)), x0(load_state(model, c)) {}

  static NeuronModel load_model(const RunConfig& c) {
    try {
      return validate_model(c.model);
    } catch (const Error& e) {
      throw Error(e.code(), "$.model: " + e.message());
    }
  }

  static State load_state(const NeuronModel& m, const RunConfig& c) {
    try {
      return m.make_state(c.initial_state);
    } catch (const Error& e) {
      throw Error(e.code(), "$.initial_state: " + e.message());
    }
  }

  bool wants_format(const std::string& f) const {
    const auto& list = options.formats ? *options.formats : config.output.formats;
    return std::find(list.begin(), list.end(), f) != list.end();
  }

  bool wants_check(const std::string& name) const {
    return std::find(config.checks.begin(), config.checks.end(), name) != config.checks.end();
  }

  std::vector<ConstantsVariant> variants() const {
    switch (options.variants) {
      case VariantSelection::Paper:
        return {ConstantsVariant::Paper};
      case VariantSelection::Empirical:
        return {ConstantsVariant::Empirical};
      case VariantSelection::Both:
        break;
    }
    return {ConstantsVariant::Empirical, ConstantsVariant::Paper};
  }

  std::vector<double> mc_times() const { return config.mc.times.empty() ? config.times.values() : config.mc.times; }

  EngineOptions engine() const {
    EngineOptions e;
    e.expm_tol = config.engine.expm_tol;
    e.solve_tol = config.engine.solve_tol;
    e.dense_limit = config.engine.dense_limit;
    return e;
  }

  VerifyOptions verify_options() const {
    VerifyOptions v;
    v.max_states = config.engine.max_states;
    v.identity_tol = config.engine.identity_tol;
    ConstantsOptions& c = v.constants;
    c.points_per_decade = config.engine.points_per_decade;
    c.theta_points = config.engine.theta_points;
    c.per_neuron_sup = config.engine.per_neuron_sup;
    c.extra_times = config.times.values();
    c.workers = options.workers;
    c.engine = engine();
    return v;
  }
};

std::string dump_line(const ojson& j) { return j.dump() + "\n"; }
std::string dump_doc(const ojson& j) { return j.dump(2) + "\n"; }

// Observables listed in the config, resolved on an enumerated space.
template <class Eigenfunction>
std::vector<NamedObservable> resolve_observables(const RunConfig& config, const NeuronModel& model,
                                                 const StateSpace& space, Eigenfunction&& eigenfunction) {
  std::vector<NamedObservable> out;
  for (std::size_t k = 0; k < config.observables.size(); ++k) {
    const ObservableSpec& spec = config.observables[k];
    const std::string path = "$.observables[" + std::to_string(k) + "]";
    if (spec.type == "random") {
      for (auto& f : random_observables(space.size(), spec.count, spec.seed)) out.push_back(std::move(f));
    } else if (spec.type == "coordinate") {
      if (spec.neuron >= model.size()) throw Error(ErrorCode::ConfigError, path + ".neuron: past the neuron count");
      NamedObservable f{"coordinate:" + std::to_string(spec.neuron), Observable(space.size())};
      for (std::size_t u = 0; u < space.size(); ++u) f.values[u] = model.potential(space.state(u), spec.neuron);
      out.push_back(std::move(f));
    } else if (spec.type == "indicator") {
      State target;
      try {
        target = model.make_state(spec.state);
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, path + ".state: " + e.message());
      }
      const auto idx = space.index_of(target);
      if (!idx) throw Error(ErrorCode::ConfigError, path + ".state: not reachable from the initial state");
      NamedObservable f{"indicator:" + std::to_string(*idx), Observable(space.size(), 0.0)};
      f.values[*idx] = 1.0;
      out.push_back(std::move(f));
    } else if (spec.type == "file") {
      NamedObservable f{"file:" + spec.path, load_observable_file(config, spec)};
      if (f.values.size() != space.size()) {
        throw Error(ErrorCode::ConfigError, path + ".path: expected " + std::to_string(space.size()) + " values");
      }
      out.push_back(std::move(f));
    } else if (spec.type == "eigenfunction") {
      out.push_back({"eigenfunction", eigenfunction()});
    }
  }
  return out;
}

AppResult cmd_enumerate(const Run& run) {
  const StateSpace space = enumerate_reachable(run.model, run.x0, run.config.engine.max_states);
  const RecurrentClasses& rec = space.recurrent();
  std::size_t n_recurrent = 0;
  for (bool b : rec.mask) n_recurrent += b ? 1 : 0;

  AppResult res;
  ojson summary;
  summary["model_hash"] = model_hash(run.model);
  summary["states"] = space.size();
  summary["recurrent"] = n_recurrent;
  summary["closed_classes"] = rec.closed.size();
  if (run.wants_format("json")) summary["state_list"] = states_json(run.model, space);
  res.files.emplace_back("enumerate.json", dump_doc(summary));
  if (run.wants_format("csv")) {
    res.files.emplace_back("states.csv", states_csv(run.model, space));
    res.files.emplace_back("edges.csv", edges_csv(space));
  }
  res.summary = "states: " + std::to_string(space.size()) + ", recurrent: " + std::to_string(n_recurrent) +
                ", closed classes: " + std::to_string(rec.closed.size());
  return res;
}

AppResult cmd_constants(const Run& run) {
  const VerifyContext ctx(run.model, run.x0, run.verify_options());
  const ConstantsReport& k = ctx.constants();
  AppResult res;
  if (run.wants_format("json")) {
    ojson doc;
    doc["model_hash"] = ctx.model_hash();
    doc["constants"] = to_json(k);
    ojson polys = ojson::array();
    const auto times = run.config.times.values();
    for (ConstantsVariant v : run.variants()) polys.push_back(polynomials_json(k, v, times));
    doc["polynomials"] = polys;
    res.files.emplace_back("constants.json", dump_doc(doc));
  }
  if (run.wants_format("csv")) res.files.emplace_back("constants.csv", constants_csv(k));
  std::ostringstream line;
  line << "states: " << k.n_states << ", recurrent: " << k.n_recurrent << ", C0: " << format_double(k.C0)
       << ", optimal: " << format_double(k.optimal_poincare);
  if (!k.warnings.empty()) line << ", warnings: " << k.warnings.size();
  res.summary = line.str();
  return res;
}

struct McTable {
  ojson json = ojson::array();
  std::string csv;
  std::vector<InequalityReport> reports;
  std::size_t failures = 0;
};

double z_score(const Estimate& e, double exact) {
  if (e.std_error > 0.0) return (e.mean - exact) / e.std_error;
  return e.mean == exact ? 0.0 : INFINITY;
}

// Monte Carlo X_t from state 0 against the exact row: chi-square on the law,
// and |estimate - exact| <= 4 std errors for the mean and variance of each f.
McTable montecarlo_crosscheck(const StateSpace& space, const TransitionKernel& kernel, const std::string& hash,
                              const std::vector<NamedObservable>& observables, const std::vector<double>& times,
                              const McConfig& mc, std::size_t workers, double tol) {
  McTable table;
  std::ostringstream csv;
  csv << "f_id,t,quantity,estimate,std_error,exact,z\n";
  const MonteCarloOptions opts{mc.n_paths, mc.seed, workers};
  const std::size_t x0 = 0;
  auto add = [&](InequalityReport r) {
    settle(r);
    if (r.status == CheckStatus::Fail) ++table.failures;
    table.reports.push_back(std::move(r));
  };
  for (double t : times) {
    const auto idx = sample_final_indices(space, x0, t, opts);
    const DistributionVector row = kernel.distribution(x0, t, tol);
    const ChiSquareResult chi = chi_square_test(histogram(idx, space.size()), row.probabilities);

    InequalityReport law;
    law.name = "montecarlo_chi_square";
    law.instance = {hash, "law", x0, t};
    law.lhs = 1e-3;
    law.rhs_terms = {{"p_value", chi.p_value}};
    law.diagnostics = {{"statistic", chi.statistic}, {"dof", static_cast<double>(chi.dof)}};
    add(std::move(law));

    ojson entries = ojson::array();
    std::vector<double> values(idx.size());
    for (const NamedObservable& f : observables) {
      for (std::size_t k = 0; k < idx.size(); ++k) values[k] = f.values[idx[k]];
      const Estimate mean = mean_estimate(values, mc.seed);
      const Estimate var = variance_estimate(values, mc.seed);
      const double exact_mean = row.expectation(f.values);
      const double exact_var = variance_semigroup(kernel, t, f.values, x0, tol);
      ojson e;
      e["f_id"] = f.id;
      for (const auto& [key, est, exact] :
           {std::tuple{"expectation", mean, exact_mean}, std::tuple{"variance", var, exact_var}}) {
        const double z = z_score(est, exact);
        ojson j = to_json(est);
        j["exact"] = exact;
        j["z"] = std::isfinite(z) ? ojson(z) : ojson(nullptr);
        e[key] = j;
        csv << f.id << ',' << format_double(t) << ',' << key << ',' << format_double(est.mean) << ','
            << format_double(est.std_error) << ',' << format_double(exact) << ',' << format_double(z) << '\n';

        InequalityReport r;
        r.name = std::string("montecarlo_") + key;
        r.instance = {hash, f.id, x0, t};
        r.lhs = std::abs(est.mean - exact);
        r.rhs_terms = {{"4*std_error", 4.0 * est.std_error}};
        r.diagnostics = {{"estimate", est.mean}, {"std_error", est.std_error}, {"exact", exact}};
        add(std::move(r));
      }
      entries.push_back(e);
    }
    table.json.push_back({{"t", t}, {"chi_square", to_json(chi)}, {"observables", entries}});
  }
  table.csv = csv.str();
  return table;
}

std::vector<CheckKind> sweep_checks(const Run& run) {
  std::vector<CheckKind> out;
  for (const std::string& name : run.config.checks) {
    if (auto k = parse_check_kind(name)) out.push_back(*k);
  }
  return out;
}

AppResult cmd_verify(const Run& run) {
  const VerifyContext ctx(run.model, run.x0, run.verify_options());
  const auto observables =
      resolve_observables(run.config, run.model, ctx.space(), [&] { return ctx.poincare().eigenfunction; });
  SweepOptions sweep;
  sweep.times = run.config.times.values();
  sweep.checks = sweep_checks(run);
  sweep.variants = run.variants();
  sweep.workers = run.options.workers;
  SweepSummary summary = random_observable_sweep(ctx, observables, sweep);

  ojson mc_json = nullptr;
  if (run.wants_check("montecarlo_crosscheck")) {
    McTable mc = montecarlo_crosscheck(ctx.space(), ctx.kernel(), ctx.model_hash(), observables, run.mc_times(),
                                       run.config.mc, run.options.workers, ctx.expm_tol());
    summary.failures += mc.failures;
    for (InequalityReport& r : mc.reports) summary.reports.push_back(std::move(r));
    mc_json = mc.json;
  }

  AppResult res;
  if (run.wants_format("json")) {
    std::string lines;
    for (const InequalityReport& r : summary.reports) lines += dump_line(to_json(r));
    res.files.emplace_back("reports.jsonl", std::move(lines));
  }
  ojson doc = to_json(summary);
  doc["model_hash"] = ctx.model_hash();
  doc["n_reports"] = summary.reports.size();
  doc["theta_is_grid_surrogate"] = true;
  doc["constants_warnings"] = ctx.constants().warnings;
  if (!mc_json.is_null()) doc["montecarlo"] = mc_json;
  res.files.emplace_back("summary.json", dump_doc(doc));
  res.files.emplace_back("margins.csv", margins_csv(summary.reports));

  std::size_t skipped = 0;
  for (const auto& r : summary.reports) skipped += r.status == CheckStatus::Skipped ? 1 : 0;
  res.summary = "reports: " + std::to_string(summary.reports.size()) + ", failed: " + std::to_string(summary.failures) +
                ", skipped: " + std::to_string(skipped);
  if (summary.failures > 0) res.exit_code = exit_code::kCheckFailure;
  return res;
}

AppResult cmd_simulate(const Run& run) {
  const StateSpace space = enumerate_reachable(run.model, run.x0, run.config.engine.max_states);
  const RateMatrix q = build_rate_matrix(space);
  const TransitionKernel kernel(q, static_cast<double>(run.model.size()) * run.model.phi_max());
  const auto observables = resolve_observables(run.config, run.model, space, [&] {
    const EngineOptions e = run.engine();
    const auto& cls = space.recurrent().only();
    return optimal_poincare_constant(q, invariant_measure(q, cls, e), cls, e).eigenfunction;
  });

  const McTable mc = montecarlo_crosscheck(space, kernel, model_hash(run.model), observables, run.mc_times(),
                                           run.config.mc, run.options.workers, run.config.engine.expm_tol);
  AppResult res;
  if (run.wants_format("json")) {
    ojson doc;
    doc["model_hash"] = model_hash(run.model);
    doc["x0"] = 0;
    doc["n_paths"] = run.config.mc.n_paths;
    doc["seed"] = run.config.mc.seed;
    doc["times"] = mc.json;
    doc["failures"] = mc.failures;
    res.files.emplace_back("simulate.json", dump_doc(doc));
  }
  if (run.wants_format("csv")) res.files.emplace_back("simulate.csv", mc.csv);
  res.summary = "paths: " + std::to_string(run.config.mc.n_paths) + ", comparisons: " +
                std::to_string(mc.reports.size()) + ", outside tolerance: " + std::to_string(mc.failures);
  if (run.wants_check("montecarlo_crosscheck") && mc.failures > 0) res.exit_code = exit_code::kCheckFailure;
  return res;
}

}  // namespace

AppResult run_command(const std::string& command, const RunConfig& config, const AppOptions& options) {
  try {
    const Run run(config, options);
    if (command == "enumerate") return cmd_enumerate(run);
    if (command == "constants") return cmd_constants(run);
    if (command == "verify") return cmd_verify(run);
    if (command == "simulate") return cmd_simulate(run);
    AppResult res;
    res.exit_code = exit_code::kConfig;
    res.error = "unknown command: " + command;
    return res;
  } catch (const Error& e) {
    AppResult res;
    res.exit_code = exit_code_for(e.code());
    res.error = e.what();
    return res;
  }
}

}  // namespace pjmp
