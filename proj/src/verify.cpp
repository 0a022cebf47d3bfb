#include "pjmp/verify.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "pjmp/error.hpp"
#include "pjmp/parallel.hpp"
#include "pjmp/philox.hpp"

namespace pjmp {

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Skipped:
      return "skipped";
  }
  return "unknown";
}

bool within_tolerance(double margin, double rhs) { return margin >= -1e-9 * std::max(1.0, std::abs(rhs)); }

void settle(InequalityReport& report) {
  report.rhs = 0.0;
  for (const auto& term : report.rhs_terms) report.rhs += term.second;
  report.margin = report.rhs - report.lhs;
  const bool ok = std::isfinite(report.margin) && within_tolerance(report.margin, report.rhs);
  report.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
}

namespace {

void skip(InequalityReport& report, std::string why) {
  report.status = CheckStatus::Skipped;
  report.notes = std::move(why);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

TransitionKernel make_kernel(const NeuronModel& model, const RateMatrix& q) {
  return TransitionKernel(q, static_cast<double>(model.size()) * model.phi_max());
}

InequalityReport base_report(const VerifyContext& ctx, std::string name, const std::string& f_id,
                             std::optional<std::size_t> x, std::optional<double> t) {
  InequalityReport r;
  r.name = std::move(name);
  r.instance = {ctx.model_hash(), f_id, x, t};
  return r;
}

void check_state(const VerifyContext& ctx, std::size_t x) {
  if (x >= ctx.space().size()) throw Error(ErrorCode::IndexOutOfRange, "state index past the enumerated space");
}

}  // namespace

std::string model_hash(const NeuronModel& model) {
  std::ostringstream key;
  key << model.size() << '|' << model.quantum() << '|' << model.ceiling_ticks() << '|' << to_string(model.clip_rule());
  for (std::size_t i = 0; i < model.size(); ++i) {
    for (std::size_t j = 0; j < model.size(); ++j) key << ',' << model.weight_ticks(i, j);
  }
  key.precision(17);
  const IntensitySpec& phi = model.intensity();
  key << '|' << static_cast<int>(phi.family) << '|' << phi.floor << '|' << phi.slope << '|' << phi.declared_delta
      << '|' << phi.declared_c;
  for (double b : phi.breakpoints) key << ',' << b;
  for (double v : phi.values) key << ',' << v;

  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : key.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

VerifyContext::VerifyContext(NeuronModel model, const State& x0, const VerifyOptions& options)
    : model_(std::move(model)),
      options_(options),
      space_(enumerate_reachable(model_, x0, options.max_states)),
      q_(build_rate_matrix(space_)),
      kernel_(make_kernel(model_, q_)),
      constants_(compute_constants(model_, space_, q_, kernel_, options.constants)),
      pi_(invariant_measure(q_, space_.recurrent().only(), options.constants.engine)),
      poincare_(optimal_poincare_constant(q_, pi_, space_.recurrent().only(), options.constants.engine)),
      hash_(pjmp::model_hash(model_)),
      theta_check_(space_.size(), std::numeric_limits<double>::quiet_NaN()),
      theta_check_t_(space_.size(), std::numeric_limits<double>::quiet_NaN()) {
  const ThetaResult& th = constants_.theta;
  const auto grid = theta_grid(th.t1, th.window, 2 * options.constants.theta_points - 1);
  const auto& cls = space_.recurrent().only();
  parallel_for(cls.size(), options.constants.workers, [&](std::size_t k) {
    const std::size_t x = cls[k];
    double best = std::numeric_limits<double>::infinity();
    double at = th.t1;
    for (double t : grid) {
      const DistributionVector row = kernel_.distribution(x, t, expm_tol(), cls.size() + 30);
      for (std::size_t y : cls) {
        if (th.theta * row[y] < best) {
          best = th.theta * row[y];
          at = t;
        }
      }
    }
    theta_check_[x] = best;
    theta_check_t_[x] = at;
  });
}

ObservableSnapshot snapshot(const VerifyContext& ctx, std::span<const double> f, double t, double tol) {
  if (f.size() != ctx.space().size()) throw Error(ErrorCode::ObservableUndefined, "observable length differs from the state count");
  check_time(t);
  ObservableSnapshot s;
  s.t = t;
  s.gamma = carre_du_champ(ctx.space(), f);
  s.variance = variance_semigroup_all(ctx.kernel(), t, f, tol);
  s.int_gamma = ctx.kernel().integrate(t, s.gamma, tol);
  s.pt_gamma = ctx.kernel().apply(t, s.gamma, tol);
  return s;
}

InequalityReport check_theorem_general(const VerifyContext& ctx, const ObservableSnapshot& snap,
                                       const std::string& f_id, std::size_t x, ConstantsVariant variant) {
  check_state(ctx, x);
  const RatePolynomials poly(ctx.constants(), variant);
  InequalityReport r = base_report(ctx, "theorem_general", f_id, x, snap.t);
  r.variant = variant;
  r.lhs = snap.variance[x];
  double neighbours = 0.0;
  for (std::size_t i = 0; i < ctx.space().n_neurons(); ++i) neighbours += snap.int_gamma[ctx.space().target(x, i)];
  r.rhs_terms = {{"alpha*int_gamma", poly.alpha(snap.t) * snap.int_gamma[x]}, {"beta*sum_int_gamma_jump", poly.beta() * neighbours}};
  r.diagnostics = {{"alpha", poly.alpha(snap.t)}, {"beta", poly.beta()}};
  settle(r);
  return r;
}

InequalityReport check_theorem_general(const VerifyContext& ctx, std::span<const double> f,
                                       const std::string& f_id, std::size_t x, double t, ConstantsVariant variant) {
  return check_theorem_general(ctx, snapshot(ctx, f, t), f_id, x, variant);
}

InequalityReport check_theorem_recurrent(const VerifyContext& ctx, const ObservableSnapshot& snap,
                                         const std::string& f_id, std::size_t x, ConstantsVariant variant) {
  check_state(ctx, x);
  if (!ctx.space().is_recurrent(x)) {
    throw Error(ErrorCode::NotInRecurrentDomain, "state " + std::to_string(x) + " is outside the recurrent domain");
  }
  const RatePolynomials poly(ctx.constants(), variant);
  InequalityReport r = base_report(ctx, "theorem_recurrent", f_id, x, snap.t);
  r.variant = variant;
  r.lhs = snap.variance[x];
  r.diagnostics = {{"gamma", poly.gamma(snap.t)}, {"t1", ctx.constants().theta.t1}};
  if (!(snap.t > ctx.constants().theta.t1)) {
    skip(r, "t <= t1 = " + fmt(ctx.constants().theta.t1));
    return r;
  }
  r.rhs_terms = {{"gamma*pt_gamma", poly.gamma(snap.t) * snap.pt_gamma[x]}, {"2*int_gamma", 2.0 * snap.int_gamma[x]}};
  settle(r);
  return r;
}

InequalityReport check_theorem_recurrent(const VerifyContext& ctx, std::span<const double> f,
                                         const std::string& f_id, std::size_t x, double t, ConstantsVariant variant) {
  check_state(ctx, x);
  if (!ctx.space().is_recurrent(x)) {
    throw Error(ErrorCode::NotInRecurrentDomain, "state " + std::to_string(x) + " is outside the recurrent domain");
  }
  return check_theorem_recurrent(ctx, snapshot(ctx, f, t), f_id, x, variant);
}

std::pair<InequalityReport, InequalityReport> check_corollaries(const VerifyContext& ctx,
                                                                const ObservableSnapshot& snap,
                                                                const std::string& f_id, std::size_t x,
                                                                ConstantsVariant variant) {
  check_state(ctx, x);
  const StateSpace& space = ctx.space();
  const RatePolynomials poly(ctx.constants(), variant);
  const double t = snap.t;
  const double own = snap.int_gamma[x];

  InequalityReport first = base_report(ctx, "corollary_integral", f_id, x, t);
  first.variant = variant;
  first.lhs = snap.variance[x];
  double pt_neighbours = 0.0, int_neighbours = 0.0;
  for (std::size_t i = 0; i < space.n_neurons(); ++i) {
    pt_neighbours += snap.pt_gamma[space.target(x, i)];
    int_neighbours += snap.int_gamma[space.target(x, i)];
  }
  const double zeta = poly.zeta(pt_neighbours, own);
  const bool dominant = poly.beta() * int_neighbours <= poly.alpha(t) * own;
  first.diagnostics = {{"zeta", zeta}};
  if (!std::isfinite(zeta) || !(t > zeta) || !dominant) {
    skip(first, "condition not met, skipped (zeta = " + fmt(zeta) + (dominant ? "" : ", alpha term not dominant") + ")");
  } else {
    first.rhs_terms = {{"2*alpha*int_gamma", 2.0 * poly.alpha(t) * own}};
    settle(first);
  }

  InequalityReport second = base_report(ctx, "corollary_endpoint", f_id, x, t);
  second.variant = variant;
  second.lhs = snap.variance[x];
  const double xi = poly.xi(own, snap.pt_gamma[x]);
  const double t1 = ctx.constants().theta.t1;
  second.diagnostics = {{"xi", xi}, {"t1", t1}};
  if (!space.is_recurrent(x)) {
    skip(second, "condition not met, skipped (x outside the recurrent domain)");
  } else if (!std::isfinite(xi) || !(t > std::max(xi, t1)) || poly.gamma(t) * snap.pt_gamma[x] < 2.0 * own) {
    skip(second, "condition not met, skipped (xi = " + fmt(xi) + ", t1 = " + fmt(t1) + ")");
  } else {
    second.rhs_terms = {{"2*gamma*pt_gamma", 2.0 * poly.gamma(t) * snap.pt_gamma[x]}};
    settle(second);
  }
  return {first, second};
}

std::pair<InequalityReport, InequalityReport> check_corollaries(const VerifyContext& ctx, std::span<const double> f,
                                                                const std::string& f_id, std::size_t x, double t,
                                                                ConstantsVariant variant) {
  return check_corollaries(ctx, snapshot(ctx, f, t), f_id, x, variant);
}

InequalityReport check_invariant_poincare(const VerifyContext& ctx, std::span<const double> f,
                                          const std::string& f_id) {
  if (f.size() != ctx.space().size()) throw Error(ErrorCode::ObservableUndefined, "observable length differs from the state count");
  InequalityReport r = base_report(ctx, "invariant_poincare", f_id, std::nullopt, std::nullopt);
  const double c0 = ctx.constants().C0;
  const double optimal = ctx.poincare().constant;
  r.lhs = variance_invariant(ctx.pi(), f);
  const Observable gamma = carre_du_champ(ctx.space(), f);
  r.rhs_terms = {{"C0*pi_gamma", c0 * ctx.pi().expectation(gamma)}};
  r.diagnostics = {{"C0", c0}, {"optimal_constant", optimal}, {"looseness", optimal > 0.0 ? c0 / optimal : std::numeric_limits<double>::infinity()}};
  settle(r);
  return r;
}

Observable variance_representation(const VerifyContext& ctx, std::span<const double> f, double t, double tol) {
  check_time(t);
  const std::size_t n = ctx.space().size();
  Observable total(n, 0.0);
  if (t == 0.0) return total;
  const TransitionKernel& kernel = ctx.kernel();
  const auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(kernel.uniformization_rate() * t / 4.0)));
  const double h = t / static_cast<double>(panels);
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  // nodes are +-abscissa[k] (abscissa[0] = 0 for an even rule count is not used)
  auto add_node = [&](double s, double w) {
    const Observable g = kernel.apply(t - s, f, tol);
    const Observable ps = kernel.apply(s, carre_du_champ(ctx.space(), g), tol);
    for (std::size_t u = 0; u < n; ++u) total[u] += w * ps[u];
  };
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = h * (static_cast<double>(p) + 0.5);
    const double half = h / 2.0;
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      if (abscissa[k] == 0.0) {
        add_node(mid, half * weights[k]);
      } else {
        add_node(mid - half * abscissa[k], half * weights[k]);
        add_node(mid + half * abscissa[k], half * weights[k]);
      }
    }
  }
  for (double& v : total) v *= 2.0;
  return total;
}

IdentityInputs prepare_identities(const VerifyContext& ctx, std::span<const double> f, double t, double tol) {
  check_time(t);
  const StateSpace& space = ctx.space();
  if (f.size() != space.size()) throw Error(ErrorCode::ObservableUndefined, "observable length differs from the state count");
  const TransitionKernel& kernel = ctx.kernel();
  IdentityInputs in;
  in.t = t;
  in.tol = tol;
  in.f.assign(f.begin(), f.end());
  const Observable lf = apply_generator(space, f);
  const Observable gamma = carre_du_champ(space, f);
  in.pt_f = kernel.apply(t, f, tol);
  in.int_lf = kernel.integrate(t, lf, tol);
  in.variance = variance_semigroup_all(kernel, t, f, tol);
  in.representation = variance_representation(ctx, f, t, tol);
  const double t0 = ctx.constants().t0_star;
  if (t > t0) {
    const Observable lf_early = kernel.integrate(t0, lf, tol);
    const Observable gamma_late = kernel.integrate(t, gamma, tol);
    const Observable gamma_early = kernel.integrate(t0, gamma, tol);
    in.lf_from_t0.resize(space.size());
    in.gamma_from_t0.resize(space.size());
    for (std::size_t u = 0; u < space.size(); ++u) {
      in.lf_from_t0[u] = in.int_lf[u] - lf_early[u];
      in.gamma_from_t0[u] = std::max(0.0, gamma_late[u] - gamma_early[u]);
    }
  }
  if (t > 0.0) {
    const std::size_t min_terms = ratio_min_terms(space);
    in.rows.reserve(space.size());
    for (std::size_t u = 0; u < space.size(); ++u) in.rows.push_back(kernel.distribution(u, t, tol, min_terms));
  }
  return in;
}

std::vector<InequalityReport> check_identities(const VerifyContext& ctx, std::span<const double> f,
                                               const std::string& f_id, std::size_t x, double t) {
  return check_identities(ctx, f, f_id, x, t, ctx.expm_tol());
}

std::vector<InequalityReport> check_identities(const VerifyContext& ctx, std::span<const double> f,
                                               const std::string& f_id, std::size_t x, double t, double tol) {
  check_state(ctx, x);
  return check_identities(ctx, prepare_identities(ctx, f, t, tol), f_id, x);
}

std::vector<InequalityReport> check_identities(const VerifyContext& ctx, const IdentityInputs& in,
                                               const std::string& f_id, std::size_t x) {
  check_state(ctx, x);
  const StateSpace& space = ctx.space();
  const ConstantsReport& k = ctx.constants();
  const double id_tol = ctx.options().identity_tol;
  const double t = in.t;
  std::vector<InequalityReport> out;

  // P_t f(x) - f(x) = int_0^t P_s L f(x) ds
  {
    InequalityReport r = base_report(ctx, "dynkin", f_id, x, t);
    const double lhs = in.pt_f[x] - in.f[x];
    r.lhs = std::abs(lhs - in.int_lf[x]);
    r.rhs_terms = {{"tolerance", id_tol * std::max(1.0, std::abs(lhs))}};
    r.diagnostics = {{"pt_f_minus_f", lhs}, {"int_ps_lf", in.int_lf[x]}};
    settle(r);
    out.push_back(std::move(r));
  }

  // Var_x f(X_t) = 2 int_0^t P_s Gamma(P_{t-s} f)(x) ds
  {
    InequalityReport r = base_report(ctx, "variance_representation", f_id, x, t);
    r.lhs = std::abs(in.variance[x] - in.representation[x]);
    r.rhs_terms = {{"tolerance", id_tol * std::max(1.0, std::abs(in.variance[x]))}};
    r.diagnostics = {{"variance", in.variance[x]}, {"representation", in.representation[x]}};
    settle(r);
    out.push_back(std::move(r));
  }

  // ratio sums behind C1 and C2 at this t, against the empirical constants
  if (!in.rows.empty()) {
    const DistributionVector& from_x = in.rows[x];
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const std::size_t dx = space.target(x, i);
      const DistributionVector& from_dx = in.rows[dx];
      const double t0 = peak_time_t0(jump_rates(space, x, i));
      double sum = 0.0;
      for (std::size_t y = 0; y < space.size(); ++y) {
        if (from_x[y] <= 0.0 || from_dx[y] <= 0.0) continue;
        if (t <= t0 && y == dx) continue;
        sum += from_dx[y] * from_dx[y] / from_x[y];
      }
      InequalityReport c1 = base_report(ctx, "ratio_c1", f_id, x, t);
      c1.variant = ConstantsVariant::Empirical;
      c1.lhs = sum;
      c1.rhs_terms = {{"C1", k.ratios.c1.empirical}};
      c1.diagnostics = {{"neuron", static_cast<double>(i)}, {"t0", t0}};
      settle(c1);
      out.push_back(std::move(c1));
      if (t <= t0 && from_x[dx] > 0.0) {
        InequalityReport c2 = base_report(ctx, "ratio_c2", f_id, x, t);
        c2.variant = ConstantsVariant::Empirical;
        c2.lhs = t * from_dx[dx] / from_x[dx];
        c2.rhs_terms = {{"C2", k.ratios.c2.empirical}};
        c2.diagnostics = {{"neuron", static_cast<double>(i)}, {"t0", t0}};
        settle(c2);
        out.push_back(std::move(c2));
      }
    }
  }

  // theta P_t(x, y) >= 1 on the refined grid past t1
  if (space.is_recurrent(x)) {
    InequalityReport r = base_report(ctx, "theta_lower_bound", f_id, x, ctx.theta_check_time(x));
    r.lhs = 1.0;
    r.rhs_terms = {{"min_theta_pt", ctx.theta_check_min(x)}};
    r.diagnostics = {{"theta", k.theta.theta}, {"t1", k.theta.t1}};
    settle(r);
    out.push_back(std::move(r));
  }

  // (int_{t0}^t (P_u L f(Delta_i x) - P_u L f(x)) du)^2 <= t (1 + C1) M int_{t0}^t P_u Gamma(x) du
  if (!in.lf_from_t0.empty()) {
    const double m = k.M_for(ConstantsVariant::Empirical);
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const std::size_t dx = space.target(x, i);
      const double gap = in.lf_from_t0[dx] - in.lf_from_t0[x];
      InequalityReport r = base_report(ctx, "expectation_gap", f_id, x, t);
      r.variant = ConstantsVariant::Empirical;
      r.lhs = gap * gap;
      r.rhs_terms = {{"t*(1+C1)*M*int_gamma", t * (1.0 + k.ratios.c1.empirical) * m * in.gamma_from_t0[x]}};
      r.diagnostics = {{"neuron", static_cast<double>(i)}};
      settle(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::TheoremGeneral:
      return "theorem_general";
    case CheckKind::TheoremRecurrent:
      return "theorem_recurrent";
    case CheckKind::Corollaries:
      return "corollaries";
    case CheckKind::Invariant:
      return "invariant";
    case CheckKind::Identities:
      return "identities";
  }
  return "unknown";
}

std::optional<CheckKind> parse_check_kind(const std::string& name) {
  for (CheckKind k : {CheckKind::TheoremGeneral, CheckKind::TheoremRecurrent, CheckKind::Corollaries,
                      CheckKind::Invariant, CheckKind::Identities}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<NamedObservable> random_observables(std::size_t n_states, std::size_t count, std::uint64_t seed) {
  const boost::math::normal standard;
  std::vector<NamedObservable> out;
  for (std::size_t k = 0; k < count; ++k) {
    PhiloxStream rng(seed, k);
    NamedObservable f{"random:" + std::to_string(seed) + ":" + std::to_string(k), Observable(n_states)};
    for (double& v : f.values) {
      double u = rng.uniform();
      if (u == 0.0) u = 0x1.0p-54;
      v = boost::math::quantile(standard, u);
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<NamedObservable> make_observables(const VerifyContext& ctx, std::size_t n_random, std::uint64_t seed,
                                              bool structured) {
  const StateSpace& space = ctx.space();
  std::vector<NamedObservable> out = random_observables(space.size(), n_random, seed);
  if (!structured) return out;
  for (std::size_t i = 0; i < space.n_neurons(); ++i) {
    NamedObservable f{"coordinate:" + std::to_string(i), Observable(space.size())};
    for (std::size_t u = 0; u < space.size(); ++u) f.values[u] = ctx.model().potential(space.state(u), i);
    out.push_back(std::move(f));
  }
  for (std::size_t y = 0; y < space.size(); ++y) {
    NamedObservable f{"indicator:" + std::to_string(y), Observable(space.size(), 0.0)};
    f.values[y] = 1.0;
    out.push_back(std::move(f));
  }
  if (!ctx.poincare().eigenfunction.empty()) out.push_back({"eigenfunction", ctx.poincare().eigenfunction});
  return out;
}

namespace {

bool wants(const SweepOptions& o, CheckKind k) { return std::find(o.checks.begin(), o.checks.end(), k) != o.checks.end(); }

// Reports for one (f, t, x) in a fixed order, so an ordinal identifies a report.
std::vector<InequalityReport> reports_for(const VerifyContext& ctx, const NamedObservable& f,
                                          const ObservableSnapshot& snap, const IdentityInputs* identities,
                                          std::size_t x, const SweepOptions& o) {
  std::vector<InequalityReport> out;
  if (wants(o, CheckKind::TheoremGeneral)) {
    for (ConstantsVariant v : o.variants) out.push_back(check_theorem_general(ctx, snap, f.id, x, v));
  }
  if (wants(o, CheckKind::TheoremRecurrent) && ctx.space().is_recurrent(x)) {
    for (ConstantsVariant v : o.variants) out.push_back(check_theorem_recurrent(ctx, snap, f.id, x, v));
  }
  if (wants(o, CheckKind::Corollaries)) {
    for (ConstantsVariant v : o.variants) {
      auto [a, b] = check_corollaries(ctx, snap, f.id, x, v);
      out.push_back(std::move(a));
      out.push_back(std::move(b));
    }
  }
  if (wants(o, CheckKind::Identities)) {
    for (auto& r : check_identities(ctx, *identities, f.id, x)) out.push_back(std::move(r));
  }
  return out;
}

struct Located {
  InequalityReport report;
  std::size_t f = 0;
  std::size_t t = 0;
  std::size_t x = 0;
  std::size_t ordinal = 0;
  bool invariant = false;
};

double relative(const InequalityReport& r) {
  if (r.rhs != 0.0) return r.margin / std::abs(r.rhs);
  return r.margin >= 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
}

// Only the functional inequalities compete for the sweep-wide worst instance;
// identity residuals and grid restatements do not depend on f in that sense.
bool is_inequality(const InequalityReport& r) {
  return r.name.rfind("theorem_", 0) == 0 || r.name.rfind("corollary_", 0) == 0 || r.name == "invariant_poincare";
}

}  // namespace

SweepSummary random_observable_sweep(const VerifyContext& ctx, const SweepOptions& options) {
  return random_observable_sweep(ctx, make_observables(ctx, options.n_functions, options.seed, options.structured),
                                 options);
}

SweepSummary random_observable_sweep(const VerifyContext& ctx, const std::vector<NamedObservable>& observables,
                                     const SweepOptions& options) {
  for (double t : options.times) check_time(t);
  const double tol = ctx.expm_tol();
  std::vector<std::vector<Located>> per_f(observables.size());
  parallel_for(observables.size(), options.workers, [&](std::size_t fi) {
    const NamedObservable& f = observables[fi];
    auto& bucket = per_f[fi];
    for (std::size_t ti = 0; ti < options.times.size(); ++ti) {
      const ObservableSnapshot snap = snapshot(ctx, f.values, options.times[ti], tol);
      std::optional<IdentityInputs> identities;
      if (wants(options, CheckKind::Identities)) identities = prepare_identities(ctx, f.values, snap.t, tol);
      for (std::size_t x = 0; x < ctx.space().size(); ++x) {
        auto reports = reports_for(ctx, f, snap, identities ? &*identities : nullptr, x, options);
        for (std::size_t k = 0; k < reports.size(); ++k) bucket.push_back({std::move(reports[k]), fi, ti, x, k, false});
      }
    }
    if (wants(options, CheckKind::Invariant)) {
      bucket.push_back({check_invariant_poincare(ctx, f.values, f.id), fi, 0, 0, 0, true});
    }
  });

  SweepSummary summary;
  summary.n_observables = observables.size();
  const Located* worst = nullptr;
  for (const auto& bucket : per_f) {
    for (const Located& item : bucket) {
      const InequalityReport& r = item.report;
      auto it = std::find_if(summary.checks.begin(), summary.checks.end(),
                             [&](const CheckSummary& c) { return c.name == r.name && c.variant == r.variant; });
      if (it == summary.checks.end()) {
        summary.checks.push_back({r.name, r.variant, 0, 0, 0, std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity(), std::nullopt});
        it = summary.checks.end() - 1;
      }
      if (r.status == CheckStatus::Skipped) {
        ++it->skipped;
        continue;
      }
      if (r.status == CheckStatus::Pass) {
        ++it->passed;
      } else {
        ++it->failed;
        ++summary.failures;
      }
      it->min_margin = std::min(it->min_margin, r.margin);
      if (!it->worst || relative(r) < relative(*it->worst)) {
        it->min_relative_margin = relative(r);
        it->worst = r;
      }
      if (is_inequality(r) && (!worst || relative(r) < relative(worst->report))) worst = &item;
    }
  }

  if (worst) {
    const double tight = tol / 10.0;
    const NamedObservable& f = observables[worst->f];
    if (worst->invariant) {
      summary.worst_recheck = check_invariant_poincare(ctx, f.values, f.id);
    } else {
      const ObservableSnapshot snap = snapshot(ctx, f.values, options.times[worst->t], tight);
      std::optional<IdentityInputs> identities;
      if (wants(options, CheckKind::Identities)) identities = prepare_identities(ctx, f.values, snap.t, tight);
      auto again = reports_for(ctx, f, snap, identities ? &*identities : nullptr, worst->x, options);
      summary.worst_recheck = std::move(again.at(worst->ordinal));
    }
    summary.worst_recheck->notes = "re-evaluated at expm_tol = " + fmt(tight);
  }

  if (options.keep_reports) {
    for (auto& bucket : per_f) {
      for (auto& item : bucket) summary.reports.push_back(std::move(item.report));
    }
  }
  return summary;
}

}  // namespace pjmp
