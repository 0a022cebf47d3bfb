#include "pjmp/serialize.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace pjmp {

namespace {

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson pair_json(const BoundPair& p) { return {{"paper_bound", num(p.paper_bound)}, {"empirical", num(p.empirical)}}; }

ojson opt_variant(const std::optional<ConstantsVariant>& v) { return v ? ojson(to_string(*v)) : ojson(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ojson to_json(const GridLocation& loc) {
  return {{"x", loc.x}, {"neuron", loc.neuron}, {"y", loc.y}, {"t", num(loc.t)}};
}

ojson to_json(const ConstantsReport& r) {
  ojson j;
  j["n_neurons"] = r.n_neurons;
  j["n_states"] = r.n_states;
  j["n_recurrent"] = r.n_recurrent;
  j["delta"] = num(r.delta);
  j["M"] = {{"empirical", num(r.M.empirical)}, {"coarse", num(r.M.coarse)}};
  j["t0_star"] = num(r.t0_star);
  j["C1"] = pair_json(r.ratios.c1);
  j["C2"] = pair_json(r.ratios.c2);
  j["M_D"] = pair_json(r.ratios.m_d);
  j["C1_argmax"] = to_json(r.ratios.c1_argmax);
  j["C2_argmax"] = to_json(r.ratios.c2_argmax);
  j["ratio_grid"] = {{"points", r.ratios.grid.size()},
                     {"min", r.ratios.grid.empty() ? ojson(nullptr) : num(r.ratios.grid.front())},
                     {"max", r.ratios.grid.empty() ? ojson(nullptr) : num(r.ratios.grid.back())},
                     {"C1_refined", num(r.ratios.c1_refined)},
                     {"C2_refined", num(r.ratios.c2_refined)},
                     {"too_coarse", r.ratios.grid_too_coarse}};
  ojson argmin = to_json(r.theta.argmin);
  j["theta"] = num(r.theta.theta);
  j["t1"] = num(r.theta.t1);
  j["theta_grid"] = {{"window", num(r.theta.window)}, {"argmin", argmin}, {"stationary_min", r.theta.stationary_min}};
  j["min_pi"] = num(r.min_pi);
  j["C0"] = num(r.C0);
  j["optimal_poincare"] = num(r.optimal_poincare);
  j["spectral_gap"] = num(r.spectral_gap);
  j["warnings"] = r.warnings;
  ojson prov = ojson::object();
  for (const auto& [k, v] : r.provenance) prov[k] = v;
  j["provenance"] = prov;
  return j;
}

ojson polynomials_json(const ConstantsReport& report, ConstantsVariant variant, std::span<const double> times) {
  const RatePolynomials p(report, variant);
  ojson j;
  j["variant"] = to_string(variant);
  j["M"] = num(p.M());
  j["C1"] = num(p.C1());
  j["beta"] = num(p.beta());
  j["C0"] = num(p.C0());
  ojson rows = ojson::array();
  for (double t : times) {
    rows.push_back({{"t", num(t)}, {"c", num(p.c(t))}, {"alpha", num(p.alpha(t))}, {"gamma", num(p.gamma(t))}});
  }
  j["at_times"] = rows;
  return j;
}

ojson to_json(const InequalityReport& r) {
  ojson j;
  j["name"] = r.name;
  j["instance"] = {{"model_hash", r.instance.model_hash},
                   {"f_id", r.instance.f_id},
                   {"x", r.instance.x ? ojson(*r.instance.x) : ojson(nullptr)},
                   {"t", r.instance.t ? num(*r.instance.t) : ojson(nullptr)}};
  j["variant"] = opt_variant(r.variant);
  j["status"] = to_string(r.status);
  if (r.status != CheckStatus::Skipped) {
    j["lhs"] = num(r.lhs);
    ojson terms = ojson::object();
    for (const auto& [k, v] : r.rhs_terms) terms[k] = num(v);
    j["rhs_terms"] = terms;
    j["rhs"] = num(r.rhs);
    j["margin"] = num(r.margin);
  }
  if (!r.diagnostics.empty()) {
    ojson d = ojson::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = num(v);
    j["diagnostics"] = d;
  }
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

ojson to_json(const CheckSummary& s) {
  ojson j;
  j["name"] = s.name;
  j["variant"] = opt_variant(s.variant);
  j["passed"] = s.passed;
  j["failed"] = s.failed;
  j["skipped"] = s.skipped;
  j["min_margin"] = num(s.min_margin);
  j["min_relative_margin"] = num(s.min_relative_margin);
  j["worst"] = s.worst ? to_json(*s.worst) : ojson(nullptr);
  return j;
}

ojson to_json(const SweepSummary& s) {
  ojson j;
  j["n_observables"] = s.n_observables;
  j["failures"] = s.failures;
  j["all_passed"] = s.all_passed();
  ojson checks = ojson::array();
  for (const auto& c : s.checks) checks.push_back(to_json(c));
  j["checks"] = checks;
  j["worst_recheck"] = s.worst_recheck ? to_json(*s.worst_recheck) : ojson(nullptr);
  return j;
}

ojson to_json(const Estimate& e) {
  return {{"mean", num(e.mean)}, {"std_error", num(e.std_error)}, {"n_paths", e.n_paths}, {"seed", e.seed}};
}

ojson to_json(const ChiSquareResult& r) {
  return {{"statistic", num(r.statistic)}, {"dof", r.dof}, {"p_value", num(r.p_value)}, {"bins", r.bins}};
}

ojson states_json(const NeuronModel& model, const StateSpace& space) {
  ojson rows = ojson::array();
  for (std::size_t u = 0; u < space.size(); ++u) {
    ojson jumps = ojson::array();
    for (std::size_t i = 0; i < space.n_neurons(); ++i) jumps.push_back(space.target(u, i));
    rows.push_back({{"index", u},
                    {"potentials", model.potentials(space.state(u))},
                    {"recurrent", space.is_recurrent(u)},
                    {"jumps", jumps}});
  }
  return rows;
}

std::string constants_csv(const ConstantsReport& r) {
  std::ostringstream out;
  out << "name,paper_bound,empirical\n";
  auto row = [&](const char* name, double paper, double emp) {
    out << name << ',' << format_double(paper) << ',' << format_double(emp) << '\n';
  };
  row("M", std::max(r.M.coarse, r.M.empirical), r.M.empirical);
  row("C1", r.ratios.c1.paper_bound, r.ratios.c1.empirical);
  row("C2", r.ratios.c2.paper_bound, r.ratios.c2.empirical);
  row("M_D", r.ratios.m_d.paper_bound, r.ratios.m_d.empirical);
  row("t0_star", r.t0_star, r.t0_star);
  row("t1", r.theta.t1, r.theta.t1);
  row("theta", r.theta.theta, r.theta.theta);
  row("C0", r.C0, r.optimal_poincare);
  row("delta", r.delta, r.delta);
  return out.str();
}

std::string states_csv(const NeuronModel& model, const StateSpace& space) {
  std::ostringstream out;
  out << "index,recurrent";
  for (std::size_t i = 0; i < space.n_neurons(); ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t u = 0; u < space.size(); ++u) {
    out << u << ',' << (space.is_recurrent(u) ? 1 : 0);
    for (double v : model.potentials(space.state(u))) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

std::string edges_csv(const StateSpace& space) {
  std::ostringstream out;
  out << "from,neuron,to,rate\n";
  for (std::size_t u = 0; u < space.size(); ++u) {
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      out << u << ',' << i << ',' << space.target(u, i) << ',' << format_double(space.rate(u, i)) << '\n';
    }
  }
  return out.str();
}

std::string margins_csv(std::span<const InequalityReport> reports) {
  std::ostringstream out;
  out << "name,variant,f_id,x,t,lhs,rhs,margin,status\n";
  for (const InequalityReport& r : reports) {
    out << r.name << ',' << (r.variant ? to_string(*r.variant) : "") << ',' << r.instance.f_id << ','
        << (r.instance.x ? std::to_string(*r.instance.x) : "") << ','
        << (r.instance.t ? format_double(*r.instance.t) : "") << ',';
    if (r.status == CheckStatus::Skipped) {
      out << ",,,";
    } else {
      out << format_double(r.lhs) << ',' << format_double(r.rhs) << ',' << format_double(r.margin) << ',';
    }
    out << to_string(r.status) << '\n';
  }
  return out.str();
}

}  // namespace pjmp
