#include "pjmp/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pjmp/error.hpp"
#include "pjmp/parallel.hpp"
#include "pjmp/spectral.hpp"

namespace pjmp {

std::string to_string(ConstantsVariant v) { return v == ConstantsVariant::Paper ? "paper" : "empirical"; }

MaxIntensity compute_M(const NeuronModel& model, const StateSpace& space) {
  MaxIntensity m;
  for (std::size_t u = 0; u < space.size(); ++u) m.empirical = std::max(m.empirical, space.total_rate(u));
  m.coarse = static_cast<double>(model.size()) * model.phi_max();
  return m;
}

double compute_t0_star(const StateSpace& space) {
  double best = 0.0;
  for (std::size_t u = 0; u < space.size(); ++u) {
    for (std::size_t i = 0; i < space.n_neurons(); ++i) best = std::max(best, peak_time_t0(jump_rates(space, u, i)));
  }
  return best;
}

std::vector<double> log_grid(double lo, double hi, std::size_t per_decade, const std::vector<double>& extra) {
  std::vector<double> grid;
  const double decades = std::log10(hi / lo);
  const auto steps = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(per_decade)));
  for (std::size_t k = 0; k <= steps; ++k) {
    grid.push_back(lo * std::pow(10.0, decades * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(steps, 1))));
  }
  for (double t : extra) {
    if (t > 0.0 && std::isfinite(t)) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

struct GridMax {
  double c1 = 0.0;
  double c2 = 0.0;
  GridLocation c1_at;
  GridLocation c2_at;
};

void merge_into(GridMax& into, const GridMax& m) {
  if (m.c1 > into.c1) {
    into.c1 = m.c1;
    into.c1_at = m.c1_at;
  }
  if (m.c2 > into.c2) {
    into.c2 = m.c2;
    into.c2_at = m.c2_at;
  }
}

GridMax scan_ratios(const StateSpace& space, const TransitionKernel& kernel, const std::vector<double>& grid,
                    std::size_t min_terms, const ConstantsOptions& options) {
  const std::size_t n = space.size();
  const std::size_t nn = space.n_neurons();
  std::vector<GridMax> per_t(grid.size());

  parallel_for(grid.size(), options.workers, [&](std::size_t g) {
    const double t = grid[g];
    const std::vector<double> p = kernel.matrix(t, options.engine.expm_tol, min_terms);
    GridMax best;
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t i = 0; i < nn; ++i) {
        const std::size_t dx = space.target(x, i);
        const double t0 = peak_time_t0(jump_rates(space, x, i));
        const bool short_time = t <= t0;
        double sum = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          const double den = p[x * n + y];
          const double num = p[dx * n + y];
          if (den <= 0.0 || num <= 0.0) continue;
          if (short_time && y == dx) continue;
          sum += num * num / den;
        }
        if (sum > best.c1) {
          best.c1 = sum;
          best.c1_at = {x, i, x, t};
        }
        if (short_time) {
          const double den = p[x * n + dx];
          if (den > 0.0) {
            const double v = t * p[dx * n + dx] / den;
            if (v > best.c2) {
              best.c2 = v;
              best.c2_at = {x, i, dx, t};
            }
          }
        }
      }
    }
    per_t[g] = best;
  });

  GridMax out;
  for (const GridMax& m : per_t) merge_into(out, m);
  return out;
}

}  // namespace

std::size_t ratio_min_terms(const StateSpace& space) {
  std::size_t best = 0;
  // all-pairs BFS is quadratic; past the dense limit fall back to twice the
  // eccentricity of the initial state
  const std::size_t sources = space.size() <= kDefaultDenseLimit ? space.size() : 1;
  for (std::size_t u = 0; u < sources; ++u) {
    for (std::size_t d : jump_distances(space, u)) {
      if (d != std::numeric_limits<std::size_t>::max()) best = std::max(best, d);
    }
  }
  if (sources < space.size()) best *= 2;
  return best + 30;
}

// The C2 ratio grows with t up to t0(x, i), so the sup over t <= t0 sits at
// the endpoint; evaluate both ratios there for every (x, i).
GridMax scan_peak_times(const StateSpace& space, const TransitionKernel& kernel, std::size_t min_terms,
                        const ConstantsOptions& options) {
  const std::size_t n = space.size();
  const std::size_t nn = space.n_neurons();
  std::vector<GridMax> per_x(n);

  parallel_for(n, options.workers, [&](std::size_t x) {
    GridMax best;
    for (std::size_t i = 0; i < nn; ++i) {
      const std::size_t dx = space.target(x, i);
      const double t0 = peak_time_t0(jump_rates(space, x, i));
      const DistributionVector px = kernel.distribution(x, t0, options.engine.expm_tol, min_terms);
      const DistributionVector pd = kernel.distribution(dx, t0, options.engine.expm_tol, min_terms);
      double sum = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        if (y == dx || px[y] <= 0.0 || pd[y] <= 0.0) continue;
        sum += pd[y] * pd[y] / px[y];
      }
      if (sum > best.c1) {
        best.c1 = sum;
        best.c1_at = {x, i, x, t0};
      }
      if (px[dx] > 0.0) {
        const double v = t0 * pd[dx] / px[dx];
        if (v > best.c2) {
          best.c2 = v;
          best.c2_at = {x, i, dx, t0};
        }
      }
    }
    per_x[x] = best;
  });

  GridMax out;
  for (const GridMax& m : per_x) merge_into(out, m);
  return out;
}

RatioConstants compute_ratio_constants(const NeuronModel& model, const StateSpace& space,
                                       const TransitionKernel& kernel, double t0_star, double t1,
                                       const ConstantsOptions& options) {
  RatioConstants out;
  const double lo = 1e-3 * t0_star;
  const double hi = 10.0 * t1;
  out.grid = log_grid(lo, hi, options.points_per_decade, options.extra_times);
  const std::size_t min_terms = ratio_min_terms(space);

  const GridMax peaks = scan_peak_times(space, kernel, min_terms, options);
  GridMax base = scan_ratios(space, kernel, out.grid, min_terms, options);
  merge_into(base, peaks);
  out.c1.empirical = base.c1;
  out.c2.empirical = base.c2;
  out.c1_argmax = base.c1_at;
  out.c2_argmax = base.c2_at;
  if (options.refinement_check) {
    const auto fine = log_grid(lo, hi, 2 * options.points_per_decade, options.extra_times);
    GridMax refined = scan_ratios(space, kernel, fine, min_terms, options);
    merge_into(refined, peaks);
    out.c1_refined = refined.c1;
    out.c2_refined = refined.c2;
    auto moved = [](double a, double b) { return std::abs(a - b) > 0.05 * std::max(std::abs(a), std::abs(b)); };
    out.grid_too_coarse = moved(base.c1, refined.c1) || moved(base.c2, refined.c2);
  }

  // Paper-variant bounds.
  const double n_phi_m = std::max(static_cast<double>(model.size()) * model.phi_max(), compute_M(model, space).empirical);
  const double sup_rate = options.per_neuron_sup ? model.phi_max() : n_phi_m;
  const double delta = model.delta();
  out.c2.paper_bound = std::exp(t0_star * sup_rate) / delta;

  // M_D: sup over s in (0, t0*) of (1 - e^{-s N phi(m)}) / p_s^i(x), and its
  // branch bound e^{t0* N phi(m)} / delta * branch(s).
  const double prefactor = std::exp(t0_star * n_phi_m) / delta;
  double md_emp = 0.0, md_branch = 0.0;
  for (double s : out.grid) {
    if (s >= t0_star) break;
    const double lost = -std::expm1(-s * n_phi_m);
    for (std::size_t x = 0; x < space.size(); ++x) {
      for (std::size_t i = 0; i < space.n_neurons(); ++i) {
        const JumpRates r = jump_rates(space, x, i);
        md_emp = std::max(md_emp, lost / one_jump_probability(r, s));
        double branch;
        if (r.equal_branch()) {
          branch = lost / s;
        } else {
          const double gap = r.before - r.after;
          branch = gap * lost / (-std::expm1(-s * gap));
        }
        md_branch = std::max(md_branch, branch);
      }
    }
  }
  out.m_d.empirical = md_emp;
  out.m_d.paper_bound = prefactor * md_branch;

  double worst = 0.0;
  for (std::size_t x = 0; x < space.size(); ++x) {
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const JumpRates r = jump_rates(space, x, i);
      const double peak = one_jump_probability(r, peak_time_t0(r));
      worst = std::max({worst, 1.0 / (peak * peak), (1.0 + out.m_d.paper_bound) * (1.0 + out.m_d.paper_bound)});
    }
  }
  out.c1.paper_bound = static_cast<double>(space.size()) * worst;
  return out;
}

std::vector<double> theta_grid(double t1, double window, std::size_t points) {
  std::vector<double> grid;
  if (points <= 1 || window <= 0.0) return {t1};
  for (std::size_t k = 0; k < points; ++k) {
    grid.push_back(t1 + window * static_cast<double>(k) / static_cast<double>(points - 1));
  }
  return grid;
}

namespace {

struct GridMin {
  double value = std::numeric_limits<double>::infinity();
  GridLocation at;
};

GridMin class_transition_minimum(const StateSpace& space, const TransitionKernel& kernel,
                                 const std::vector<double>& grid, double tol, std::size_t workers) {
  const auto& cls = space.recurrent().only();
  std::vector<GridMin> per_t(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t g) {
    GridMin best;
    for (std::size_t x : cls) {
      const DistributionVector row = kernel.distribution(x, grid[g], tol, cls.size() + 30);
      for (std::size_t y : cls) {
        if (row[y] < best.value) {
          best.value = row[y];
          best.at = {x, 0, y, grid[g]};
        }
      }
    }
    per_t[g] = best;
  });
  GridMin out;
  for (const GridMin& m : per_t) {
    if (m.value < out.value) out = m;
  }
  return out;
}

}  // namespace

ThetaResult compute_theta_t1(const StateSpace& space, const TransitionKernel& kernel, const DistributionVector& pi,
                             double gap, double t0_star, double delta, const ConstantsOptions& options) {
  ThetaResult out;
  out.t1 = 1.0 / delta + t0_star;
  out.window = std::isfinite(gap) ? 5.0 / gap : out.t1;
  const auto& cls = space.recurrent().only();

  const GridMin m = class_transition_minimum(space, kernel, theta_grid(out.t1, out.window, options.theta_points),
                                             options.engine.expm_tol, options.workers);
  double best = m.value;
  out.argmin = m.at;
  for (std::size_t y : cls) {
    if (pi[y] < best) {
      best = pi[y];
      out.argmin = {y, 0, y, std::numeric_limits<double>::infinity()};
      out.stationary_min = true;
    }
  }
  if (!(best > 0.0)) {
    throw Error(ErrorCode::NonPositiveProbability, "a transition probability inside the recurrent class vanished");
  }
  out.theta = 1.0 / best;
  return out;
}

double theta_grid_minimum(const StateSpace& space, const TransitionKernel& kernel, double theta, double t1,
                          double window, std::size_t points, double tol) {
  return theta * class_transition_minimum(space, kernel, theta_grid(t1, window, points), tol, 1).value;
}

double ConstantsReport::M_for(ConstantsVariant v) const {
  return v == ConstantsVariant::Paper ? std::max(M.coarse, M.empirical) : M.empirical;
}

double ConstantsReport::C1_for(ConstantsVariant v) const {
  return v == ConstantsVariant::Paper ? ratios.c1.paper_bound : ratios.c1.empirical;
}

ConstantsReport compute_constants(const NeuronModel& model, const StateSpace& space, const RateMatrix& q,
                                  const TransitionKernel& kernel, const ConstantsOptions& options) {
  ConstantsReport r;
  r.n_neurons = model.size();
  r.n_states = space.size();
  const auto& cls = space.recurrent().only();
  r.n_recurrent = cls.size();
  r.delta = model.delta();
  r.M = compute_M(model, space);
  r.t0_star = compute_t0_star(space);

  const DistributionVector pi = invariant_measure(q, cls, options.engine);
  const PoincareConstant sharp = optimal_poincare_constant(q, pi, cls, options.engine);
  r.optimal_poincare = sharp.constant;
  r.spectral_gap = sharp.gap;

  r.theta = compute_theta_t1(space, kernel, pi, sharp.gap, r.t0_star, r.delta, options);
  r.ratios = compute_ratio_constants(model, space, kernel, r.t0_star, r.theta.t1, options);
  if (r.ratios.grid_too_coarse) r.warnings.push_back("GridTooCoarse: C1 or C2 moved by more than 5% under x2 grid refinement");

  r.min_pi = std::numeric_limits<double>::infinity();
  for (std::size_t y : cls) r.min_pi = std::min(r.min_pi, pi[y]);
  const double n = static_cast<double>(model.size());
  r.C0 = n * n / (2.0 * r.min_pi * r.delta);

  r.provenance = {
      {"M.empirical", "max over enumerated states of the total intensity"},
      {"M.coarse", "N * phi(m)"},
      {"t0_star", "max over (x, i) of the peak time of s -> p_s^i(x)"},
      {"C1.empirical", "max over (x, i) and the t-grid plus each t0(x, i) of sum_y P_t(Delta_i x, y)^2 / P_t(x, y), y = Delta_i x dropped for t <= t0(x, i)"},
      {"C1.paper_bound", "|D_x| * max over (x, i) of max(1 / p^i_{t0}(x)^2, (1 + M_D)^2)"},
      {"C2.empirical", "max over (x, i) and t <= t0(x, i) on the grid plus t0(x, i) of t P_t(Dx, Dx) / P_t(x, Dx)"},
      {"C2.paper_bound", options.per_neuron_sup ? "exp(t0* phi(m)) / delta" : "exp(t0* N phi(m)) / delta"},
      {"M_D.empirical", "max over (x, i) and grid s < t0* of (1 - exp(-s N phi(m))) / p_s^i(x)"},
      {"M_D.paper_bound", "exp(t0* N phi(m)) / delta * max over (x, i) and grid s < t0* of the branch bound"},
      {"theta", "grid-certified surrogate: 1 / min of P_t(x, y) over x, y in D-hat, t on a linear grid over [t1, t1 + 5/gap], and min pi"},
      {"t1", "1 / delta + t0*"},
      {"C0", "N^2 / (2 min pi delta)"},
      {"optimal_poincare", "inverse spectral gap of the pi-symmetrised generator on D-hat"},
  };
  return r;
}

RatePolynomials::RatePolynomials(const ConstantsReport& report, ConstantsVariant variant)
    : variant_(variant),
      m_(report.M_for(variant)),
      c1_(report.C1_for(variant)),
      t0_(report.t0_star),
      theta_(report.theta.theta),
      c0_(report.C0),
      n_(static_cast<double>(report.n_neurons)) {}

double RatePolynomials::c(double t) const { return 8.0 * t0_ * m_ * (c1_ + 1.0) + 2.0 * t * (1.0 + c1_) * m_; }

double RatePolynomials::alpha(double t) const { return 2.0 + 2.0 * m_ * t * c(t); }

double RatePolynomials::beta() const { return 32.0 * t0_ * t0_ * m_ * m_; }

double RatePolynomials::gamma(double t) const { return 8.0 * theta_ * theta_ * m_ * m_ * n_ * t * t * t; }

double RatePolynomials::zeta(double sum_pt_gamma_neighbours, double integral_gamma) const {
  if (integral_gamma <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(6.0 * t0_ * sum_pt_gamma_neighbours / ((1.0 + c1_) * integral_gamma));
}

double RatePolynomials::xi(double integral_gamma, double pt_gamma) const {
  if (pt_gamma <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::cbrt(integral_gamma / (4.0 * theta_ * theta_ * m_ * m_ * n_ * pt_gamma));
}

RatePolynomials assemble_rate_polynomials(const ConstantsReport& report, ConstantsVariant variant) {
  return RatePolynomials(report, variant);
}

}  // namespace pjmp
