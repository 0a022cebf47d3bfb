#pragma once

// Every named constant of the Poincare-type bounds, computed two ways: by the
// constructive formulas (conservative, "paper" variant) and by direct
// evaluation over the enumerated space ("empirical", sharp).

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pjmp/exact_engine.hpp"
#include "pjmp/model.hpp"
#include "pjmp/statespace.hpp"

namespace pjmp {

enum class ConstantsVariant { Paper, Empirical };

std::string to_string(ConstantsVariant v);

struct BoundPair {
  double paper_bound = 0.0;
  double empirical = 0.0;
};

/// Where an extremum over (x, neuron i, y, t) was attained.
struct GridLocation {
  std::size_t x = 0;
  std::size_t neuron = 0;
  std::size_t y = 0;
  double t = 0.0;
};

struct ConstantsOptions {
  std::size_t points_per_decade = 64;
  std::size_t theta_points = 256;
  // use sup phi = phi(m) instead of N phi(m) in the C2 bound
  bool per_neuron_sup = false;
  // refine the t-grid x2 and flag GridTooCoarse if C1 or C2 move by > 5%
  bool refinement_check = true;
  // times that must be on the ratio grid (e.g. the times a run checks at)
  std::vector<double> extra_times;
  std::size_t workers = 1;
  EngineOptions engine;
};

struct MaxIntensity {
  double empirical = 0.0;  // max over enumerated states of phi-bar
  double coarse = 0.0;     // N phi(m)
};

MaxIntensity compute_M(const NeuronModel& model, const StateSpace& space);

/// max over (x, i) of the one-jump peak time t0(x, i).
double compute_t0_star(const StateSpace& space);

/// Log-spaced grid over [lo, hi] with `per_decade` points per decade, merged
/// with `extra` (points outside (0, inf) dropped), sorted and de-duplicated.
std::vector<double> log_grid(double lo, double hi, std::size_t per_decade, const std::vector<double>& extra = {});

/// Poisson terms forced when evaluating ratios of transition probabilities:
/// the longest jump distance in the space plus a margin.
std::size_t ratio_min_terms(const StateSpace& space);

struct RatioConstants {
  BoundPair c1;
  BoundPair c2;
  BoundPair m_d;
  GridLocation c1_argmax;
  GridLocation c2_argmax;
  std::vector<double> grid;
  // set when the x2 refinement moved C1 or C2 by more than 5%
  bool grid_too_coarse = false;
  double c1_refined = 0.0;
  double c2_refined = 0.0;
};

/// Ratio bounds between rows of P_t. Empirical C1 is the max over (x, i),
/// the grid and each peak time t0(x, i) of sum_y P_t(Delta_i x, y)^2 / P_t(x, y),
/// dropping y = Delta_i x while t <= t0(x, i); empirical C2 the max of
/// t P_t(Dx, Dx) / P_t(x, Dx) over the same times with t <= t0(x, i).
RatioConstants compute_ratio_constants(const NeuronModel& model, const StateSpace& space,
                                       const TransitionKernel& kernel, double t0_star, double t1,
                                       const ConstantsOptions& options);

struct ThetaResult {
  double theta = 0.0;
  double t1 = 0.0;
  double window = 0.0;  // grid covers [t1, t1 + window]
  GridLocation argmin;
  bool stationary_min = false;  // minimum came from min pi rather than the grid
};

/// Linear time grid of `points` over [t1, t1 + window].
std::vector<double> theta_grid(double t1, double window, std::size_t points);

/// theta = 1 / min of P_t(x, y) over x, y in the closed class and the grid, and min pi.
ThetaResult compute_theta_t1(const StateSpace& space, const TransitionKernel& kernel, const DistributionVector& pi,
                             double gap, double t0_star, double delta, const ConstantsOptions& options);

/// min over the grid, x, y in the closed class of theta * P_t(x, y).
double theta_grid_minimum(const StateSpace& space, const TransitionKernel& kernel, double theta, double t1,
                          double window, std::size_t points, double tol = kDefaultExpmTol);

struct ConstantsReport {
  std::size_t n_neurons = 0;
  std::size_t n_states = 0;
  std::size_t n_recurrent = 0;
  double delta = 0.0;
  MaxIntensity M;
  double t0_star = 0.0;
  RatioConstants ratios;
  ThetaResult theta;
  double min_pi = 0.0;
  double C0 = 0.0;
  double optimal_poincare = 0.0;
  double spectral_gap = 0.0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> provenance;

  double M_for(ConstantsVariant v) const;
  double C1_for(ConstantsVariant v) const;
};

/// Full pipeline on a space whose recurrent domain is a single closed class.
ConstantsReport compute_constants(const NeuronModel& model, const StateSpace& space, const RateMatrix& q,
                                  const TransitionKernel& kernel, const ConstantsOptions& options = {});

/// Time-dependent coefficients of the bounds, for one constants variant.
class RatePolynomials {
 public:
  RatePolynomials(const ConstantsReport& report, ConstantsVariant variant);

  ConstantsVariant variant() const noexcept { return variant_; }
  double M() const noexcept { return m_; }
  double C1() const noexcept { return c1_; }
  double t0() const noexcept { return t0_; }
  double theta() const noexcept { return theta_; }

  /// c(t) = 8 t0 M (C1 + 1) + 2 t (1 + C1) M
  double c(double t) const;
  /// alpha(t) = 2 + 2 M t c(t)
  double alpha(double t) const;
  /// beta = 32 t0^2 M^2
  double beta() const;
  /// gamma(t) = 8 theta^2 M^2 N t^3
  double gamma(double t) const;
  /// C0 = N^2 / (2 min pi delta)
  double C0() const noexcept { return c0_; }

  /// Threshold past which the alpha-term of the general bound is claimed to dominate:
  /// sqrt(6 t0 sum_i P_t Gamma(Delta_i x) / ((1 + C1) int_0^t P_s Gamma(x) ds)). NaN when 0/0.
  double zeta(double sum_pt_gamma_neighbours, double integral_gamma) const;
  /// cbrt(int_0^t P_s Gamma(x) ds / (4 theta^2 M^2 N P_t Gamma(x))). NaN when 0/0.
  double xi(double integral_gamma, double pt_gamma) const;

 private:
  ConstantsVariant variant_;
  double m_ = 0.0, c1_ = 0.0, t0_ = 0.0, theta_ = 0.0, c0_ = 0.0;
  double n_ = 0.0;
};

RatePolynomials assemble_rate_polynomials(const ConstantsReport& report, ConstantsVariant variant);

}  // namespace pjmp
