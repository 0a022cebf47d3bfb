#pragma once

// Certification harness: both sides of every inequality and identity on
// concrete (model, f, x, t) instances, with margins.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pjmp/constants.hpp"
#include "pjmp/exact_engine.hpp"
#include "pjmp/model.hpp"
#include "pjmp/spectral.hpp"
#include "pjmp/statespace.hpp"

namespace pjmp {

enum class CheckStatus { Pass, Fail, Skipped };

std::string to_string(CheckStatus s);

struct Instance {
  std::string model_hash;
  std::string f_id;
  std::optional<std::size_t> x;
  std::optional<double> t;
};

struct InequalityReport {
  std::string name;
  Instance instance;
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> rhs_terms;
  double rhs = 0.0;
  std::optional<ConstantsVariant> variant;
  double margin = 0.0;  // rhs - lhs
  CheckStatus status = CheckStatus::Skipped;
  std::string notes;
  // values reported alongside the check that do not enter the rhs
  std::vector<std::pair<std::string, double>> diagnostics;

  bool pass() const noexcept { return status != CheckStatus::Fail; }
};

/// margin >= -1e-9 max(1, |rhs|).
bool within_tolerance(double margin, double rhs);

/// Fills rhs, margin and status from lhs and rhs_terms.
void settle(InequalityReport& report);

struct VerifyOptions {
  ConstantsOptions constants;
  std::size_t max_states = kDefaultMaxStates;
  double identity_tol = 1e-7;
};

/// Everything the checks share for one (model, x0): the space, generator,
/// kernel, constants, invariant law and optimal Poincare constant.
class VerifyContext {
 public:
  VerifyContext(NeuronModel model, const State& x0, const VerifyOptions& options = {});

  const NeuronModel& model() const noexcept { return model_; }
  const StateSpace& space() const noexcept { return space_; }
  const RateMatrix& q() const noexcept { return q_; }
  const TransitionKernel& kernel() const noexcept { return kernel_; }
  const ConstantsReport& constants() const noexcept { return constants_; }
  const DistributionVector& pi() const noexcept { return pi_; }
  const PoincareConstant& poincare() const noexcept { return poincare_; }
  const std::string& model_hash() const noexcept { return hash_; }
  const VerifyOptions& options() const noexcept { return options_; }
  double expm_tol() const noexcept { return options_.constants.engine.expm_tol; }

  /// min over y in the class and the x2-refined theta grid of theta * P_t(x, y), for x in the class.
  double theta_check_min(std::size_t x) const { return theta_check_[x]; }
  double theta_check_time(std::size_t x) const { return theta_check_t_[x]; }

 private:
  NeuronModel model_;
  VerifyOptions options_;
  StateSpace space_;
  RateMatrix q_;
  TransitionKernel kernel_;
  ConstantsReport constants_;
  DistributionVector pi_;
  PoincareConstant poincare_;
  std::string hash_;
  std::vector<double> theta_check_;
  std::vector<double> theta_check_t_;
};

/// Stable hex digest of the validated model parameters.
std::string model_hash(const NeuronModel& model);

/// Per-(f, t) quantities, for every start state at once.
struct ObservableSnapshot {
  double t = 0.0;
  Observable gamma;      // Gamma(f, f)
  Observable variance;   // P_t f^2 - (P_t f)^2
  Observable int_gamma;  // int_0^t P_s Gamma(f, f) ds
  Observable pt_gamma;   // P_t Gamma(f, f)
};

ObservableSnapshot snapshot(const VerifyContext& ctx, std::span<const double> f, double t, double tol);
inline ObservableSnapshot snapshot(const VerifyContext& ctx, std::span<const double> f, double t) {
  return snapshot(ctx, f, t, ctx.expm_tol());
}

/// Var_x f(X_t) <= alpha(t) int_0^t P_s Gamma(x) ds + beta sum_i int_0^t P_s Gamma(Delta_i x) ds.
InequalityReport check_theorem_general(const VerifyContext& ctx, const ObservableSnapshot& snap,
                                       const std::string& f_id, std::size_t x, ConstantsVariant variant);
InequalityReport check_theorem_general(const VerifyContext& ctx, std::span<const double> f,
                                       const std::string& f_id, std::size_t x, double t, ConstantsVariant variant);

/// Var_x f(X_t) <= gamma(t) P_t Gamma(x) + 2 int_0^t P_s Gamma(x) ds for x in D-hat, t > t1.
/// Throws NotInRecurrentDomain off D-hat; skipped for t <= t1.
InequalityReport check_theorem_recurrent(const VerifyContext& ctx, const ObservableSnapshot& snap,
                                         const std::string& f_id, std::size_t x, ConstantsVariant variant);
InequalityReport check_theorem_recurrent(const VerifyContext& ctx, std::span<const double> f,
                                         const std::string& f_id, std::size_t x, double t, ConstantsVariant variant);

/// The two large-time corollaries: Var <= 2 alpha(t) int P_s Gamma(x) when t > zeta(f)
/// and the alpha term dominates, and Var <= 2 gamma(t) P_t Gamma(x) when
/// t > max(xi(f), t1) and the gamma term dominates. Skipped otherwise.
std::pair<InequalityReport, InequalityReport> check_corollaries(const VerifyContext& ctx,
                                                                const ObservableSnapshot& snap,
                                                                const std::string& f_id, std::size_t x,
                                                                ConstantsVariant variant);
std::pair<InequalityReport, InequalityReport> check_corollaries(const VerifyContext& ctx, std::span<const double> f,
                                                                const std::string& f_id, std::size_t x, double t,
                                                                ConstantsVariant variant);

/// Var_pi(f) <= C0 pi(Gamma(f, f)); also reports the optimal constant and C0 / optimal.
InequalityReport check_invariant_poincare(const VerifyContext& ctx, std::span<const double> f,
                                          const std::string& f_id);

/// All-state vectors the identity checks need for one (f, t).
struct IdentityInputs {
  double t = 0.0;
  double tol = 0.0;
  Observable f;
  Observable pt_f;              // P_t f
  Observable int_lf;            // int_0^t P_s L f ds
  Observable variance;          // P_t f^2 - (P_t f)^2
  Observable representation;    // 2 int_0^t P_s Gamma(P_{t-s} f) ds
  Observable lf_from_t0;        // int_{t0*}^t P_u L f du (when t > t0*)
  Observable gamma_from_t0;     // int_{t0*}^t P_u Gamma(f, f) du (when t > t0*)
  std::vector<DistributionVector> rows;  // P_t(u, .) for every u
};

IdentityInputs prepare_identities(const VerifyContext& ctx, std::span<const double> f, double t, double tol);

/// Dynkin, the variance representation Var = 2 int_0^t P_s Gamma(P_{t-s} f) ds, the ratio
/// bounds behind C1 / C2, the theta lower bound on D-hat and the expectation-gap bound.
std::vector<InequalityReport> check_identities(const VerifyContext& ctx, const IdentityInputs& in,
                                               const std::string& f_id, std::size_t x);
std::vector<InequalityReport> check_identities(const VerifyContext& ctx, std::span<const double> f,
                                               const std::string& f_id, std::size_t x, double t);
std::vector<InequalityReport> check_identities(const VerifyContext& ctx, std::span<const double> f,
                                               const std::string& f_id, std::size_t x, double t, double tol);

/// 2 int_0^t P_s Gamma(P_{t-s} f) ds for every start state, by composite Gauss-Legendre quadrature.
Observable variance_representation(const VerifyContext& ctx, std::span<const double> f, double t, double tol);

enum class CheckKind { TheoremGeneral, TheoremRecurrent, Corollaries, Invariant, Identities };

std::string to_string(CheckKind k);
std::optional<CheckKind> parse_check_kind(const std::string& name);

struct NamedObservable {
  std::string id;
  Observable values;
};

/// `count` observables with iid N(0, 1) values, observable k drawn from stream (seed, k).
std::vector<NamedObservable> random_observables(std::size_t n_states, std::size_t count, std::uint64_t seed);

/// `n_random` iid N(0, 1) observables from `seed`, then (if `structured`) the
/// coordinate projections, state indicators and the optimal eigenfunction.
std::vector<NamedObservable> make_observables(const VerifyContext& ctx, std::size_t n_random, std::uint64_t seed,
                                              bool structured = true);

struct SweepOptions {
  std::size_t n_functions = 0;
  std::uint64_t seed = 0;
  bool structured = true;
  std::vector<double> times;
  std::vector<CheckKind> checks{CheckKind::TheoremGeneral, CheckKind::TheoremRecurrent, CheckKind::Corollaries,
                                CheckKind::Invariant, CheckKind::Identities};
  std::vector<ConstantsVariant> variants{ConstantsVariant::Empirical, ConstantsVariant::Paper};
  std::size_t workers = 1;
  bool keep_reports = true;
};

struct CheckSummary {
  std::string name;
  std::optional<ConstantsVariant> variant;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  double min_margin = 0.0;
  double min_relative_margin = 0.0;  // margin / |rhs|
  std::optional<InequalityReport> worst;
};

struct SweepSummary {
  std::vector<InequalityReport> reports;
  std::vector<CheckSummary> checks;
  std::size_t n_observables = 0;
  std::size_t failures = 0;
  // the theorem / corollary / invariant instance with the smallest relative
  // margin, re-evaluated at a 10x tighter engine tolerance
  std::optional<InequalityReport> worst_recheck;

  bool all_passed() const noexcept { return failures == 0; }
};

SweepSummary random_observable_sweep(const VerifyContext& ctx, const SweepOptions& options);
SweepSummary random_observable_sweep(const VerifyContext& ctx, const std::vector<NamedObservable>& observables,
                                     const SweepOptions& options);

}  // namespace pjmp
