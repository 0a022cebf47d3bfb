#include "pjmp/exact_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pjmp/error.hpp"
#include "pjmp/poisson.hpp"
#include "pjmp/simd/kernels.hpp"

namespace pjmp {

void check_time(double t) {
  if (!std::isfinite(t) || t < 0.0) {
    throw Error(ErrorCode::NonFiniteTime, "time must be finite and >= 0, got " + std::to_string(t));
  }
}

void check_tolerance(double tol) {
  if (!(tol > 0.0) || tol > 1e-6) {
    throw Error(ErrorCode::InvalidTolerance, "tolerance must lie in (0, 1e-6]");
  }
}

DistributionVector DistributionVector::normalized(std::vector<double> p) {
  double mass = 0.0;
  for (double& v : p) {
    if (v < 0.0 && v >= -1e-12) v = 0.0;
    mass += v;
  }
  if (mass > 0.0) {
    for (double& v : p) v /= mass;
  }
  return DistributionVector{std::move(p)};
}

double DistributionVector::expectation(std::span<const double> f) const {
  return simd::dot(probabilities, f);
}

TransitionKernel::TransitionKernel(const RateMatrix& q, double rate_bound) : n_(q.n) {
  lambda_ = std::max(q.max_exit_rate(), rate_bound);
  if (!(lambda_ > 0.0)) lambda_ = 1.0;  // every state absorbing: P = I

  row_ptr_.reserve(n_ + 1);
  row_ptr_.push_back(0);
  for (std::size_t u = 0; u < n_; ++u) {
    bool placed_diag = false;
    auto put_diag = [&] {
      cols_.push_back(static_cast<std::uint32_t>(u));
      vals_.push_back(1.0 + q.diagonal[u] / lambda_);
      placed_diag = true;
    };
    for (std::size_t k = q.row_ptr[u]; k < q.row_ptr[u + 1]; ++k) {
      if (!placed_diag && q.cols[k] > u) put_diag();
      cols_.push_back(q.cols[k]);
      vals_.push_back(q.values[k] / lambda_);
    }
    if (!placed_diag) put_diag();
    row_ptr_.push_back(cols_.size());
  }

  // transpose
  std::vector<std::size_t> count(n_ + 1, 0);
  for (std::uint32_t c : cols_) ++count[c + 1];
  t_row_ptr_.assign(n_ + 1, 0);
  std::partial_sum(count.begin(), count.end(), t_row_ptr_.begin());
  t_cols_.resize(cols_.size());
  t_vals_.resize(vals_.size());
  std::vector<std::size_t> fill(t_row_ptr_.begin(), t_row_ptr_.end() - 1);
  for (std::size_t u = 0; u < n_; ++u) {
    for (std::size_t k = row_ptr_[u]; k < row_ptr_[u + 1]; ++k) {
      const std::size_t slot = fill[cols_[k]]++;
      t_cols_[slot] = static_cast<std::uint32_t>(u);
      t_vals_[slot] = vals_[k];
    }
  }
}

DistributionVector TransitionKernel::distribution(std::size_t start, double t, double tol,
                                                  std::size_t min_terms) const {
  std::vector<double> mu(n_, 0.0);
  mu.at(start) = 1.0;
  return propagate(mu, t, tol, min_terms);
}

DistributionVector TransitionKernel::propagate(std::span<const double> mu, double t, double tol,
                                               std::size_t min_terms) const {
  check_time(t);
  check_tolerance(tol);
  const PoissonWeights w = poisson_weights(lambda_ * t, tol, min_terms);
  std::vector<double> v(mu.begin(), mu.end()), next(n_), acc(n_, 0.0);
  simd::axpy(w.pmf[0], v, acc);
  for (std::size_t k = 1; k < w.terms(); ++k) {
    simd::spmv(backward(), v, next);
    v.swap(next);
    simd::axpy(w.pmf[k], v, acc);
  }
  return DistributionVector::normalized(std::move(acc));
}

Observable TransitionKernel::apply(double t, std::span<const double> g, double tol) const {
  check_time(t);
  check_tolerance(tol);
  const PoissonWeights w = poisson_weights(lambda_ * t, tol);
  std::vector<double> v(g.begin(), g.end()), next(n_), acc(n_, 0.0);
  simd::axpy(w.pmf[0], v, acc);
  for (std::size_t k = 1; k < w.terms(); ++k) {
    simd::spmv(forward(), v, next);
    v.swap(next);
    simd::axpy(w.pmf[k], v, acc);
  }
  for (double& a : acc) a /= w.kept_mass;  // rows of the truncated sum carry kept_mass
  return acc;
}

Observable TransitionKernel::integrate(double t, std::span<const double> g, double tol) const {
  check_time(t);
  check_tolerance(tol);
  std::vector<double> acc(n_, 0.0);
  if (t == 0.0) return acc;
  double scale = 1.0;
  for (double x : g) scale = std::max(scale, std::abs(x));
  // int_0^t e^{sQ} ds = (1/Lambda) sum_k Pr[N >= k+1] P^k
  const PoissonWeights w = poisson_weights(lambda_ * t, tol * std::min(1.0, lambda_) / scale);
  std::vector<double> v(g.begin(), g.end()), next(n_);
  simd::axpy(w.tail_above[0], v, acc);
  for (std::size_t k = 1; k < w.terms(); ++k) {
    simd::spmv(forward(), v, next);
    v.swap(next);
    simd::axpy(w.tail_above[k], v, acc);
  }
  for (double& a : acc) a /= lambda_;
  return acc;
}

std::vector<double> TransitionKernel::matrix(double t, double tol, std::size_t min_terms) const {
  std::vector<double> out(n_ * n_);
  for (std::size_t u = 0; u < n_; ++u) {
    const DistributionVector row = distribution(u, t, tol, min_terms);
    std::copy(row.probabilities.begin(), row.probabilities.end(), out.begin() + static_cast<std::ptrdiff_t>(u * n_));
  }
  return out;
}

std::vector<double> transition_probabilities(const TransitionKernel& kernel, double t, double tol) {
  return kernel.matrix(t, tol);
}

double semigroup_apply(const TransitionKernel& kernel, double t, std::span<const double> f, std::size_t x,
                       double tol) {
  return kernel.distribution(x, t, tol).expectation(f);
}

double semigroup_time_integral(const TransitionKernel& kernel, double t, std::span<const double> g,
                               std::size_t x, double tol) {
  return kernel.integrate(t, g, tol).at(x);
}

std::vector<double> left_apply(const RateMatrix& q, std::span<const double> mu) {
  std::vector<double> out(q.n, 0.0);
  for (std::size_t u = 0; u < q.n; ++u) {
    out[u] += mu[u] * q.diagonal[u];
    for (std::size_t k = q.row_ptr[u]; k < q.row_ptr[u + 1]; ++k) out[q.cols[k]] += mu[u] * q.values[k];
  }
  return out;
}

DistributionVector invariant_measure(const RateMatrix& q, std::span<const std::size_t> closed_class,
                                     const EngineOptions& options) {
  const std::size_t k = closed_class.size();
  if (k == 0) throw Error(ErrorCode::MultipleClosedClasses, "no closed class selected");
  std::vector<double> pi(q.n, 0.0);
  if (k == 1) {
    pi[closed_class[0]] = 1.0;
    return DistributionVector{std::move(pi)};
  }

  std::vector<std::ptrdiff_t> local(q.n, -1);
  for (std::size_t a = 0; a < k; ++a) local[closed_class[a]] = static_cast<std::ptrdiff_t>(a);

  // Solve Q_cc^T pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  rhs(static_cast<Eigen::Index>(k - 1)) = 1.0;
  Eigen::VectorXd sol;
  const auto last = static_cast<Eigen::Index>(k - 1);

  if (k <= options.dense_limit) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t u = closed_class[r];
      const auto col = static_cast<Eigen::Index>(r);
      a(col, col) += q.diagonal[u];
      for (std::size_t e = q.row_ptr[u]; e < q.row_ptr[u + 1]; ++e) {
        const std::ptrdiff_t c = local[q.cols[e]];
        if (c < 0) throw Error(ErrorCode::SingularSystem, "selected class is not closed");
        a(c, col) += q.values[e];
      }
    }
    a.row(last).setOnes();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < static_cast<Eigen::Index>(k)) {
      throw Error(ErrorCode::SingularSystem, "stationary system is rank deficient");
    }
    sol = lu.solve(rhs);
    sol += lu.solve(rhs - a * sol);  // one refinement step
  } else {
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t r = 0; r < k; ++r) {
      const std::size_t u = closed_class[r];
      const auto col = static_cast<Eigen::Index>(r);
      if (col != last) trip.emplace_back(col, col, q.diagonal[u]);
      for (std::size_t e = q.row_ptr[u]; e < q.row_ptr[u + 1]; ++e) {
        const std::ptrdiff_t c = local[q.cols[e]];
        if (c < 0) throw Error(ErrorCode::SingularSystem, "selected class is not closed");
        if (c != last) trip.emplace_back(c, col, q.values[e]);
      }
      trip.emplace_back(last, col, 1.0);
    }
    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "sparse LU failed");
    sol = lu.solve(rhs);
    sol += lu.solve(rhs - a * sol);
  }

  for (std::size_t r = 0; r < k; ++r) pi[closed_class[r]] = sol(static_cast<Eigen::Index>(r));
  DistributionVector out = DistributionVector::normalized(std::move(pi));
  for (double p : out.probabilities) {
    if (!std::isfinite(p) || p < -1e-12) throw Error(ErrorCode::SingularSystem, "stationary solve broke down");
  }
  const std::vector<double> res = left_apply(q, out.probabilities);
  double worst = 0.0;
  for (double r : res) worst = std::max(worst, std::abs(r));
  if (worst > options.solve_tol) {
    throw Error(ErrorCode::SingularSystem, "stationary residual " + std::to_string(worst) + " above tolerance");
  }
  return out;
}

Observable variance_semigroup_all(const TransitionKernel& kernel, double t, std::span<const double> f, double tol) {
  std::vector<double> sq(f.size());
  for (std::size_t u = 0; u < f.size(); ++u) sq[u] = f[u] * f[u];
  const Observable m1 = kernel.apply(t, f, tol);
  const Observable m2 = kernel.apply(t, sq, tol);
  Observable var(f.size());
  for (std::size_t u = 0; u < f.size(); ++u) {
    const double v = m2[u] - m1[u] * m1[u];
    var[u] = (v < 0.0 && v >= -1e-12) ? 0.0 : v;
  }
  return var;
}

double variance_semigroup(const TransitionKernel& kernel, double t, std::span<const double> f, std::size_t x,
                          double tol) {
  const DistributionVector row = kernel.distribution(x, t, tol);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u) {
    m1 += row[u] * f[u];
    m2 += row[u] * f[u] * f[u];
  }
  const double v = m2 - m1 * m1;
  return (v < 0.0 && v >= -1e-12) ? 0.0 : v;
}

double variance_invariant(const DistributionVector& pi, std::span<const double> f) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t u = 0; u < f.size(); ++u) {
    m1 += pi[u] * f[u];
    m2 += pi[u] * f[u] * f[u];
  }
  const double v = m2 - m1 * m1;
  return (v < 0.0 && v >= -1e-12) ? 0.0 : v;
}

Observable apply_generator(const StateSpace& space, std::span<const double> f) {
  Observable out(space.size(), 0.0);
  for (std::size_t u = 0; u < space.size(); ++u) {
    double s = 0.0;
    for (std::size_t i = 0; i < space.n_neurons(); ++i) s += space.rate(u, i) * (f[space.target(u, i)] - f[u]);
    out[u] = s;
  }
  return out;
}

Observable carre_du_champ(const StateSpace& space, std::span<const double> f) {
  Observable out(space.size(), 0.0);
  for (std::size_t u = 0; u < space.size(); ++u) {
    double s = 0.0;
    for (std::size_t i = 0; i < space.n_neurons(); ++i) {
      const double d = f[space.target(u, i)] - f[u];
      s += space.rate(u, i) * d * d;
    }
    out[u] = 0.5 * s;
  }
  return out;
}

bool JumpRates::equal_branch() const noexcept { return std::abs(after - before) <= 1e-12 * before; }

JumpRates jump_rates(const NeuronModel& model, const State& x, std::size_t i) {
  return {model.phi(model.potential(x, i)), total_intensity(model, x),
          total_intensity(model, apply_jump(model, x, i))};
}

JumpRates jump_rates(const StateSpace& space, std::size_t u, std::size_t i) {
  return {space.rate(u, i), space.total_rate(u), space.total_rate(space.target(u, i))};
}

double no_jump_probability(const NeuronModel& model, double s, const State& x) {
  return std::exp(-s * total_intensity(model, x));
}

double one_jump_probability(const JumpRates& r, double s) {
  if (r.equal_branch()) return s * r.spiking * std::exp(-s * r.before);
  // phi_i / (a - b) (e^{-s b} - e^{-s a}) = phi_i e^{-s b} (1 - e^{-s (a - b)}) / (a - b)
  const double gap = r.before - r.after;
  return r.spiking * std::exp(-s * r.after) * (-std::expm1(-s * gap)) / gap;
}

double one_jump_probability(const NeuronModel& model, double s, const State& x, std::size_t i) {
  return one_jump_probability(jump_rates(model, x, i), s);
}

double peak_time_t0(const JumpRates& r) {
  if (r.equal_branch()) return 1.0 / r.before;
  const double gap = r.before - r.after;
  return std::log1p(gap / r.after) / gap;
}

double peak_time_t0(const NeuronModel& model, const State& x, std::size_t i) {
  return peak_time_t0(jump_rates(model, x, i));
}

}  // namespace pjmp
