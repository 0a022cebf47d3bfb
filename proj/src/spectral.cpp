#include "pjmp/spectral.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "pjmp/error.hpp"

namespace pjmp {

namespace {

struct SymmetrisedEntry {
  Eigen::Index a, b;
  double w;  // pi-symmetrised edge weight
};

std::vector<SymmetrisedEntry> symmetrised_edges(const RateMatrix& q, const DistributionVector& pi,
                                                std::span<const std::size_t> cls,
                                                const std::vector<std::ptrdiff_t>& local) {
  std::vector<SymmetrisedEntry> edges;
  for (std::size_t r = 0; r < cls.size(); ++r) {
    const std::size_t u = cls[r];
    for (std::size_t e = q.row_ptr[u]; e < q.row_ptr[u + 1]; ++e) {
      const std::ptrdiff_t c = local[q.cols[e]];
      if (c < 0) throw Error(ErrorCode::SingularSystem, "selected class is not closed");
      edges.push_back({static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), 0.5 * pi[u] * q.values[e]});
    }
  }
  return edges;
}

}  // namespace

PoincareConstant optimal_poincare_constant(const RateMatrix& q, const DistributionVector& pi,
                                           std::span<const std::size_t> cls, const EngineOptions& options) {
  PoincareConstant out;
  out.eigenfunction.assign(q.n, 0.0);
  const std::size_t k = cls.size();
  if (k <= 1) {
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }

  std::vector<std::ptrdiff_t> local(q.n, -1);
  Eigen::VectorXd inv_sqrt(static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < k; ++r) {
    local[cls[r]] = static_cast<std::ptrdiff_t>(r);
    const double p = pi[cls[r]];
    if (!(p > 0.0)) throw Error(ErrorCode::SingularSystem, "invariant measure vanishes inside the class");
    inv_sqrt(static_cast<Eigen::Index>(r)) = 1.0 / std::sqrt(p);
  }
  const auto edges = symmetrised_edges(q, pi, cls, local);
  const auto kk = static_cast<Eigen::Index>(k);

  Eigen::VectorXd vec;
  if (k <= options.dense_limit) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(kk, kk);
    for (const auto& e : edges) {
      lap(e.a, e.b) -= e.w;
      lap(e.b, e.a) -= e.w;
      lap(e.a, e.a) += e.w;
      lap(e.b, e.b) += e.w;
    }
    const Eigen::MatrixXd sym = inv_sqrt.asDiagonal() * lap * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "eigen solver failed");
    out.gap = solver.eigenvalues()(1);
    vec = solver.eigenvectors().col(1);
  } else {
    // Inverse iteration on (A + tau I), deflating the known kernel sqrt(pi).
    std::vector<Eigen::Triplet<double>> trip;
    double diag_max = 0.0;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(kk);
    for (const auto& e : edges) {
      const double w = e.w * inv_sqrt(e.a) * inv_sqrt(e.b);
      trip.emplace_back(e.a, e.b, -w);
      trip.emplace_back(e.b, e.a, -w);
      diag(e.a) += e.w * inv_sqrt(e.a) * inv_sqrt(e.a);
      diag(e.b) += e.w * inv_sqrt(e.b) * inv_sqrt(e.b);
    }
    diag_max = diag.maxCoeff();
    const double tau = 1e-8 * diag_max;
    for (Eigen::Index r = 0; r < kk; ++r) trip.emplace_back(r, r, diag(r) + tau);
    Eigen::SparseMatrix<double> a(kk, kk);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "sparse factorisation failed");

    Eigen::VectorXd kernel(kk);
    for (Eigen::Index r = 0; r < kk; ++r) kernel(r) = 1.0 / inv_sqrt(r);
    kernel.normalize();
    vec = Eigen::VectorXd::LinSpaced(kk, -1.0, 1.0);
    double rq = 0.0;
    for (int it = 0; it < 5000; ++it) {
      vec -= kernel.dot(vec) * kernel;
      vec.normalize();
      Eigen::VectorXd next = ldlt.solve(vec);
      next -= kernel.dot(next) * kernel;
      next.normalize();
      const double rq_next = next.dot(a * next) - tau;
      vec = next;
      if (it > 10 && std::abs(rq_next - rq) <= 1e-14 * std::abs(rq_next)) {
        rq = rq_next;
        break;
      }
      rq = rq_next;
    }
    out.gap = rq;
  }

  if (!(out.gap > 0.0) || !std::isfinite(out.gap)) {
    throw Error(ErrorCode::SingularSystem, "symmetrised generator has no positive gap; class not irreducible");
  }
  out.constant = 1.0 / out.gap;
  for (std::size_t r = 0; r < k; ++r) {
    out.eigenfunction[cls[r]] = vec(static_cast<Eigen::Index>(r)) * inv_sqrt(static_cast<Eigen::Index>(r));
  }
  return out;
}

}  // namespace pjmp
