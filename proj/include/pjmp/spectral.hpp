#pragma once

#include <span>

#include "pjmp/exact_engine.hpp"

namespace pjmp {

/// Best constant C in Var_pi(f) <= C pi(Gamma(f, f)) on one closed class.
struct PoincareConstant {
  double constant = 0.0;  // 1 / gap; 0 on a single-state class
  double gap = 0.0;       // smallest nonzero eigenvalue of the symmetrised generator
  Observable eigenfunction;  // attains the constant; zero off the class
};

/// The Dirichlet form pi(Gamma(f, f)) only sees the pi-symmetric part of Q,
/// so the constant is the inverse spectral gap of -(Q + Q*)/2 in L^2(pi).
PoincareConstant optimal_poincare_constant(const RateMatrix& q, const DistributionVector& pi,
                                           std::span<const std::size_t> closed_class,
                                           const EngineOptions& options = {});

}  // namespace pjmp
