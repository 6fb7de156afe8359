#pragma once

#include "ctpe/basis_functions.hpp"
#include "ctpe/linear_system.hpp"

namespace ctpe {

// Fitted linear value function V(x) = theta . psi(x), with the solve
// diagnostics of the Galerkin/least-squares system that produced it.
// sample_count is the number of summed windows (estimators) or grid rows
// (exact solvers).
struct ValueApproximation {
  std::vector<double> theta;
  FeatureMap feature_map;
  SolveReport diagnostics;
  long long sample_count = 0;
};

double evaluate(const ValueApproximation& approx, double x);

}  // namespace ctpe
