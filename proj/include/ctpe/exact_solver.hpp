#pragma once

#include <functional>
#include <vector>

#include "ctpe/process_models.hpp"
#include "ctpe/scheme_coefficients.hpp"
#include "ctpe/value_approximation.hpp"

namespace ctpe {

// Collocation grid. Points must be strictly increasing; weights, when
// nonempty, must match in length and be nonnegative (empty means unit
// weights).
struct GridSpec {
  std::vector<double> points;
  std::vector<double> weights;
};

// cells+1 equally spaced points covering [a, b] inclusive.
GridSpec uniform_grid(double a, double b, int cells);

// Population-level (infinite-data) projected fixed point on a grid: solves
//   sum_g w_g psi(x_g) (psi(x_g) - d E[psi(X_{L eta})|x_g])^T theta
//     = sum_g w_g [eta sum_i kappa_i E[r(X_{i eta})|x_g]] psi(x_g)
// with d the scheme lookahead discount and L its lookahead steps.
// Conditional expectations use the model's closed forms when available and
// 64-point Gauss-Hermite quadrature otherwise; the model must carry an
// exact kernel. `parallel` assembles grid rows across threads (results may
// differ from the sequential sum at rounding level).
ValueApproximation solve_bellman_exact(const DiffusionModel& model, const FeatureMap& fm,
                                       const BellmanScheme& scheme, const GridSpec& grid,
                                       bool parallel = false);

// Same population projection for the generator form:
//   sum_g w_g psi(x_g) (beta psi(x_g) - (1/eta) sum_j c_j E[psi(X_{j eta})|x_g])^T theta
//     = sum_g w_g r(x_g) psi(x_g).
ValueApproximation solve_generator_exact(const DiffusionModel& model, const FeatureMap& fm,
                                         const GeneratorScheme& scheme, const GridSpec& grid,
                                         bool parallel = false);

// One application of the order-n Bellman operator
//   (T f)(x) = eta sum_i kappa_i E[r(X_{i eta})|x] + d E[f(X_{L eta})|x]
// evaluated at every grid point. The grid-values overload represents f by
// clamped linear interpolation of f_on_grid (a convex combination of grid
// values, so the discrete operator inherits the e^{-beta L eta} sup-norm
// contraction up to interpolation error).
std::vector<double> apply_bellman_operator(const BellmanScheme& scheme,
                                           const DiffusionModel& model,
                                           const std::vector<double>& f_on_grid,
                                           const GridSpec& grid);
std::vector<double> apply_bellman_operator(const BellmanScheme& scheme,
                                           const DiffusionModel& model,
                                           const std::function<double(double)>& f,
                                           const GridSpec& grid);

}  // namespace ctpe
