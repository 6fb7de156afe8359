#pragma once

#include <vector>

namespace ctpe {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// N-point Gauss-Hermite rule for weight e^{-x^2} on R. With Z standard
// normal, E[g(mu + s Z)] = (1/sqrt(pi)) * sum_i w_i g(mu + s*sqrt(2)*x_i).
// Rules are computed once per N and cached.
const QuadratureRule& gauss_hermite(int n);

// N-point Gauss-Legendre rule for weight 1 on [-1, 1].
QuadratureRule gauss_legendre(int n);

// Gaussian conditional-expectation node count used by the exact solvers.
inline constexpr int kGaussHermitePoints = 64;

}  // namespace ctpe
