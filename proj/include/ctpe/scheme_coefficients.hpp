#pragma once

#include <vector>

#include "ctpe/errors.hpp"

namespace ctpe {

// Both discretization families are supported up to this order; higher-order
// stencils are too ill-conditioned to certify against the pinned tolerances.
inline constexpr int kMaxSchemeOrder = 8;

// Coefficients of an order-n multistep Bellman update with step eta and
// discount rate beta. For n >= 2 the update reads
//   V(x) = eta * sum_i kappa_i E[r(X_{i eta}) | x]
//        + lookahead_discount * E[V(X_{(n-1) eta}) | x],
// where kappa_i = (1/eta) int_0^{(n-1)eta} e^{-beta s} W_i(s) ds and W_i is
// the Lagrange weight of node i*eta. For n == 1 the lookahead is a single
// step and kappa holds one entry (see first_order_bellman).
struct BellmanScheme {
  int order = 1;
  double beta = 0.0;
  double eta = 0.0;
  std::vector<double> kappa;        // n entries for n >= 2, 1 entry for n == 1
  double lookahead_discount = 0.0;  // exp(-beta * lookahead_steps * eta)
  int lookahead_steps = 1;          // max(n - 1, 1)
  bool naive = false;               // kappa_0 = 1 variant (rectangle rule)
};

// Coefficients of an order-n generator stencil with step eta:
//   A_n f(x) = (1/eta) * sum_{j=0}^n c_j E[f(X_{j eta}) | x],
// solving the policy-evaluation system beta*V - A_n V = r.
//
// c is kept in extended precision: the moment conditions
// sum_j c_j j^k = [k == 1] are required to hold to 1e-10 absolute through
// n = 8, and double-rounded coefficients provably cannot reach that (one ulp
// of c_7 alone moves the k = 8 moment row by ~1.3e-9).
struct GeneratorScheme {
  int order = 1;
  double eta = 0.0;
  double beta = 0.0;
  std::vector<long double> c;  // n + 1 entries, c[0]..c[n]
};

// Lagrange weight W_i(s) for nodes {0, eta, ..., (n-1)eta}. Requires n >= 2
// and 0 <= i < n.
double lagrange_weight(int i, double s, int n, double eta);

// kappa_0..kappa_{n-1} for the order-n Bellman scheme; n in [2, 8],
// beta > 0, eta > 0. Integrated panelwise by extended-precision
// Gauss-Legendre against the Lagrange product form, which is stable at
// every rate (no small-a moment recursion, no monomial cancellation).
std::vector<double> kappa_coefficients(int n, double beta, double eta);

// One-step scheme: kappa_0 = (1 - e^{-beta eta})/(beta eta) for the
// exponentially weighted rule, kappa_0 = 1 for the naive rectangle rule.
BellmanScheme first_order_bellman(double beta, double eta, bool naive);

// Order-n Bellman scheme, n in [1, 8] (n == 1 gives the non-naive one-step
// rule).
BellmanScheme make_bellman_scheme(int n, double beta, double eta);

// Backward-difference-style weights c_0..c_n with sum_j c_j j^k = [k == 1]
// for k = 0..n (0^0 := 1); n in [1, 8]. Solved by partial-pivot LU and
// polished with extended-precision iterative refinement.
std::vector<long double> generator_coefficients(int n);

// Order-n generator scheme, n in [1, 8].
GeneratorScheme make_generator_scheme(int n, double beta, double eta);

}  // namespace ctpe
