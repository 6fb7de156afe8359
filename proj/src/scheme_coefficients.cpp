#include "ctpe/scheme_coefficients.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "ctpe/linear_system.hpp"

namespace ctpe {
namespace {

void check_order(int n, int lo) {
  if (n < lo || n > kMaxSchemeOrder) {
    throw DomainError("scheme order " + std::to_string(n) + " outside supported range [" +
                      std::to_string(lo) + ", " + std::to_string(kMaxSchemeOrder) + "]");
  }
}

void check_rates(double beta, double eta) {
  if (!(beta > 0.0)) throw DomainError("beta must be > 0");
  if (!(eta > 0.0)) throw DomainError("eta must be > 0");
}

// Nodes and weights of 16-point Gauss-Legendre on [-1, 1], generated once by
// Newton iteration on the Legendre recurrence, accurate to long double
// round-off. One panel integrates polynomials through degree 31 exactly.
struct GaussLegendre16 {
  static constexpr int kN = 16;
  std::array<long double, kN> node{};
  std::array<long double, kN> weight{};

  GaussLegendre16() {
    const auto eval = [](long double x, long double& p, long double& dp) {
      long double p0 = 1.0L, p1 = x;
      for (int j = 2; j <= kN; ++j) {
        const long double p2 = ((2.0L * j - 1.0L) * x * p1 - (j - 1.0L) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      p = p1;
      dp = kN * (x * p1 - p0) / (x * x - 1.0L);
    };
    for (int k = 0; k < (kN + 1) / 2; ++k) {
      long double x = std::cos(std::numbers::pi_v<long double> * (k + 0.75L) / (kN + 0.5L));
      long double p = 0.0L, dp = 1.0L;
      for (int it = 0; it < 64; ++it) {
        eval(x, p, dp);
        const long double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-21L) break;
      }
      eval(x, p, dp);
      node[k] = -x;
      node[kN - 1 - k] = x;
      weight[k] = weight[kN - 1 - k] = 2.0L / ((1.0L - x * x) * dp * dp);
    }
  }
};

}  // namespace

double lagrange_weight(int i, double s, int n, double eta) {
  if (n < 2 || n > kMaxSchemeOrder) {
    throw DomainError("lagrange_weight: order " + std::to_string(n) +
                      " outside supported range [2, " + std::to_string(kMaxSchemeOrder) + "]");
  }
  if (i < 0 || i >= n) throw DomainError("lagrange_weight: node index out of range");
  if (!(eta > 0.0)) throw DomainError("lagrange_weight: eta must be > 0");
  double w = 1.0;
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    w *= (s - j * eta) / ((i - j) * eta);
  }
  return w;
}

std::vector<double> kappa_coefficients(int n, double beta, double eta) {
  check_order(n, 2);
  check_rates(beta, eta);
  // Substituting s = eta*u: kappa_i = int_0^{n-1} e^{-a u} l_i(u) du with
  // a = beta*eta, so eta cancels out of the node polynomial entirely.
  //
  // The integral is taken panel by panel with Gauss-Legendre, evaluating
  // l_i in product form. Every factor is O(1), so there is none of the
  // cancellation that sinks monomial expansions or the upward moment
  // recursion (which divides by a and diverges for small beta*eta); the
  // polynomial factor is integrated exactly and the exponential remainder
  // is far below double round-off on unit panels.
  const long double a = static_cast<long double>(beta) * static_cast<long double>(eta);
  static const GaussLegendre16 gl;
  std::vector<double> kappa(n);
  for (int i = 0; i < n; ++i) {
    long double total = 0.0L;
    for (int panel = 0; panel + 1 < n; ++panel) {
      long double sum = 0.0L;
      for (int q = 0; q < GaussLegendre16::kN; ++q) {
        const long double u = panel + 0.5L + 0.5L * gl.node[q];
        long double l = 1.0L;
        for (int j = 0; j < n; ++j) {
          if (j != i) l *= (u - j) / static_cast<long double>(i - j);
        }
        sum += gl.weight[q] * l * std::exp(-a * u);
      }
      total += 0.5L * sum;
    }
    kappa[i] = static_cast<double>(total);
  }
  return kappa;
}

BellmanScheme first_order_bellman(double beta, double eta, bool naive) {
  check_rates(beta, eta);
  BellmanScheme s;
  s.order = 1;
  s.beta = beta;
  s.eta = eta;
  s.naive = naive;
  s.lookahead_steps = 1;
  s.lookahead_discount = std::exp(-beta * eta);
  s.kappa = {naive ? 1.0 : -std::expm1(-beta * eta) / (beta * eta)};
  return s;
}

BellmanScheme make_bellman_scheme(int n, double beta, double eta) {
  check_order(n, 1);
  if (n == 1) return first_order_bellman(beta, eta, false);
  check_rates(beta, eta);
  BellmanScheme s;
  s.order = n;
  s.beta = beta;
  s.eta = eta;
  s.naive = false;
  s.lookahead_steps = n - 1;
  s.lookahead_discount = std::exp(-beta * (n - 1) * eta);
  s.kappa = kappa_coefficients(n, beta, eta);
  return s;
}

std::vector<long double> generator_coefficients(int n) {
  check_order(n, 1);
  // Moment system A c = b with A_{kj} = j^k (0^0 := 1), b_k = [k == 1],
  // solved through the shared linear_system path, then polished with
  // extended-precision residual refinement so the k = 0..n moments hold to
  // ~1e-13 even at n = 8 where the Vandermonde is badly conditioned.
  const int m = n + 1;
  Matrix A(m, m);
  std::vector<double> b(m, 0.0);
  b[1] = 1.0;
  for (int k = 0; k < m; ++k) {
    for (int j = 0; j < m; ++j) {
      double p = 1.0;
      for (int q = 0; q < k; ++q) p *= static_cast<double>(j);
      A(k, j) = p;
    }
  }
  std::vector<long double> c(m);
  {
    const SolveReport r = solve(A, b);
    for (int j = 0; j < m; ++j) c[j] = static_cast<long double>(r.solution[j]);
  }
  for (int sweep = 0; sweep < 6; ++sweep) {
    std::vector<double> resid(m);
    for (int k = 0; k < m; ++k) {
      long double s = (k == 1) ? 1.0L : 0.0L;
      for (int j = 0; j < m; ++j) {
        long double p = 1.0L;
        for (int q = 0; q < k; ++q) p *= static_cast<long double>(j);
        s -= p * c[j];
      }
      resid[k] = static_cast<double>(s);
    }
    const SolveReport r = solve(A, resid);
    for (int j = 0; j < m; ++j) c[j] += static_cast<long double>(r.solution[j]);
  }
  return c;
}

GeneratorScheme make_generator_scheme(int n, double beta, double eta) {
  check_order(n, 1);
  check_rates(beta, eta);
  GeneratorScheme s;
  s.order = n;
  s.eta = eta;
  s.beta = beta;
  s.c = generator_coefficients(n);
  return s;
}

}  // namespace ctpe
