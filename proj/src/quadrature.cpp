#include "ctpe/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "ctpe/errors.hpp"

namespace ctpe {
namespace {

// Gauss rules are eigen-decompositions of the Jacobi matrix of the weight's
// orthonormal recurrence: nodes are eigenvalues of the symmetric tridiagonal
// matrix with zero diagonal (symmetric weights) and off-diagonals offdiag[k],
// weights follow from the Christoffel function. Eigenvalues are found by
// Sturm bisection, which is bulletproof for tridiagonals of this size.

// Number of eigenvalues strictly below t (LDL^T inertia count).
int sturm_count(const std::vector<double>& offdiag, int n, double t) {
  int count = 0;
  double q = -t;
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      const double b = offdiag[k - 1];
      double denom = q;
      if (std::abs(denom) < 1e-300) denom = (denom < 0.0 ? -1e-300 : 1e-300);
      q = -t - b * b / denom;
    }
    if (q < 0.0) ++count;
  }
  return count;
}

std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& offdiag, int n) {
  double bound = 0.0;
  for (double b : offdiag) bound = std::max(bound, 2.0 * std::abs(b));
  bound += 1.0;
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) {
    double lo = -bound, hi = bound;
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (sturm_count(offdiag, n, mid) <= i) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (hi - lo < 1e-15 * bound) break;
    }
    eig[i] = 0.5 * (lo + hi);
  }
  return eig;
}

// w_i = mu0 / sum_k p_k(x_i)^2 over the orthonormal polynomials p_0..p_{n-1}.
std::vector<double> christoffel_weights(const std::vector<double>& nodes,
                                        const std::vector<double>& offdiag, double mu0) {
  const int n = static_cast<int>(nodes.size());
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double x = nodes[i];
    double pm = 0.0, p = 1.0, s = 1.0;
    for (int k = 1; k < n; ++k) {
      const double pn = (x * p - (k > 1 ? offdiag[k - 2] : 0.0) * pm) / offdiag[k - 1];
      pm = p;
      p = pn;
      s += p * p;
    }
    w[i] = mu0 / s;
  }
  return w;
}

QuadratureRule build_gauss_hermite(int n) {
  std::vector<double> offdiag(n - 1);
  for (int k = 1; k < n; ++k) offdiag[k - 1] = std::sqrt(0.5 * k);
  QuadratureRule rule;
  rule.nodes = tridiagonal_eigenvalues(offdiag, n);
  rule.weights = christoffel_weights(rule.nodes, offdiag, std::sqrt(std::numbers::pi));
  return rule;
}

}  // namespace

const QuadratureRule& gauss_hermite(int n) {
  if (n < 1) throw DomainError("gauss_hermite: need n >= 1");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_hermite(n)).first;
  return it->second;
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: need n >= 1");
  std::vector<double> offdiag(n - 1);
  for (int k = 1; k < n; ++k) {
    offdiag[k - 1] = static_cast<double>(k) / std::sqrt(4.0 * k * k - 1.0);
  }
  QuadratureRule rule;
  rule.nodes = tridiagonal_eigenvalues(offdiag, n);
  rule.weights = christoffel_weights(rule.nodes, offdiag, 2.0);
  return rule;
}

}  // namespace ctpe
