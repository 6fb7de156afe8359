#include "ctpe/linear_system.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace ctpe {
namespace {

struct LuFactors {
  Matrix lu;                  // L below diagonal (unit), U on/above
  std::vector<std::size_t> perm;  // PA = LU, row i of LU came from A.perm[i]
};

LuFactors factorize(Matrix a) {
  const std::size_t n = a.rows();
  LuFactors f{Matrix(), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best == 0.0) {
      throw SingularSystemError(
          "singular linear system: zero pivot at column " + std::to_string(k),
          static_cast<int>(k));
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a(i, k) / a(k, k);
      a(i, k) = m;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
    }
  }
  f.lu = std::move(a);
  return f;
}

// Solves A x = b given PA = LU.
std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
  const std::size_t n = f.lu.rows();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 1; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s / f.lu(i, i);
  }
  return x;
}

// Solves A^T z = c given PA = LU: U^T w = c, L^T u = w, z = P^{-1} u.
std::vector<double> lu_solve_transposed(const LuFactors& f, const std::vector<double>& c) {
  const std::size_t n = f.lu.rows();
  std::vector<double> w(c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = w[i];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu(j, i) * w[j];
    w[i] = s / f.lu(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = w[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= f.lu(j, i) * w[j];
    w[i] = s;
  }
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[f.perm[i]] = w[i];
  return z;
}

double norm1(const Matrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

// Hager's 1-norm estimator for ||A^{-1}||_1, capped at 20 solve pairs.
double inverse_norm1_estimate(const LuFactors& f) {
  const std::size_t n = f.lu.rows();
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  double est = 0.0;
  for (int iter = 0; iter < 20; ++iter) {
    const std::vector<double> y = lu_solve(f, x);
    double y1 = 0.0;
    for (double v : y) y1 += std::abs(v);
    est = std::max(est, y1);
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) xi[i] = (y[i] >= 0.0) ? 1.0 : -1.0;
    const std::vector<double> z = lu_solve_transposed(f, xi);
    std::size_t jmax = 0;
    double zmax = 0.0, zx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = std::abs(z[i]);
      if (a > zmax) {
        zmax = a;
        jmax = i;
      }
      zx += z[i] * x[i];
    }
    if (zmax <= zx + 1e-30) break;
    std::fill(x.begin(), x.end(), 0.0);
    x[jmax] = 1.0;
  }
  return est;
}

}  // namespace

SolveReport solve(const Matrix& A, const std::vector<double>& b, double ridge) {
  if (A.rows() != A.cols()) throw DomainError("solve: matrix must be square");
  if (A.rows() == 0) throw DomainError("solve: empty system");
  if (b.size() != A.rows()) throw DomainError("solve: rhs size mismatch");
  if (!(ridge >= 0.0)) throw DomainError("solve: ridge must be >= 0");

  const std::size_t n = A.rows();
  Matrix reg = A;
  if (ridge != 0.0) {
    for (std::size_t i = 0; i < n; ++i) reg(i, i) += ridge;
  }

  const LuFactors f = factorize(reg);

  SolveReport report;
  report.regularization = ridge;
  report.solution = lu_solve(f, b);
  report.condition_estimate = norm1(reg) * inverse_norm1_estimate(f);
  report.condition_warning = report.condition_estimate > kConditionWarnThreshold;

  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = -b[i];
    for (std::size_t j = 0; j < n; ++j) s += reg(i, j) * report.solution[j];
    rr += s * s;
  }
  report.residual_norm = std::sqrt(rr);
  return report;
}

}  // namespace ctpe
